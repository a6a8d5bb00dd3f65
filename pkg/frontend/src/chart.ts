// Line charts as standalone SVG strings. No DOM, no canvas: the output is
// deterministic text, so rebuilding from the same series is byte-identical.

export interface Series {
  label: string;
  color: string;
  /** y values, aligned with ChartOpts.x */
  values: number[];
  width?: number;
  dash?: string;
}

export interface EventMark {
  iteration: number;
  label: string;
}

export interface ChartOpts {
  title: string;
  subtitle?: string;
  yLabel: string;
  /** x axis values (iteration numbers, already range-clipped) */
  x: number[];
  series: Series[];
  events?: EventMark[];
}

export const PALETTE = ["#1c6fb8", "#d1495b", "#2d8a4e", "#b07a1e", "#6a4c93", "#444444"];

const COL_EVENT = "#9d4edd";

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

/** Round tick positions covering [min, max], at most roughly `count` of them. */
export function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((n) => n >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9; v += step) {
    // snap away float drift so labels stay short
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : Number(v.toPrecision(12)));
  }
  return ticks;
}

const fmt = (v: number) => (v % 1 === 0 ? String(v) : String(Number(v.toFixed(3))));

// ---------------------------------------------------------------------------
// Chart builder
// ---------------------------------------------------------------------------

export function buildChart(opts: ChartOpts): string {
  const { x, series, events = [] } = opts;
  if (x.length === 0) throw new Error("buildChart: empty x axis");
  for (const sr of series) {
    if (sr.values.length !== x.length) {
      throw new Error(`buildChart: series "${sr.label}" has ${sr.values.length} values for ${x.length} x points`);
    }
  }

  const W = 720, H = 300;
  const ml = 52, mr = 16, mt = 34, mb = 40;
  const pw = W - ml - mr;
  const ph = H - mt - mb;

  const xMin = x[0], xMax = x[x.length - 1];
  const xOf = (v: number) => ml + ((v - xMin) / (xMax - xMin || 1)) * pw;

  const all = series.flatMap((s) => s.values);
  const dataMin = Math.min(...all);
  const dataMax = Math.max(...all);
  const yMin = Math.min(0, dataMin);
  const yMax = dataMax > yMin ? dataMax + (dataMax - yMin) * 0.08 : yMin + 1;
  const yOf = (v: number) => mt + ph - ((v - yMin) / (yMax - yMin)) * ph;

  let s = `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif">\n`;
  s += `<rect width="${W}" height="${H}" fill="#fff"/>\n`;
  s += `<text x="${ml}" y="16" font-size="11" font-weight="600" fill="#222">${esc(opts.title)}</text>\n`;
  if (opts.subtitle) {
    s += `<text x="${ml}" y="27" font-size="8" fill="#888">${esc(opts.subtitle)}</text>\n`;
  }

  // grid + left ticks
  const yTicks = niceTicks(yMin, yMax, 5);
  for (const v of yTicks) {
    const y = yOf(v).toFixed(1);
    s += `<line x1="${ml}" y1="${y}" x2="${ml + pw}" y2="${y}" stroke="#eee" stroke-width="0.5"/>\n`;
    s += `<text x="${ml - 5}" y="${(yOf(v) + 2.5).toFixed(1)}" text-anchor="end" font-size="7" fill="#555">${fmt(v)}</text>\n`;
  }

  // event markers: vertical dashed lines with a label at the top
  for (const ev of events) {
    if (ev.iteration < xMin || ev.iteration > xMax) continue;
    const ex = xOf(ev.iteration).toFixed(1);
    s += `<line class="event" data-event="${esc(ev.label)}" data-iteration="${ev.iteration}" `
      + `x1="${ex}" y1="${mt}" x2="${ex}" y2="${mt + ph}" stroke="${COL_EVENT}" stroke-width="0.8" stroke-dasharray="4,3" opacity="0.7"/>\n`;
    s += `<text x="${(xOf(ev.iteration) + 3).toFixed(1)}" y="${mt + 9}" font-size="6.5" fill="${COL_EVENT}">${esc(ev.label)} @ ${ev.iteration}</text>\n`;
  }

  // series
  for (const sr of series) {
    const pts = x.map((xv, i) => `${xOf(xv).toFixed(1)},${yOf(sr.values[i]).toFixed(1)}`).join(" ");
    s += `<polyline class="series" data-series="${esc(sr.label)}" fill="none" stroke="${sr.color}" `
      + `stroke-width="${sr.width ?? 1.1}"${sr.dash ? ` stroke-dasharray="${sr.dash}"` : ""} points="${pts}"/>\n`;
  }

  // axes
  s += `<line x1="${ml}" y1="${mt}" x2="${ml}" y2="${mt + ph}" stroke="#333" stroke-width="0.7"/>\n`;
  s += `<line x1="${ml}" y1="${mt + ph}" x2="${ml + pw}" y2="${mt + ph}" stroke="#333" stroke-width="0.7"/>\n`;

  for (const v of niceTicks(xMin, xMax, 8)) {
    const tx = xOf(v).toFixed(1);
    s += `<line x1="${tx}" y1="${mt + ph}" x2="${tx}" y2="${mt + ph + 3}" stroke="#333" stroke-width="0.5"/>\n`;
    s += `<text x="${tx}" y="${mt + ph + 12}" text-anchor="middle" font-size="7" fill="#555">${fmt(v)}</text>\n`;
  }
  s += `<text x="${ml + pw / 2}" y="${H - 6}" text-anchor="middle" font-size="8" fill="#444">iteration</text>\n`;
  s += `<text x="12" y="${mt + ph / 2}" text-anchor="middle" font-size="8" fill="#444" transform="rotate(-90,12,${mt + ph / 2})">${esc(opts.yLabel)}</text>\n`;

  if (series.length > 1) {
    const lx = ml + 8;
    series.forEach((sr, i) => {
      const ly = mt + 8 + i * 11;
      s += `<line x1="${lx}" y1="${ly}" x2="${lx + 14}" y2="${ly}" stroke="${sr.color}" stroke-width="1.4"/>\n`;
      s += `<text x="${lx + 18}" y="${ly + 2.5}" font-size="7" fill="#444">${esc(sr.label)}</text>\n`;
    });
  }

  s += `</svg>\n`;
  return s;
}
