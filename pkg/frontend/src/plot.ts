#!/usr/bin/env node
// Render charts from a simulator trace CSV.
//
//   layered-num-plots trace.csv --links AB --users 0,1,2 --out figs
//   layered-num-plots trace.csv --users 0,1,2 --range 150:300 --out figs
//
// Each selected link becomes one price chart, the selected users share one
// rates chart. Event rows in the trace are drawn as vertical markers.

import { mkdirSync, readFileSync, realpathSync, writeFileSync } from "node:fs";
import path from "node:path";
import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { buildChart, EventMark, PALETTE, Series } from "./chart.js";
import { linkPrices, parseTrace, TraceData, TraceError, userRates } from "./trace.js";

const USAGE = `usage: layered-num-plots <trace.csv> [--links A,B] [--users 0,1] [--range LO:HI] [--out DIR]

  --links   comma separated link ids, one price chart each
  --users   comma separated user ids, drawn together in one rates chart
  --range   clip to an iteration window, e.g. 150:300
  --out     output directory for the SVG files (default .)
`;

interface Selection {
  trace: string;
  links: string[];
  users: string[];
  range: [number, number] | null;
  out: string;
}

function splitIds(raw: string[] | undefined): string[] {
  return (raw ?? []).flatMap((v) => v.split(",")).map((v) => v.trim()).filter((v) => v !== "");
}

function parseRange(raw: string): [number, number] {
  const m = /^(\d+):(\d+)$/.exec(raw);
  if (!m) throw new TraceError(`invalid range "${raw}": expected LO:HI`);
  const lo = parseInt(m[1], 10);
  const hi = parseInt(m[2], 10);
  if (lo > hi) throw new TraceError(`invalid range "${raw}": ${lo} > ${hi}`);
  return [lo, hi];
}

function renderAll(trace: TraceData, sel: Selection): string[] {
  if (trace.iterations === 0) throw new TraceError("trace has no data rows");

  let [lo, hi] = sel.range ?? [0, trace.iterations - 1];
  hi = Math.min(hi, trace.iterations - 1);
  if (lo > hi) throw new TraceError(`range starts past the last iteration ${trace.iterations - 1}`);

  const x: number[] = [];
  for (let it = lo; it <= hi; it++) x.push(it);
  const events: EventMark[] = trace.events.map((e) => ({ iteration: e.iteration, label: e.name }));
  const windowNote = sel.range ? ` (iterations ${lo}:${hi})` : "";

  // resolve every selection before writing anything, so an unknown id
  // never leaves partial output behind
  const linkSeries = sel.links.map((id) => linkPrices(trace, id).slice(lo, hi + 1));
  const userSeries: Series[] = sel.users.map((id, i) => ({
    label: `user ${id}`,
    color: PALETTE[i % PALETTE.length],
    values: userRates(trace, id).slice(lo, hi + 1),
  }));

  const written: string[] = [];
  mkdirSync(sel.out, { recursive: true });

  sel.links.forEach((id, i) => {
    const svg = buildChart({
      title: `link ${id} price${windowNote}`,
      yLabel: "price",
      x,
      series: [{ label: `link ${id}`, color: PALETTE[0], values: linkSeries[i] }],
      events,
    });
    const file = path.join(sel.out, `price-${id}.svg`);
    writeFileSync(file, svg);
    written.push(file);
  });

  if (userSeries.length > 0) {
    const svg = buildChart({ title: `user rates${windowNote}`, yLabel: "rate", x, series: userSeries, events });
    const file = path.join(sel.out, `rates-${sel.users.join("-")}.svg`);
    writeFileSync(file, svg);
    written.push(file);
  }

  return written;
}

export async function main(argv: string[]): Promise<number> {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        links: { type: "string", multiple: true },
        users: { type: "string", multiple: true },
        range: { type: "string" },
        out: { type: "string", default: "." },
        help: { type: "boolean", default: false },
      },
    });
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    console.error(USAGE);
    return 2;
  }

  if (parsed.values.help) {
    console.log(USAGE);
    return 0;
  }
  if (parsed.positionals.length !== 1) {
    console.error("error: expected exactly one trace path");
    console.error(USAGE);
    return 2;
  }

  const sel: Selection = {
    trace: parsed.positionals[0],
    links: splitIds(parsed.values.links),
    users: splitIds(parsed.values.users),
    range: null,
    out: parsed.values.out,
  };
  if (sel.links.length === 0 && sel.users.length === 0) {
    console.error("error: no entities selected");
    return 1;
  }

  try {
    if (parsed.values.range !== undefined) sel.range = parseRange(parsed.values.range);
    let text: string;
    try {
      text = readFileSync(sel.trace, "utf-8");
    } catch {
      console.error(`error: trace file not found: ${sel.trace}`);
      return 1;
    }
    const trace = parseTrace(text);
    const written = renderAll(trace, sel);
    for (const file of written) console.log(`SVG -> ${file}`);
    console.log(`${written.length} charts from ${trace.iterations} iterations.`);
    return 0;
  } catch (err) {
    if (err instanceof TraceError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

const entry = process.argv[1];
if (entry && import.meta.url === pathToFileURL(realpathSync(entry)).href) {
  main(process.argv.slice(2)).then((code) => process.exit(code));
}
