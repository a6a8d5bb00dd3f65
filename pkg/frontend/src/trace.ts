/**
 * Reader for simulator trace CSVs.
 *
 * Expected schema (one header line, then one row per entity per iteration,
 * plus event rows):
 *
 *   iteration,kind,id,price,rate,layer,note
 *
 * kind "link" rows carry a price, "user" rows carry a rate and layer,
 * "event" rows mark scenario events (demand changes, admission) and carry
 * a free-text note. Anything that deviates raises TraceError so callers
 * can tell a malformed trace from a missing entity.
 */

import Papa from "papaparse";

export const COLUMNS = ["iteration", "kind", "id", "price", "rate", "layer", "note"] as const;

export interface TraceEvent {
  iteration: number;
  name: string;
  note: string;
}

export interface TraceData {
  /** Number of iterations covered (max iteration + 1, 0 for header-only files). */
  iterations: number;
  /** Price series per link id, indexed by iteration. */
  links: Map<string, number[]>;
  /** Rate series per user id, indexed by iteration. */
  users: Map<string, number[]>;
  events: TraceEvent[];
}

export class TraceError extends Error {}

type Row = Record<string, string>;

function fail(line: number, reason: string): never {
  throw new TraceError(`malformed trace row ${line}: ${reason}`);
}

function intField(raw: string, line: number, what: string): number {
  if (!/^\d+$/.test(raw)) fail(line, `${what} "${raw}" is not a non-negative integer`);
  return parseInt(raw, 10);
}

function numField(raw: string, line: number, what: string): number {
  if (raw === "") fail(line, `empty ${what}`);
  const v = Number(raw);
  if (!Number.isFinite(v)) fail(line, `${what} "${raw}" is not a finite number`);
  return v;
}

/** Parse trace CSV text. Throws TraceError on any schema violation. */
export function parseTrace(text: string): TraceData {
  const parsed = Papa.parse<Row>(text, { header: true, skipEmptyLines: true });

  const fields = parsed.meta.fields ?? [];
  if (fields.length !== COLUMNS.length || COLUMNS.some((c, i) => fields[i] !== c)) {
    throw new TraceError(`not a trace CSV: expected header "${COLUMNS.join(",")}"`);
  }
  for (const e of parsed.errors) {
    // papaparse reports field-count mismatches per data row
    fail((e.row ?? 0) + 2, e.message);
  }

  const links = new Map<string, number[]>();
  const users = new Map<string, number[]>();
  const events: TraceEvent[] = [];
  let iterations = 0;

  parsed.data.forEach((row, i) => {
    const line = i + 2; // header is line 1
    const it = intField(row.iteration, line, "iteration");
    iterations = Math.max(iterations, it + 1);
    switch (row.kind) {
      case "link": {
        const series = links.get(row.id) ?? [];
        series[it] = numField(row.price, line, "price");
        links.set(row.id, series);
        break;
      }
      case "user": {
        const series = users.get(row.id) ?? [];
        series[it] = numField(row.rate, line, "rate");
        users.set(row.id, series);
        intField(row.layer, line, "layer");
        break;
      }
      case "event":
        events.push({ iteration: it, name: row.id, note: row.note });
        break;
      default:
        fail(line, `unknown kind "${row.kind}"`);
    }
  });

  // every entity must be present at every iteration, holes mean a truncated
  // or hand-edited file
  for (const [kind, byId] of [["link", links], ["user", users]] as const) {
    for (const [id, series] of byId) {
      for (let it = 0; it < iterations; it++) {
        if (series[it] === undefined) {
          throw new TraceError(`malformed trace: ${kind} ${id} has no row for iteration ${it}`);
        }
      }
    }
  }

  return { iterations, links, users, events };
}

export function linkPrices(trace: TraceData, id: string): number[] {
  const series = trace.links.get(id);
  if (!series) throw new TraceError(`unknown link ${id}`);
  return series;
}

export function userRates(trace: TraceData, id: string): number[] {
  const series = trace.users.get(id);
  if (!series) throw new TraceError(`unknown user ${id}`);
  return series;
}
