import Papa from "papaparse";
import type { ImputeRequest } from "./types";

export interface ParsedBatch {
  ok: boolean;
  rows: ImputeRequest[];
  preview: ImputeRequest[]; // first 5 rows shown before submit
  diagnostics: string[];
}

const TS_KEYS = ["timestamp", "time", "datetime", "t"];
const LAT_KEYS = ["lat", "latitude"];
const LON_KEYS = ["lon", "lng", "longitude"];
const TIDE_KEYS = ["tide", "tide_m", "tide_height"];

function pick(row: Record<string, string>, keys: string[]): string | undefined {
  for (const k of keys) {
    if (k in row && row[k] !== "") return row[k];
  }
  return undefined;
}

// Header and structure problems reject the whole file with row
// diagnostics; value-level problems (bad coords, bad timestamps) pass
// through so the service can report them per row.
export function parseBatch(text: string): ParsedBatch {
  const diagnostics: string[] = [];
  if (text.trim() === "") {
    return { ok: false, rows: [], preview: [], diagnostics: ["file is empty"] };
  }

  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
    transformHeader: h => h.trim().toLowerCase()
  });
  for (const e of parsed.errors) {
    diagnostics.push(`row ${e.row === undefined ? "?" : e.row + 1}: ${e.message}`);
  }

  const header = parsed.meta.fields ?? [];
  for (const [keys, name] of [[TS_KEYS, "timestamp"], [LAT_KEYS, "lat"],
                              [LON_KEYS, "lon"]] as [string[], string][]) {
    if (!keys.some(k => header.includes(k))) {
      diagnostics.push(`header lacks a ${name} column`);
    }
  }
  if (diagnostics.length > 0) {
    return { ok: false, rows: [], preview: [], diagnostics };
  }
  if (parsed.data.length === 0) {
    return { ok: false, rows: [], preview: [], diagnostics: ["file has a header but no rows"] };
  }

  const rows: ImputeRequest[] = parsed.data.map(raw => {
    const req: ImputeRequest = {
      timestamp: pick(raw, TS_KEYS) ?? "",
      lat: Number(pick(raw, LAT_KEYS)),
      lon: Number(pick(raw, LON_KEYS))
    };
    const tide = pick(raw, TIDE_KEYS);
    if (tide !== undefined) req.tide = Number(tide);
    return req;
  });
  return { ok: true, rows, preview: rows.slice(0, 5), diagnostics: [] };
}
