import { readFileSync } from "node:fs";

/**
 * Column layouts the sweep harness writes. The harness records its schema
 * version in manifest.json; the CSV header doubles as the fingerprint here,
 * so a header mismatch means the file comes from a different schema version.
 */
export const RESULTS_SCHEMA_VERSION = "1";

export const RESULTS_HEADER = [
  "scenario",
  "sweep_variable",
  "sweep_value",
  "trial",
  "scheme",
  "channel",
  "ber",
  "ci95",
  "evm_db",
  "fec_pass",
  "status",
];

export const TAPS_HEADER = [
  "sweep_value",
  "trial",
  "scheme",
  "output_ch",
  "branch_kind",
  "branch_detail",
  "norm_db",
];

export const DUMP_HEADER = ["re", "im"];

export class PlotError extends Error {}

/** Input file does not match the CSV contract this tool understands. */
export class SchemaError extends PlotError {}

export interface ResultRow {
  scenario: string;
  sweepVariable: string;
  sweepValue: number;
  trial: number;
  scheme: string;
  channel: string;
  ber: number;
  ci95: number;
  evmDb: number;
  fecPass: boolean;
  status: string;
  /** original cells by column name, for exact --filter matching */
  raw: Record<string, string>;
}

export interface TapRow {
  sweepValue: number;
  trial: number;
  scheme: string;
  outputCh: string;
  branchKind: string;
  branchDetail: string;
  normDb: number;
  raw: Record<string, string>;
}

export interface DumpPoint {
  re: number;
  im: number;
}

// Harness cells never contain commas (the writer strips them), so a plain
// split honors the contract; a general CSV parser would silently accept
// quoting the contract forbids.
function readTable(path: string, header: string[], what: string): string[][] {
  const text = readFileSync(path, "utf8");
  const lines = text.split(/\r?\n/).filter((ln) => ln.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${path}: empty file`);
  }
  if (lines[0] !== header.join(",")) {
    throw new SchemaError(
      `${path}: ${what} header mismatch; this reader understands schema ` +
        `version ${RESULTS_SCHEMA_VERSION} (${header.join(",")}), ` +
        `got "${lines[0]}"`,
    );
  }
  return lines.slice(1).map((ln, i) => {
    const cells = ln.split(",");
    if (cells.length !== header.length) {
      throw new SchemaError(
        `${path}:${i + 2}: expected ${header.length} cells, got ${cells.length}`,
      );
    }
    return cells;
  });
}

// Numbers arrive as python float repr, so nan/inf spellings that Number()
// does not understand.
function numCell(cell: string, where: string): number {
  if (cell === "nan") return NaN;
  if (cell === "inf") return Infinity;
  if (cell === "-inf") return -Infinity;
  const v = Number(cell);
  if (cell.trim() === "" || Number.isNaN(v)) {
    throw new SchemaError(`${where}: not a number: "${cell}"`);
  }
  return v;
}

function intCell(cell: string, where: string): number {
  const v = numCell(cell, where);
  if (!Number.isInteger(v)) {
    throw new SchemaError(`${where}: not an integer: "${cell}"`);
  }
  return v;
}

function boolCell(cell: string, where: string): boolean {
  if (cell === "true") return true;
  if (cell === "false") return false;
  throw new SchemaError(`${where}: not a boolean: "${cell}"`);
}

function rawRecord(header: string[], cells: string[]): Record<string, string> {
  const raw: Record<string, string> = {};
  header.forEach((h, i) => {
    raw[h] = cells[i];
  });
  return raw;
}

export function readResultsCsv(path: string): ResultRow[] {
  return readTable(path, RESULTS_HEADER, "results.csv").map((cells, i) => {
    const where = `${path}:${i + 2}`;
    return {
      scenario: cells[0],
      sweepVariable: cells[1],
      sweepValue: numCell(cells[2], where),
      trial: intCell(cells[3], where),
      scheme: cells[4],
      channel: cells[5],
      ber: numCell(cells[6], where),
      ci95: numCell(cells[7], where),
      evmDb: numCell(cells[8], where),
      fecPass: boolCell(cells[9], where),
      status: cells[10],
      raw: rawRecord(RESULTS_HEADER, cells),
    };
  });
}

export function readTapsCsv(path: string): TapRow[] {
  return readTable(path, TAPS_HEADER, "taps.csv").map((cells, i) => {
    const where = `${path}:${i + 2}`;
    return {
      sweepValue: numCell(cells[0], where),
      trial: intCell(cells[1], where),
      scheme: cells[2],
      outputCh: cells[3],
      branchKind: cells[4],
      branchDetail: cells[5],
      normDb: numCell(cells[6], where),
      raw: rawRecord(TAPS_HEADER, cells),
    };
  });
}

export function readDumpCsv(path: string): DumpPoint[] {
  return readTable(path, DUMP_HEADER, "constellation dump").map((cells, i) => ({
    re: numCell(cells[0], `${path}:${i + 2}`),
    im: numCell(cells[1], `${path}:${i + 2}`),
  }));
}
