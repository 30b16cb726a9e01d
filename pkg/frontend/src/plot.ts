import { existsSync, mkdirSync, writeFileSync } from "node:fs";
import { basename, dirname } from "node:path";
import {
  PlotError,
  RESULTS_HEADER,
  TAPS_HEADER,
  readDumpCsv,
  readResultsCsv,
  readTapsCsv,
} from "./csv";
import { renderBerFigure } from "./ber";
import { renderConstellationFigure } from "./constellation";
import { renderTapFigure } from "./taps";

export type FigureKind = "ber_curve" | "constellation" | "tap_bars";

export const FEC_THRESHOLD = 4.5e-3;

export interface PlotSpec {
  inputs: string[];
  kind: FigureKind;
  output: string;
  /** horizontal FEC line for ber_curve figures */
  threshold?: number;
  /** column -> accepted raw cell values, matched as written in the CSV */
  filter?: Record<string, string[]>;
}

interface HasRaw {
  raw: Record<string, string>;
}

export function applyFilter<T extends HasRaw>(
  rows: T[],
  columns: string[],
  filter: Record<string, string[]>,
): T[] {
  for (const key of Object.keys(filter)) {
    if (!columns.includes(key)) {
      throw new PlotError(`unknown filter column: ${key} (have ${columns.join(", ")})`);
    }
  }
  const entries = Object.entries(filter);
  return rows.filter((r) => entries.every(([k, vals]) => vals.includes(r.raw[k])));
}

/**
 * Render the figure described by the spec and write it to spec.output.
 * The SVG is built fully in memory first, so a failing render never leaves
 * an empty or truncated image behind. Returns the output path.
 */
export function plotFigure(spec: PlotSpec): string {
  if (spec.inputs.length === 0) {
    throw new PlotError("no input files given");
  }
  for (const p of spec.inputs) {
    if (!existsSync(p)) {
      throw new PlotError(`no such input: ${p}`);
    }
  }
  const threshold = spec.threshold ?? FEC_THRESHOLD;
  if (!(threshold > 0)) {
    throw new PlotError(`threshold must be > 0, got ${threshold}`);
  }

  let svg: string;
  switch (spec.kind) {
    case "ber_curve": {
      const rows = spec.inputs.flatMap(readResultsCsv);
      // per-channel rows would duplicate every curve; default to the pooled
      // row and let an explicit channel filter override
      const filtered = applyFilter(rows, RESULTS_HEADER, {
        channel: ["all"],
        ...spec.filter,
      });
      svg = renderBerFigure(filtered, threshold);
      break;
    }
    case "constellation": {
      const panels = spec.inputs.map((p) => ({
        label: basename(p).replace(/\.csv$/, ""),
        points: readDumpCsv(p),
      }));
      svg = renderConstellationFigure(panels);
      break;
    }
    case "tap_bars": {
      const rows = spec.inputs.flatMap(readTapsCsv);
      const filtered = applyFilter(rows, TAPS_HEADER, spec.filter ?? {});
      svg = renderTapFigure(filtered);
      break;
    }
    default:
      throw new PlotError(`unknown figure kind: ${(spec as { kind: string }).kind}`);
  }

  const dir = dirname(spec.output);
  if (dir) mkdirSync(dir, { recursive: true });
  writeFileSync(spec.output, svg);
  return spec.output;
}
