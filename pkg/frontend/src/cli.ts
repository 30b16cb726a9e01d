import { readdirSync, statSync } from "node:fs";
import { join } from "node:path";
import { parseArgs } from "node:util";
import { PlotError } from "./csv";
import { FEC_THRESHOLD, FigureKind, plotFigure } from "./plot";

const KINDS: Record<string, FigureKind> = {
  ber: "ber_curve",
  constellation: "constellation",
  taps: "tap_bars",
};

const USAGE = `usage:
  plot ber --in results.csv [--in more.csv ...] --out fig.svg
           [--filter scheme=linear,upic12] [--threshold 4.5e-3]
  plot constellation --in <dump.csv or directory> [--in ...] --out fig.svg
  plot taps --in taps.csv [--in ...] --out fig.svg [--filter scheme=upic12]

--filter matches raw CSV cells and may be repeated; ber figures default to
the pooled channel=all rows.`;

export function run(argv: string[]): number {
  try {
    return dispatch(argv);
  } catch (err) {
    if (err instanceof PlotError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    // fs and arg-parsing failures carry a code; anything else is a bug
    if (err instanceof Error && "code" in err) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

function dispatch(argv: string[]): number {
  if (argv.length === 0) {
    console.error(USAGE);
    return 1;
  }
  if (argv[0] === "--help" || argv[0] === "-h") {
    console.log(USAGE);
    return 0;
  }
  const kind = KINDS[argv[0]];
  if (!kind) {
    console.error(`error: unknown figure kind "${argv[0]}"\n${USAGE}`);
    return 1;
  }

  const { values } = parseArgs({
    args: argv.slice(1),
    options: {
      in: { type: "string", multiple: true },
      out: { type: "string" },
      filter: { type: "string", multiple: true },
      threshold: { type: "string" },
    },
  });
  if (!values.in || values.in.length === 0) {
    throw new PlotError("missing --in");
  }
  if (!values.out) {
    throw new PlotError("missing --out");
  }
  let threshold = FEC_THRESHOLD;
  if (values.threshold !== undefined) {
    threshold = Number(values.threshold);
    if (!Number.isFinite(threshold)) {
      throw new PlotError(`bad --threshold: ${values.threshold}`);
    }
  }

  const out = plotFigure({
    inputs: values.in.flatMap(expandDir),
    kind,
    output: values.out,
    threshold,
    filter: parseFilters(values.filter ?? []),
  });
  console.log(out);
  return 0;
}

/** A directory input stands for its .csv files, in sorted order. */
function expandDir(p: string): string[] {
  let st;
  try {
    st = statSync(p);
  } catch {
    return [p]; // missing paths get a proper message from plotFigure
  }
  if (!st.isDirectory()) {
    return [p];
  }
  const files = readdirSync(p)
    .filter((f) => f.endsWith(".csv"))
    .sort()
    .map((f) => join(p, f));
  if (files.length === 0) {
    throw new PlotError(`no .csv files in directory: ${p}`);
  }
  return files;
}

function parseFilters(specs: string[]): Record<string, string[]> {
  const out: Record<string, string[]> = {};
  for (const s of specs) {
    const i = s.indexOf("=");
    if (i <= 0) {
      throw new PlotError(`bad --filter (want column=v1,v2): ${s}`);
    }
    const key = s.slice(0, i);
    const vals = s.slice(i + 1).split(",").filter((v) => v.length > 0);
    if (vals.length === 0) {
      throw new PlotError(`bad --filter (no values): ${s}`);
    }
    out[key] = (out[key] ?? []).concat(vals);
  }
  return out;
}
