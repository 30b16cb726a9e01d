import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { EmptySelectionError, buildCurves, renderBerFigure } from "../src/ber";
import { PlotError, RESULTS_HEADER, ResultRow, readResultsCsv } from "../src/csv";
import { applyFilter } from "../src/plot";

const FX = join(__dirname, "fixtures");

function mkRow(p: Partial<ResultRow> & { sweepValue: number; ber: number }): ResultRow {
  return {
    scenario: "s",
    sweepVariable: "input_power_dbm",
    trial: 0,
    scheme: "linear",
    channel: "all",
    ci95: 0,
    evmDb: -10,
    fecPass: p.ber <= 4.5e-3,
    status: "ok",
    raw: {},
    ...p,
  };
}

function goldenRows(): ResultRow[] {
  const rows = ["results_k002.csv", "results_k005.csv", "results_k020.csv"]
    .flatMap((f) => readResultsCsv(join(FX, f)));
  return applyFilter(rows, RESULTS_HEADER, {
    channel: ["all"],
    scheme: ["linear", "upic12"],
  });
}

describe("buildCurves", () => {
  it("averages trials and pools the interval widths", () => {
    const rows = [
      mkRow({ sweepValue: 8, ber: 0.01, ci95: 0.001 }),
      mkRow({ sweepValue: 8, ber: 0.03, ci95: 0.002, trial: 1 }),
    ];
    const curves = buildCurves(rows);
    expect(curves).toHaveLength(1);
    expect(curves[0].points).toHaveLength(1);
    const pt = curves[0].points[0];
    expect(pt.ber).toBeCloseTo(0.02, 12);
    // variance of the mean of independent estimates
    expect(pt.halfwidth).toBeCloseTo(Math.sqrt(1e-6 + 4e-6) / 2, 12);
  });

  it("skips error rows", () => {
    const rows = [
      mkRow({ sweepValue: 8, ber: 0.01 }),
      mkRow({ sweepValue: 12, ber: NaN, status: "error: LoStarvedError: dark" }),
    ];
    const curves = buildCurves(rows);
    expect(curves).toHaveLength(1);
    expect(curves[0].points).toHaveLength(1);
  });

  it("labels by scheme alone for a single scenario", () => {
    const curves = buildCurves([
      mkRow({ sweepValue: 8, ber: 0.01 }),
      mkRow({ sweepValue: 8, ber: 0.001, scheme: "upic12" }),
    ]);
    expect(curves.map((c) => c.key)).toEqual(["linear", "upic12"]);
  });

  it("prefixes the scenario when several are mixed", () => {
    const curves = buildCurves([
      mkRow({ sweepValue: 8, ber: 0.01 }),
      mkRow({ sweepValue: 8, ber: 0.02, scenario: "t" }),
    ]);
    expect(curves.map((c) => c.key)).toEqual(["s linear", "t linear"]);
  });

  it("sorts points by sweep value whatever the row order", () => {
    const curves = buildCurves([
      mkRow({ sweepValue: 16, ber: 0.03 }),
      mkRow({ sweepValue: 8, ber: 0.01 }),
      mkRow({ sweepValue: 12, ber: 0.02 }),
    ]);
    expect(curves[0].points.map((p) => p.sweepValue)).toEqual([8, 12, 16]);
  });
});

describe("renderBerFigure", () => {
  it("draws one curve per scenario and scheme from the golden sweeps", () => {
    const svg = renderBerFigure(goldenRows(), 4.5e-3);
    expect((svg.match(/class="curve"/g) ?? []).length).toBe(6);
    // every curve covers the three swept powers
    const polylines = [...svg.matchAll(/<polyline points="([^"]+)"/g)];
    expect(polylines).toHaveLength(6);
    for (const m of polylines) {
      expect(m[1].split(" ")).toHaveLength(3);
    }
    for (const key of ["coupler_k002 linear", "coupler_k020 upic12"]) {
      expect(svg).toContain(`data-key="${key}"`);
    }
  });

  it("places the dashed threshold line at the requested value", () => {
    const svg = renderBerFigure(goldenRows(), 4.5e-3);
    expect(svg).toContain('class="threshold"');
    expect(svg).toContain('data-value="0.0045"');
    expect(svg).toMatch(/class="threshold"[^>]*stroke-dasharray/);
    expect(svg).toContain("FEC 4.5e-3");
  });

  it("draws error bars from the interval column", () => {
    const svg = renderBerFigure(goldenRows(), 4.5e-3);
    expect((svg.match(/class="errbar"/g) ?? []).length).toBeGreaterThan(0);
  });

  it("throws on an empty selection instead of rendering", () => {
    expect(() => renderBerFigure([], 4.5e-3)).toThrow(EmptySelectionError);
    const onlyErrors = [mkRow({ sweepValue: 8, ber: NaN, status: "error: x" })];
    expect(() => renderBerFigure(onlyErrors, 4.5e-3)).toThrow(EmptySelectionError);
  });

  it("refuses to mix sweep variables on one axis", () => {
    const rows = [
      mkRow({ sweepValue: 8, ber: 0.01 }),
      mkRow({ sweepValue: 9, ber: 0.01, sweepVariable: "pspr_tx_db" }),
    ];
    expect(() => renderBerFigure(rows, 4.5e-3)).toThrow(PlotError);
  });

  it("clamps zero BER onto the axis floor without breaking the geometry", () => {
    const rows = [
      mkRow({ sweepValue: 8, ber: 0, ci95: 6e-5 }),
      mkRow({ sweepValue: 12, ber: 1e-3, ci95: 1e-4 }),
    ];
    const svg = renderBerFigure(rows, 4.5e-3);
    expect(svg).not.toContain("NaN");
    expect(svg).not.toContain("Infinity");
  });
});
