import { PlotError, ResultRow } from "./csv";
import {
  FONT,
  PALETTE,
  Scale,
  decadeTicks,
  esc,
  linearScale,
  linearTicks,
  log10Scale,
  px,
  sciLabel,
  svgDoc,
  tickLabel,
} from "./svg";

/** Nothing left to draw once filters and error rows are removed. */
export class EmptySelectionError extends PlotError {}

export interface CurvePoint {
  sweepValue: number;
  ber: number;
  halfwidth: number;
}

export interface Curve {
  key: string;
  points: CurvePoint[];
}

/**
 * Collapse result rows to one curve per scenario/scheme with one point per
 * sweep value. Trials are averaged; the mean of n independent estimates has
 * variance sum(var_i)/n^2, so the pooled halfwidth is sqrt(sum hw_i^2)/n.
 * Error rows (status != ok) carry no numbers and are skipped.
 */
export function buildCurves(rows: ResultRow[]): Curve[] {
  const scenarios = new Set(rows.map((r) => r.scenario));
  const groups = new Map<string, Map<number, { bers: number[]; hws: number[] }>>();
  for (const r of rows) {
    if (r.status !== "ok" || !Number.isFinite(r.ber)) continue;
    const key = scenarios.size > 1 ? `${r.scenario} ${r.scheme}` : r.scheme;
    let byValue = groups.get(key);
    if (!byValue) {
      byValue = new Map();
      groups.set(key, byValue);
    }
    let acc = byValue.get(r.sweepValue);
    if (!acc) {
      acc = { bers: [], hws: [] };
      byValue.set(r.sweepValue, acc);
    }
    acc.bers.push(r.ber);
    acc.hws.push(Number.isFinite(r.ci95) ? r.ci95 : 0);
  }
  const curves: Curve[] = [];
  for (const key of [...groups.keys()].sort()) {
    const byValue = groups.get(key)!;
    const points = [...byValue.keys()].sort((a, b) => a - b).map((sv) => {
      const acc = byValue.get(sv)!;
      const n = acc.bers.length;
      const ber = acc.bers.reduce((s, v) => s + v, 0) / n;
      const halfwidth = Math.sqrt(acc.hws.reduce((s, v) => s + v * v, 0)) / n;
      return { sweepValue: sv, ber, halfwidth };
    });
    curves.push({ key, points });
  }
  return curves;
}

const W = 760;
const H = 520;
const MARGIN = { left: 76, right: 24, top: 20, bottom: 56 };

/**
 * BER versus sweep value on a log BER axis, one curve per scenario/scheme,
 * error bars from the 95% CI halfwidths, dashed FEC threshold line. Points
 * whose mean BER is zero sit clamped on the axis floor.
 */
export function renderBerFigure(rows: ResultRow[], threshold: number): string {
  const variables = new Set(rows.map((r) => r.sweepVariable));
  if (variables.size > 1) {
    throw new PlotError(
      `cannot mix sweep variables on one axis: ${[...variables].sort().join(", ")}`,
    );
  }
  const curves = buildCurves(rows);
  const nPoints = curves.reduce((s, c) => s + c.points.length, 0);
  if (nPoints === 0) {
    throw new EmptySelectionError("no plottable rows after filtering");
  }

  const positive: number[] = [threshold];
  let xLo = Infinity;
  let xHi = -Infinity;
  for (const c of curves) {
    for (const p of c.points) {
      if (p.ber > 0) positive.push(p.ber);
      if (p.ber + p.halfwidth > 0) positive.push(p.ber + p.halfwidth);
      xLo = Math.min(xLo, p.sweepValue);
      xHi = Math.max(xHi, p.sweepValue);
    }
  }
  let yLo = Math.pow(10, Math.floor(Math.log10(Math.min(...positive)) + 1e-9));
  let yHi = Math.pow(10, Math.ceil(Math.log10(Math.max(...positive)) - 1e-9));
  if (yLo === yHi) {
    yLo /= 10;
    yHi *= 10;
  }
  const xPad = xHi > xLo ? (xHi - xLo) * 0.05 : 1;

  const left = MARGIN.left;
  const right = W - MARGIN.right;
  const top = MARGIN.top;
  const bottom = H - MARGIN.bottom;
  const xs: Scale = linearScale(xLo - xPad, xHi + xPad, left, right);
  const ys: Scale = log10Scale(yLo, yHi, bottom, top);
  const clampY = (v: number) => ys(Math.min(Math.max(v, yLo), yHi));

  let body = "";

  for (const t of decadeTicks(yLo, yHi)) {
    const y = px(ys(t));
    body += `<line x1="${left}" y1="${y}" x2="${right}" y2="${y}" stroke="#e0e0e0"/>\n`;
    const e = Math.round(Math.log10(t));
    const label = e === 0 ? "1" : `1e${e}`;
    body += `<text x="${left - 8}" y="${px(ys(t) + 4)}" text-anchor="end" ${FONT} font-size="12">${label}</text>\n`;
  }
  for (const t of linearTicks(xLo, xHi)) {
    const x = px(xs(t));
    body += `<line x1="${x}" y1="${top}" x2="${x}" y2="${bottom}" stroke="#eeeeee"/>\n`;
    body += `<text x="${x}" y="${bottom + 18}" text-anchor="middle" ${FONT} font-size="12">${tickLabel(t)}</text>\n`;
  }
  body += `<rect x="${left}" y="${top}" width="${right - left}" height="${bottom - top}" fill="none" stroke="#333333"/>\n`;

  const variable = rows.length ? rows[0].sweepVariable : "";
  body += `<text x="${px((left + right) / 2)}" y="${H - 14}" text-anchor="middle" ${FONT} font-size="13">${esc(variable)}</text>\n`;
  body +=
    `<text x="20" y="${px((top + bottom) / 2)}" text-anchor="middle" ${FONT} font-size="13" ` +
    `transform="rotate(-90 20 ${px((top + bottom) / 2)})">BER</text>\n`;

  const ty = px(ys(threshold));
  body +=
    `<line class="threshold" data-value="${threshold}" x1="${left}" y1="${ty}" ` +
    `x2="${right}" y2="${ty}" stroke="#555555" stroke-dasharray="6 4"/>\n`;
  body +=
    `<text x="${right - 4}" y="${px(ys(threshold) - 5)}" text-anchor="end" ${FONT} ` +
    `font-size="11" fill="#555555">FEC ${sciLabel(threshold)}</text>\n`;

  curves.forEach((curve, ci) => {
    const color = PALETTE[ci % PALETTE.length];
    let g = `<g class="curve" data-key="${esc(curve.key)}" stroke="${color}" fill="${color}">\n`;
    const pts = curve.points
      .map((p) => `${px(xs(p.sweepValue))},${px(clampY(p.ber))}`)
      .join(" ");
    g += `<polyline points="${pts}" fill="none" stroke-width="1.6"/>\n`;
    for (const p of curve.points) {
      const x = xs(p.sweepValue);
      if (p.halfwidth > 0) {
        const y1 = clampY(p.ber - p.halfwidth);
        const y2 = clampY(p.ber + p.halfwidth);
        g +=
          `<path class="errbar" stroke-width="1" fill="none" d="` +
          `M ${px(x - 4)} ${px(y1)} H ${px(x + 4)} ` +
          `M ${px(x)} ${px(y1)} V ${px(y2)} ` +
          `M ${px(x - 4)} ${px(y2)} H ${px(x + 4)}"/>\n`;
      }
      g += `<circle cx="${px(x)}" cy="${px(clampY(p.ber))}" r="3"/>\n`;
    }
    g += "</g>\n";
    body += g;
  });

  const labelWidth = Math.max(...curves.map((c) => c.key.length));
  const legendW = 40 + Math.round(labelWidth * 6.8);
  const legendH = 10 + curves.length * 17;
  // place the legend in whichever corner hides the fewest markers
  const markers: Array<[number, number]> = curves.flatMap((c) =>
    c.points.map((p): [number, number] => [xs(p.sweepValue), clampY(p.ber)]),
  );
  const corners: Array<[number, number]> = [
    [right - legendW - 8, top + 8],
    [left + 8, top + 8],
    [right - legendW - 8, bottom - legendH - 8],
    [left + 8, bottom - legendH - 8],
  ];
  let lx = corners[0][0];
  let ly = corners[0][1];
  let best = Infinity;
  for (const [cx, cy] of corners) {
    const hidden = markers.filter(
      ([mx, my]) =>
        mx >= cx - 6 && mx <= cx + legendW + 6 && my >= cy - 6 && my <= cy + legendH + 6,
    ).length;
    if (hidden < best) {
      best = hidden;
      lx = cx;
      ly = cy;
    }
  }
  body += `<rect x="${lx}" y="${ly}" width="${legendW}" height="${legendH}" fill="white" fill-opacity="0.85" stroke="#cccccc"/>\n`;
  curves.forEach((curve, ci) => {
    const color = PALETTE[ci % PALETTE.length];
    const yy = ly + 14 + ci * 17;
    body += `<line x1="${lx + 8}" y1="${yy}" x2="${lx + 28}" y2="${yy}" stroke="${color}" stroke-width="2"/>\n`;
    body += `<text x="${lx + 34}" y="${yy + 4}" ${FONT} font-size="12">${esc(curve.key)}</text>\n`;
  });

  return svgDoc(W, H, body);
}
