// Small hand-rolled SVG helpers. Figures are built as plain strings with
// fixed sizes and no timestamps or randomness, so the same inputs always
// produce the same bytes.

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#e377c2",
  "#17becf",
];

export const FONT = 'font-family="sans-serif"';

export type Scale = (v: number) => number;

/** Coordinate formatting at 2 decimals; keeps output small and byte-stable. */
export function px(v: number): string {
  const r = Math.round(v * 100) / 100;
  return Object.is(r, -0) ? "0" : String(r);
}

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const k = (r1 - r0) / (d1 - d0);
  return (v) => r0 + (v - d0) * k;
}

export function log10Scale(d0: number, d1: number, r0: number, r1: number): Scale {
  const s = linearScale(Math.log10(d0), Math.log10(d1), r0, r1);
  return (v) => s(Math.log10(v));
}

/** Tick positions at 1/2/5 steps covering [lo, hi]. */
export function linearTicks(lo: number, hi: number, target = 6): number[] {
  const span = hi - lo;
  if (!(span > 0)) return [lo];
  const raw = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  let step = mag * 10;
  for (const m of [1, 2, 5]) {
    if (mag * m >= raw) {
      step = mag * m;
      break;
    }
  }
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    // re-snap to the grid so accumulated fp error cannot shift labels
    ticks.push(Math.round(v / step) * step);
  }
  return ticks;
}

/** Powers of ten inside [lo, hi]. */
export function decadeTicks(lo: number, hi: number): number[] {
  const a = Math.ceil(Math.log10(lo) - 1e-9);
  const b = Math.floor(Math.log10(hi) + 1e-9);
  const out: number[] = [];
  for (let e = a; e <= b; e++) out.push(Math.pow(10, e));
  return out;
}

export function tickLabel(v: number): string {
  return String(parseFloat(v.toPrecision(12)));
}

/** 4.5e-3 style label for threshold and log-axis annotations. */
export function sciLabel(v: number): string {
  return v.toExponential().replace("e+", "e");
}

export function svgDoc(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n` +
    body +
    "</svg>\n"
  );
}
