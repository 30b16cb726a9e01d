import { TapRow } from "./csv";
import { EmptySelectionError } from "./ber";
import { FONT, PALETTE, esc, linearScale, linearTicks, px, svgDoc, tickLabel } from "./svg";

const W = 760;
const H = 440;
const MARGIN = { left: 64, right: 24, top: 20, bottom: 96 };

/**
 * Mean converged branch norm per (kind, detail), bars sorted strongest
 * first and colored by branch kind. Useful for eyeballing how far the
 * cancellation branches sit below the received ones.
 */
export function renderTapFigure(rows: TapRow[]): string {
  if (rows.length === 0) {
    throw new EmptySelectionError("no tap rows after filtering");
  }

  const groups = new Map<string, { kind: string; norms: number[] }>();
  for (const r of rows) {
    const key = r.branchDetail ? `${r.branchKind} ${r.branchDetail}` : r.branchKind;
    let acc = groups.get(key);
    if (!acc) {
      acc = { kind: r.branchKind, norms: [] };
      groups.set(key, acc);
    }
    acc.norms.push(r.normDb);
  }
  const bars = [...groups.entries()]
    .map(([key, g]) => ({
      key,
      kind: g.kind,
      mean: g.norms.reduce((s, v) => s + v, 0) / g.norms.length,
    }))
    .sort((a, b) => b.mean - a.mean || (a.key < b.key ? -1 : 1));
  const kinds = [...new Set(bars.map((b) => b.kind))].sort();

  let lo = Math.min(...bars.map((b) => b.mean));
  let hi = Math.max(...bars.map((b) => b.mean));
  lo = Math.floor(lo / 10) * 10 - 5;
  hi = Math.ceil(hi / 10) * 10 + 5;

  const left = MARGIN.left;
  const right = W - MARGIN.right;
  const top = MARGIN.top;
  const bottom = H - MARGIN.bottom;
  const ys = linearScale(lo, hi, bottom, top);

  let body = "";
  for (const t of linearTicks(lo, hi, 7)) {
    const y = px(ys(t));
    body += `<line x1="${left}" y1="${y}" x2="${right}" y2="${y}" stroke="#e0e0e0"/>\n`;
    body += `<text x="${left - 8}" y="${px(ys(t) + 4)}" text-anchor="end" ${FONT} font-size="12">${tickLabel(t)}</text>\n`;
  }
  body += `<rect x="${left}" y="${top}" width="${right - left}" height="${bottom - top}" fill="none" stroke="#333333"/>\n`;
  body +=
    `<text x="18" y="${px((top + bottom) / 2)}" text-anchor="middle" ${FONT} font-size="13" ` +
    `transform="rotate(-90 18 ${px((top + bottom) / 2)})">branch norm (dB)</text>\n`;

  const slot = (right - left) / bars.length;
  const barW = Math.min(40, slot * 0.7);
  bars.forEach((bar, i) => {
    const xc = left + slot * (i + 0.5);
    const color = PALETTE[kinds.indexOf(bar.kind) % PALETTE.length];
    const y = ys(bar.mean);
    body +=
      `<rect class="bar" data-key="${esc(bar.key)}" x="${px(xc - barW / 2)}" y="${px(y)}" ` +
      `width="${px(barW)}" height="${px(bottom - y)}" fill="${color}" fill-opacity="0.85"/>\n`;
    body +=
      `<text x="${px(xc)}" y="${bottom + 12}" text-anchor="end" ${FONT} font-size="10" ` +
      `transform="rotate(-40 ${px(xc)} ${bottom + 12})">${esc(bar.key)}</text>\n`;
  });

  kinds.forEach((kind, i) => {
    const yy = top + 14 + i * 16;
    const color = PALETTE[i % PALETTE.length];
    body += `<rect x="${right - 150}" y="${yy - 8}" width="12" height="12" fill="${color}" fill-opacity="0.85"/>\n`;
    body += `<text x="${right - 132}" y="${yy + 2}" ${FONT} font-size="12">${esc(kind)}</text>\n`;
  });

  return svgDoc(W, H, body);
}
