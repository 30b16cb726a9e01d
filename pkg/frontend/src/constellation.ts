import { DumpPoint, PlotError } from "./csv";
import { EmptySelectionError } from "./ber";
import { FONT, PALETTE, esc, linearScale, px, svgDoc } from "./svg";

export interface Panel {
  label: string;
  points: DumpPoint[];
}

const SIZE = 300;
const GAP = 18;
const MARGIN = { left: 16, right: 16, top: 36, bottom: 16 };

/**
 * One square scatter panel per dump, side by side. All panels share one
 * symmetric range so axes are equal within and across panels; a dashed unit
 * circle marks the nominal QPSK ring.
 */
export function renderConstellationFigure(panels: Panel[]): string {
  if (panels.length === 0) {
    throw new PlotError("no constellation dumps given");
  }
  const total = panels.reduce((s, p) => s + p.points.length, 0);
  if (total === 0) {
    throw new EmptySelectionError("constellation dumps contain no points");
  }

  let maxAbs = 1;
  for (const panel of panels) {
    for (const p of panel.points) {
      maxAbs = Math.max(maxAbs, Math.abs(p.re), Math.abs(p.im));
    }
  }
  const range = maxAbs * 1.08;

  const width = MARGIN.left + panels.length * SIZE + (panels.length - 1) * GAP + MARGIN.right;
  const height = MARGIN.top + SIZE + MARGIN.bottom;

  let body = "";
  panels.forEach((panel, i) => {
    const x0 = MARGIN.left + i * (SIZE + GAP);
    const y0 = MARGIN.top;
    const sx = linearScale(-range, range, x0, x0 + SIZE);
    const sy = linearScale(-range, range, y0 + SIZE, y0);
    const color = PALETTE[i % PALETTE.length];

    body += `<g class="panel" data-label="${esc(panel.label)}" data-range="${px(range)}">\n`;
    body += `<rect x="${x0}" y="${y0}" width="${SIZE}" height="${SIZE}" fill="none" stroke="#333333"/>\n`;
    body += `<line x1="${x0}" y1="${px(sy(0))}" x2="${x0 + SIZE}" y2="${px(sy(0))}" stroke="#dddddd"/>\n`;
    body += `<line x1="${px(sx(0))}" y1="${y0}" x2="${px(sx(0))}" y2="${y0 + SIZE}" stroke="#dddddd"/>\n`;
    body +=
      `<circle class="unit-circle" cx="${px(sx(0))}" cy="${px(sy(0))}" r="${px(sx(1) - sx(0))}" ` +
      `fill="none" stroke="#999999" stroke-dasharray="4 3"/>\n`;
    for (const p of panel.points) {
      body += `<circle class="pt" cx="${px(sx(p.re))}" cy="${px(sy(p.im))}" r="1.4" fill="${color}" fill-opacity="0.55"/>\n`;
    }
    body += `<text x="${px(x0 + SIZE / 2)}" y="${y0 - 12}" text-anchor="middle" ${FONT} font-size="13">${esc(panel.label)}</text>\n`;
    body += "</g>\n";
  });

  return svgDoc(width, height, body);
}
