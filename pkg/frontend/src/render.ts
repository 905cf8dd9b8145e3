/** Deterministic SVG rendering: fixed geometry, palette and formatting,
 *  no timestamps or generated ids, so identical inputs give identical bytes. */

import { linearScale, logScale, Scale, tickLabel } from "./scale.js";

export interface Curve {
  label: string;
  x: number[];
  y: number[];
  colorIndex: number;
  dashed: boolean;
}

export interface Band {
  x: number[];
  lo: number[];
  hi: number[];
  colorIndex: number;
}

export interface RenderSpec {
  curves: Curve[];
  bands: Band[];
  logY: boolean;
  xLabel: string;
  yLabel: string;
}

const WIDTH = 860;
const HEIGHT = 560;
const MARGIN = { left: 78, right: 24, top: 28, bottom: 56 };

const PALETTE = [
  "#1f6fb4", "#d1495b", "#3e8e5a", "#8a5bb8", "#c07f1f",
  "#4a9fa8", "#7b6150", "#5b6a8a", "#9a9a30", "#b05bb0",
];

const color = (index: number) => PALETTE[index % PALETTE.length];
const px = (v: number) => v.toFixed(2);

function finitePairs(x: number[], y: number[], logY: boolean): [number, number][] {
  const pairs: [number, number][] = [];
  for (let i = 0; i < x.length; i++) {
    if (!Number.isFinite(x[i]) || !Number.isFinite(y[i])) continue;
    if (logY && y[i] <= 0) continue;
    pairs.push([x[i], y[i]]);
  }
  return pairs;
}

function pathFrom(pairs: [number, number][], xs: Scale, ys: Scale): string {
  return pairs
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${px(xs.map(x))},${px(ys.map(y))}`)
    .join("");
}

export function renderSvg(spec: RenderSpec): string {
  const allPairs = spec.curves.flatMap((c) => finitePairs(c.x, c.y, spec.logY));
  const bandPairs = spec.bands.flatMap((b) => [
    ...finitePairs(b.x, b.lo, spec.logY),
    ...finitePairs(b.x, b.hi, spec.logY),
  ]);
  const visible = [...allPairs, ...bandPairs];
  if (visible.length === 0) {
    throw new Error("nothing to plot: no finite data points" +
      (spec.logY ? " above zero (log scale)" : ""));
  }
  const xValues = visible.map(([x]) => x);
  const yValues = visible.map(([, y]) => y);
  const xLo = Math.min(...xValues);
  const xHi = Math.max(...xValues);
  const yLo = Math.min(...yValues);
  const yHi = Math.max(...yValues);
  const xs = linearScale(xLo, xHi, MARGIN.left, WIDTH - MARGIN.right);
  const ys = spec.logY
    ? logScale(yLo, yHi, HEIGHT - MARGIN.bottom, MARGIN.top)
    : linearScale(yLo, yHi, HEIGHT - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);

  // grid and axes
  const plotBottom = HEIGHT - MARGIN.bottom;
  for (const tick of xs.ticks()) {
    const x = px(xs.map(tick));
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${plotBottom}" stroke="#e4e4e4" stroke-width="1"/>`,
      `<text x="${x}" y="${plotBottom + 18}" font-size="12" fill="#444444" text-anchor="middle">${tickLabel(tick)}</text>`,
    );
  }
  for (const tick of ys.ticks()) {
    const y = px(ys.map(tick));
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${WIDTH - MARGIN.right}" y2="${y}" stroke="#e4e4e4" stroke-width="1"/>`,
      `<text x="${MARGIN.left - 8}" y="${y}" font-size="12" fill="#444444" text-anchor="end" dominant-baseline="middle">${tickLabel(tick)}</text>`,
    );
  }
  parts.push(
    `<line x1="${MARGIN.left}" y1="${plotBottom}" x2="${WIDTH - MARGIN.right}" y2="${plotBottom}" stroke="#222222" stroke-width="1.5"/>`,
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${plotBottom}" stroke="#222222" stroke-width="1.5"/>`,
    `<text x="${(MARGIN.left + WIDTH - MARGIN.right) / 2}" y="${HEIGHT - 14}" font-size="14" fill="#222222" text-anchor="middle">${spec.xLabel}</text>`,
    `<text x="20" y="${(MARGIN.top + plotBottom) / 2}" font-size="14" fill="#222222" text-anchor="middle" transform="rotate(-90 20 ${(MARGIN.top + plotBottom) / 2})">${spec.yLabel}</text>`,
  );

  // shaded uncertainty bands under the curves
  for (const band of spec.bands) {
    const lo = finitePairs(band.x, band.lo, spec.logY);
    const hi = finitePairs(band.x, band.hi, spec.logY);
    if (lo.length < 2 || hi.length < 2) continue;
    const forward = pathFrom(hi, xs, ys);
    const backward = lo
      .slice()
      .reverse()
      .map(([x, y]) => `L${px(xs.map(x))},${px(ys.map(y))}`)
      .join("");
    parts.push(
      `<path d="${forward}${backward}Z" fill="${color(band.colorIndex)}" fill-opacity="0.15" stroke="none"/>`,
    );
  }

  for (const curve of spec.curves) {
    const pairs = finitePairs(curve.x, curve.y, spec.logY);
    if (pairs.length === 0) continue;
    const dash = curve.dashed ? ' stroke-dasharray="7,4"' : "";
    parts.push(
      `<path d="${pathFrom(pairs, xs, ys)}" fill="none" stroke="${color(curve.colorIndex)}" stroke-width="1.8"${dash}/>`,
    );
  }

  // legend, top-right inside the plot area
  const legendX = WIDTH - MARGIN.right - 250;
  let legendY = MARGIN.top + 10;
  parts.push(
    `<rect x="${legendX - 8}" y="${legendY - 14}" width="252" height="${spec.curves.length * 18 + 10}" fill="#ffffff" fill-opacity="0.85" stroke="#cccccc"/>`,
  );
  for (const curve of spec.curves) {
    const dash = curve.dashed ? ' stroke-dasharray="7,4"' : "";
    parts.push(
      `<line x1="${legendX}" y1="${legendY - 4}" x2="${legendX + 26}" y2="${legendY - 4}" stroke="${color(curve.colorIndex)}" stroke-width="1.8"${dash}/>`,
      `<text x="${legendX + 32}" y="${legendY}" font-size="12" fill="#222222">${escapeXml(curve.label)}</text>`,
    );
    legendY += 18;
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
