/** Minimal canvas line plots. Series are decimated before drawing so a
 *  full 5000-point ring stays responsive; the plotted shape still spans the
 *  complete buffered range. */

import { decimate } from "./decimate.js";

export const MAX_DRAWN_POINTS = 2000;

/** The slice of CanvasRenderingContext2D the plots use; kept narrow so
 *  tests can pass a call recorder instead of a real canvas. */
export interface Ctx2D {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
}

export interface Series {
  label: string;
  color: string;
  points: { x: number; y: number }[];
}

export interface PlotOptions {
  yMin?: number;
  yMax?: number;
  xLabel?: string;
}

const MARGIN = { left: 44, right: 8, top: 22, bottom: 20 };

function bounds(values: number[], lo?: number, hi?: number): [number, number] {
  let min = lo ?? Infinity;
  let max = hi ?? -Infinity;
  if (lo === undefined || hi === undefined) {
    for (const v of values) {
      if (lo === undefined && v < min) min = v;
      if (hi === undefined && v > max) max = v;
    }
  }
  if (!Number.isFinite(min) || !Number.isFinite(max)) {
    return [0, 1];
  }
  if (min === max) {
    return [min - 1, max + 1];
  }
  return [min, max];
}

/** Draw one titled plot; returns how many points were actually drawn
 *  (post-decimation, summed over series). */
export function drawPlot(
  ctx: Ctx2D,
  width: number,
  height: number,
  title: string,
  series: Series[],
  opts: PlotOptions = {},
): number {
  ctx.clearRect(0, 0, width, height);
  ctx.font = "12px sans-serif";
  ctx.fillStyle = "#ddd";
  ctx.fillText(title, MARGIN.left, 14);

  const x0 = MARGIN.left;
  const y0 = MARGIN.top;
  const w = Math.max(1, width - MARGIN.left - MARGIN.right);
  const h = Math.max(1, height - MARGIN.top - MARGIN.bottom);
  ctx.strokeStyle = "#555";
  ctx.lineWidth = 1;
  ctx.strokeRect(x0, y0, w, h);

  const drawn = series.map((s) => decimate(s.points, MAX_DRAWN_POINTS));
  const xs: number[] = [];
  const ys: number[] = [];
  for (const pts of drawn) {
    for (const p of pts) {
      xs.push(p.x);
      ys.push(p.y);
    }
  }
  if (xs.length === 0) {
    ctx.fillStyle = "#888";
    ctx.fillText("no data", x0 + 8, y0 + 16);
    return 0;
  }
  const [xMin, xMax] = bounds(xs);
  const [yMin, yMax] = bounds(ys, opts.yMin, opts.yMax);
  const sx = (x: number) => x0 + ((x - xMin) / (xMax - xMin || 1)) * w;
  const sy = (y: number) => y0 + h - ((y - yMin) / (yMax - yMin || 1)) * h;

  let total = 0;
  drawn.forEach((pts, i) => {
    const s = series[i]!;
    if (pts.length === 0) return;
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 1.25;
    ctx.beginPath();
    pts.forEach((p, k) => {
      if (k === 0) ctx.moveTo(sx(p.x), sy(p.y));
      else ctx.lineTo(sx(p.x), sy(p.y));
    });
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, x0 + 8 + i * 70, y0 + h + 14);
    total += pts.length;
  });
  ctx.fillStyle = "#888";
  ctx.fillText(yMax.toFixed(1), 4, y0 + 10);
  ctx.fillText(yMin.toFixed(1), 4, y0 + h);
  if (opts.xLabel) {
    ctx.fillText(opts.xLabel, x0 + w - 60, y0 + h + 14);
  }
  return total;
}
