/**
 * The three figure kinds, each a pure (rows -> SVG text) function.
 *
 * Drawing conventions shared by all three: one fixed canvas size, data
 * series in a small colorblind-safe palette, and no clock or locale
 * anywhere, so re-rendering the same inputs reproduces the same bytes.
 */

import { line as d3line, curveStepAfter } from "d3-shape";

import { ecdf, ksDistance, type StepCurve } from "./ecdf.js";
import type { EdgeRow, RatioPoint, StatisticRow } from "./tables.js";
import { axes, escapeText, makeFrame, svgDocument, titleText, type Frame } from "./svg.js";

const PALETTE = ["#0072b2", "#d55e00", "#009e73", "#cc79a7", "#56b4e9", "#e69f00"];

const seriesColor = (i: number): string => PALETTE[i % PALETTE.length];

function pathOf(frame: Frame, pts: Array<[number, number]>, step = false): string {
  const gen = d3line<[number, number]>()
    .x((p) => frame.x(p[0]))
    .y((p) => frame.y(p[1]));
  if (step) gen.curve(curveStepAfter);
  return gen(pts) ?? "";
}

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return [lo, hi];
}

/**
 * Line-ensemble plot of an edge-window file.
 *
 * Each numbered line becomes one curve: its across-replica mean at every
 * grid time. Averaging preserves the per-replica ordering, so curve 1
 * sits above curve 2 above curve 3 pointwise; curves are drawn and
 * labeled in file order, top line first, and never resorted here.
 */
export function linesFigure(rows: EdgeRow[], title: string): string {
  if (rows.length === 0) throw new Error("no replicas in edge input");
  const sums = new Map<number, Map<number, { s: number; n: number }>>();
  for (const r of rows) {
    let byTime = sums.get(r.line);
    if (!byTime) sums.set(r.line, (byTime = new Map()));
    const cell = byTime.get(r.gridTime);
    if (cell) {
      cell.s += r.value;
      cell.n += 1;
    } else {
      byTime.set(r.gridTime, { s: r.value, n: 1 });
    }
  }
  const lineIds = [...sums.keys()].sort((a, b) => a - b);
  const curves = lineIds.map((id) => {
    const pts = [...sums.get(id)!.entries()]
      .sort((a, b) => a[0] - b[0])
      .map(([t, c]) => [t, c.s / c.n] as [number, number]);
    return { id, pts };
  });
  const frame = makeFrame(
    extent(curves.flatMap((c) => c.pts.map((p) => p[0]))),
    extent(curves.flatMap((c) => c.pts.map((p) => p[1]))),
  );
  const body: string[] = [titleText(title), axes(frame, "window time", "rescaled level")];
  curves.forEach((c, i) => {
    body.push(
      `<path d="${pathOf(frame, c.pts)}" fill="none" ` +
        `stroke="${seriesColor(i)}" stroke-width="1.8" ` +
        `data-line="${c.id}"/>`,
    );
    const [t0, v0] = c.pts[c.pts.length - 1];
    body.push(
      `<text x="${frame.x(t0) + 4}" y="${frame.y(v0)}" font-size="11" ` +
        `fill="${seriesColor(i)}" dominant-baseline="middle">` +
        `line ${c.id}</text>`,
    );
  });
  return svgDocument(body.join("\n"));
}

function stepPoints(c: StepCurve): Array<[number, number]> {
  const pts: Array<[number, number]> = [[c.x[0], 0]];
  for (let i = 0; i < c.x.length; i++) pts.push([c.x[i], c.F[i]]);
  return pts;
}

/** Two weighted ECDFs on one frame, captioned with their KS distance. */
export function cdfOverlayFigure(
  a: StatisticRow[],
  b: StatisticRow[],
  labels: [string, string],
  title: string,
): string {
  if (a.length === 0 || b.length === 0) {
    throw new Error("no replicas in statistic input");
  }
  const ca = ecdf(a.map((r) => r.value), a.map((r) => r.weight));
  const cb = ecdf(b.map((r) => r.value), b.map((r) => r.weight));
  const ks = ksDistance(ca, cb);
  const frame = makeFrame(extent([...ca.x, ...cb.x]), [0, 1]);
  const body = [
    titleText(title),
    axes(frame, "value", "cumulative probability"),
    `<path d="${pathOf(frame, stepPoints(ca), true)}" fill="none" ` +
      `stroke="${seriesColor(0)}" stroke-width="1.8"/>`,
    `<path d="${pathOf(frame, stepPoints(cb), true)}" fill="none" ` +
      `stroke="${seriesColor(1)}" stroke-width="1.8" stroke-dasharray="5 3"/>`,
    `<text x="${frame.x.range()[1] - 6}" y="${frame.y(0.07)}" ` +
      `text-anchor="end" font-size="12">KS = ${ks.toFixed(4)}</text>`,
  ];
  const legendY = frame.y(0.97);
  labels.forEach((lab, i) => {
    const y = legendY + 16 * i;
    body.push(
      `<line x1="${frame.x.range()[0] + 8}" y1="${y}" ` +
        `x2="${frame.x.range()[0] + 30}" y2="${y}" ` +
        `stroke="${seriesColor(i)}" stroke-width="1.8"` +
        `${i === 1 ? ' stroke-dasharray="5 3"' : ""}/>`,
      `<text x="${frame.x.range()[0] + 36}" y="${y}" font-size="11" ` +
        `dominant-baseline="middle">${escapeText(lab)}</text>`,
    );
  });
  return svgDocument(body.join("\n"));
}

/**
 * Ratio estimates against start spacing, one series per estimator,
 * points joined in spacing order with +/- one standard error whiskers
 * and a reference rule at ratio 1.
 */
export function ratioCurveFigure(points: RatioPoint[], title: string): string {
  if (points.length === 0) throw new Error("no ratio points to draw");
  const ops = [...new Set(points.map((p) => p.op))].sort();
  const lo = Math.min(...points.map((p) => p.mean - p.se), 1);
  const hi = Math.max(...points.map((p) => p.mean + p.se), 1);
  const frame = makeFrame(extent(points.map((p) => p.spacing)), [lo, hi]);
  const body = [
    titleText(title),
    axes(frame, "start spacing", "ratio"),
    `<line x1="${frame.x.range()[0]}" y1="${frame.y(1)}" ` +
      `x2="${frame.x.range()[1]}" y2="${frame.y(1)}" ` +
      `stroke="#999" stroke-dasharray="3 3"/>`,
  ];
  ops.forEach((op, i) => {
    const series = points
      .filter((p) => p.op === op)
      .sort((a, b) => a.spacing - b.spacing);
    const color = seriesColor(i);
    if (series.length > 1) {
      const pts = series.map((p) => [p.spacing, p.mean] as [number, number]);
      body.push(
        `<path d="${pathOf(frame, pts)}" fill="none" stroke="${color}" ` +
          `stroke-width="1.5"/>`,
      );
    }
    for (const p of series) {
      const px = frame.x(p.spacing);
      body.push(
        `<line x1="${px}" y1="${frame.y(p.mean - p.se)}" ` +
          `x2="${px}" y2="${frame.y(p.mean + p.se)}" stroke="${color}"/>`,
        `<circle cx="${px}" cy="${frame.y(p.mean)}" r="3" fill="${color}"/>`,
      );
    }
    body.push(
      `<text x="${frame.x.range()[0] + 8}" y="${frame.y.range()[1] + 14 + 16 * i}" ` +
        `font-size="11" fill="${color}">${escapeText(op)}</text>`,
    );
  });
  return svgDocument(body.join("\n"));
}
