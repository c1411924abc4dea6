/**
 * Just enough SVG assembly for static figures: a margined frame with two
 * linear scales, tick axes, and text labels. No DOM, no timestamps, so a
 * figure is a pure function of its inputs down to the byte.
 */

import { scaleLinear, type ScaleLinear } from "d3-scale";

export const WIDTH = 640;
export const HEIGHT = 420;
const MARGIN = { top: 42, right: 24, bottom: 46, left: 58 };

export interface Frame {
  x: ScaleLinear<number, number>;
  y: ScaleLinear<number, number>;
}

/** Round-trip-safe text for attribute values and element bodies. */
export function escapeText(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function pad(lo: number, hi: number): [number, number] {
  if (lo === hi) return [lo - 1, hi + 1];
  const slack = 0.05 * (hi - lo);
  return [lo - slack, hi + slack];
}

export function makeFrame(
  xDomain: [number, number],
  yDomain: [number, number],
): Frame {
  return {
    x: scaleLinear()
      .domain(pad(...xDomain))
      .range([MARGIN.left, WIDTH - MARGIN.right]),
    y: scaleLinear()
      .domain(pad(...yDomain))
      .range([HEIGHT - MARGIN.bottom, MARGIN.top]),
  };
}

const fmt = (v: number): string =>
  Math.abs(v) < 1e-12 ? "0" : String(parseFloat(v.toPrecision(6)));

export function axes(frame: Frame, xLabel: string, yLabel: string): string {
  const parts: string[] = [];
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  parts.push(
    `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#333"/>`,
    `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${MARGIN.top}" stroke="#333"/>`,
  );
  for (const t of frame.x.ticks(6)) {
    const px = fmt(frame.x(t));
    parts.push(
      `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="#333"/>`,
      `<text x="${px}" y="${y0 + 18}" text-anchor="middle" ` +
        `font-size="11">${fmt(t)}</text>`,
    );
  }
  for (const t of frame.y.ticks(6)) {
    const py = fmt(frame.y(t));
    parts.push(
      `<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="#333"/>`,
      `<text x="${x0 - 8}" y="${py}" text-anchor="end" ` +
        `dominant-baseline="middle" font-size="11">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 8}" text-anchor="middle" ` +
      `font-size="12">${escapeText(xLabel)}</text>`,
    `<text x="14" y="${(y0 + MARGIN.top) / 2}" text-anchor="middle" ` +
      `font-size="12" transform="rotate(-90 14 ${(y0 + MARGIN.top) / 2})">` +
      `${escapeText(yLabel)}</text>`,
  );
  return parts.join("\n");
}

export function titleText(title: string): string {
  return (
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="14" ` +
    `font-weight="bold">${escapeText(title)}</text>`
  );
}

export function svgDocument(body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
    `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
    `font-family="sans-serif">\n` +
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>\n` +
    `${body}\n</svg>\n`
  );
}
