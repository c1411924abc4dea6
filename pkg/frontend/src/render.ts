/**
 * Figure dispatcher: a FigureSpec names input artifacts, a kind, and an
 * output path; render validates, draws, and only then writes, so a
 * failed render never leaves a file behind.
 */

import { existsSync, writeFileSync } from "node:fs";
import { basename } from "node:path";

import { cdfOverlayFigure, linesFigure, ratioCurveFigure } from "./figures.js";
import { readEdgeCsv, readRatioJson, readStatisticCsv } from "./tables.js";

export type FigureKind = "lines" | "cdf-overlay" | "ratio-curve";

export const KINDS: FigureKind[] = ["lines", "cdf-overlay", "ratio-curve"];

export interface FigureSpec {
  kind: FigureKind;
  /** Artifact paths; their number is kind-specific. */
  inputs: string[];
  output: string;
  title?: string;
}

function requireInputs(spec: FigureSpec, count: number | null): void {
  if (count !== null && spec.inputs.length !== count) {
    throw new Error(
      `${spec.kind} needs exactly ${count} input file(s), got ${spec.inputs.length}`,
    );
  }
  if (spec.inputs.length === 0) {
    throw new Error(`${spec.kind} needs at least one input file`);
  }
  for (const p of spec.inputs) {
    if (!existsSync(p)) throw new Error(`input file not found: ${p}`);
  }
}

/** Build the figure for `spec` and write it; returns the output path. */
export function render(spec: FigureSpec): string {
  let svg: string;
  switch (spec.kind) {
    case "lines": {
      requireInputs(spec, 1);
      const rows = readEdgeCsv(spec.inputs[0]);
      svg = linesFigure(rows, spec.title ?? basename(spec.inputs[0]));
      break;
    }
    case "cdf-overlay": {
      requireInputs(spec, 2);
      const a = readStatisticCsv(spec.inputs[0]);
      const b = readStatisticCsv(spec.inputs[1]);
      svg = cdfOverlayFigure(
        a,
        b,
        [basename(spec.inputs[0]), basename(spec.inputs[1])],
        spec.title ?? "two-sample comparison",
      );
      break;
    }
    case "ratio-curve": {
      requireInputs(spec, null);
      const points = spec.inputs.map(readRatioJson);
      svg = ratioCurveFigure(points, spec.title ?? "ratio vs spacing");
      break;
    }
    default:
      throw new Error(`unknown figure kind "${(spec as FigureSpec).kind}"`);
  }
  writeFileSync(spec.output, svg);
  return spec.output;
}
