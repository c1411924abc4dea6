/**
 * Readers for the laboratory's artifact files.
 *
 * Every CSV the simulator writes has a fixed header; anything else is a
 * schema mismatch and the error must name the offending column, because
 * the most common failure is feeding the right data in the wrong format
 * (a levels file where an edge file was expected, say).
 */

import { readFileSync } from "node:fs";

export interface EdgeRow {
  replica: number;
  line: number;
  gridTime: number;
  value: number;
}

export interface StatisticRow {
  value: number;
  weight: number;
}

/** One estimate artifact, reduced to what a ratio curve needs. */
export interface RatioPoint {
  op: string;
  spacing: number;
  mean: number;
  se: number;
}

function splitRows(text: string): string[] {
  return text.split("\n").filter((ln) => ln.length > 0);
}

/**
 * Parse a CSV with an exact expected header into numeric columns.
 *
 * Column order matters (the writers are frozen), so validation walks the
 * expected names first: a missing one is reported by name before any
 * complaint about extras or ordering.
 */
export function parseTable(
  text: string,
  path: string,
  expected: string[],
): number[][] {
  const rows = splitRows(text);
  if (rows.length === 0) {
    throw new Error(`${path}: empty file, expected header ${expected.join(",")}`);
  }
  const header = rows[0].split(",");
  for (const name of expected) {
    if (!header.includes(name)) {
      throw new Error(
        `${path}: missing column "${name}" (header is ${rows[0]})`,
      );
    }
  }
  for (const name of header) {
    if (!expected.includes(name)) {
      throw new Error(
        `${path}: unexpected column "${name}" (expected ${expected.join(",")})`,
      );
    }
  }
  const order = expected.map((name) => header.indexOf(name));
  const out: number[][] = [];
  for (let i = 1; i < rows.length; i++) {
    const cells = rows[i].split(",");
    if (cells.length !== header.length) {
      throw new Error(
        `${path}:${i + 1}: ${cells.length} cells for ${header.length} columns`,
      );
    }
    const rec = order.map((j) => Number(cells[j]));
    const bad = rec.findIndex((v) => !Number.isFinite(v));
    if (bad >= 0) {
      throw new Error(
        `${path}:${i + 1}: non-numeric cell in column "${expected[bad]}"`,
      );
    }
    out.push(rec);
  }
  return out;
}

export function readEdgeCsv(path: string): EdgeRow[] {
  const table = parseTable(readFileSync(path, "utf8"), path, [
    "replica",
    "line",
    "grid_time",
    "value",
  ]);
  return table.map(([replica, line, gridTime, value]) => ({
    replica,
    line,
    gridTime,
    value,
  }));
}

export function readStatisticCsv(path: string): StatisticRow[] {
  const table = parseTable(readFileSync(path, "utf8"), path, [
    "replica",
    "value",
    "weight",
  ]);
  return table.map(([, value, weight]) => ({ value, weight }));
}

/** Smallest gap of a strictly increasing start vector, written "a,b,c". */
export function minSpacing(start: string): number {
  const xs = start.split(",").map(Number);
  if (xs.some((v) => !Number.isFinite(v)) || xs.length < 2) {
    throw new Error(`malformed start vector "${start}"`);
  }
  let gap = Infinity;
  for (let i = 1; i < xs.length; i++) gap = Math.min(gap, xs[i] - xs[i - 1]);
  return gap;
}

/**
 * Load one ratio-estimate JSON artifact.
 *
 * The spacing axis comes from the run's own parameters: the recorded
 * start vector, or gap 1 when the run used the default integer start
 * (in which case no start key is recorded).
 */
export function readRatioJson(path: string): RatioPoint {
  let doc: unknown;
  try {
    doc = JSON.parse(readFileSync(path, "utf8"));
  } catch {
    throw new Error(`${path}: not valid JSON`);
  }
  const rec = doc as {
    op?: string;
    mean?: number;
    se?: number;
    params?: { start?: string };
  };
  for (const key of ["op", "mean", "se"] as const) {
    if (rec[key] === undefined) {
      throw new Error(`${path}: missing key "${key}"`);
    }
  }
  const start = rec.params?.start;
  return {
    op: rec.op as string,
    spacing: start === undefined ? 1 : minSpacing(start),
    mean: rec.mean as number,
    se: rec.se as number,
  };
}
