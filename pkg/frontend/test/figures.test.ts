import { describe, expect, test } from "vitest";

import { cdfOverlayFigure, linesFigure, ratioCurveFigure } from "../src/figures.js";
import type { EdgeRow, StatisticRow } from "../src/tables.js";

/** Pull the sample points out of one path's d attribute. */
function pathPoints(d: string): Array<[number, number]> {
  const pts: Array<[number, number]> = [];
  for (const m of d.matchAll(/[ML]([-\d.e+]+),([-\d.e+]+)/g)) {
    pts.push([Number(m[1]), Number(m[2])]);
  }
  return pts;
}

function linePaths(svg: string): Map<number, Array<[number, number]>> {
  const out = new Map<number, Array<[number, number]>>();
  for (const m of svg.matchAll(/<path d="([^"]+)"[^>]*data-line="(\d+)"/g)) {
    out.set(Number(m[2]), pathPoints(m[1]));
  }
  return out;
}

function edgeRows(replicas: number, k: number, times: number[]): EdgeRow[] {
  // Line j sits at -j with a small replica wobble: ordered by design.
  const rows: EdgeRow[] = [];
  for (let r = 0; r < replicas; r++) {
    for (let j = 1; j <= k; j++) {
      for (const t of times) {
        rows.push({
          replica: r,
          line: j,
          gridTime: t,
          value: -j + 0.2 * Math.sin(3 * r + t) + 0.05 * t,
        });
      }
    }
  }
  return rows;
}

describe("linesFigure", () => {
  const times = [-0.5, -0.25, 0, 0.25, 0.5];

  test("three non-crossing curves, top line first and never resorted", () => {
    const svg = linesFigure(edgeRows(4, 3, times), "edge window");
    const paths = linePaths(svg);
    expect([...paths.keys()]).toEqual([1, 2, 3]);
    for (const [id, pts] of paths) {
      expect(pts).toHaveLength(times.length);
      const below = paths.get(id + 1);
      if (!below) continue;
      for (let i = 0; i < pts.length; i++) {
        // SVG y grows downward: above means strictly smaller y.
        expect(pts[i][1]).toBeLessThan(below[i][1]);
      }
    }
    expect(svg.indexOf("line 1")).toBeGreaterThan(0);
    expect(svg.indexOf("line 1")).toBeLessThan(svg.indexOf("line 3"));
  });

  test("a single replica draws its own levels", () => {
    const svg = linesFigure(edgeRows(1, 2, times), "one replica");
    expect(linePaths(svg).size).toBe(2);
  });

  test("no rows, no figure", () => {
    expect(() => linesFigure([], "empty")).toThrow("no replicas");
  });

  test("same rows, same bytes", () => {
    const rows = edgeRows(3, 3, times);
    expect(linesFigure(rows, "t")).toBe(linesFigure(rows, "t"));
  });
});

function stat(values: number[], weight = 1): StatisticRow[] {
  return values.map((value) => ({ value, weight }));
}

describe("cdfOverlayFigure", () => {
  test("identical samples report KS = 0", () => {
    const svg = cdfOverlayFigure(
      stat([1, 2, 3]),
      stat([1, 2, 3]),
      ["a.csv", "b.csv"],
      "same law",
    );
    expect(svg).toContain("KS = 0.0000");
    expect(svg).toContain("a.csv");
    expect(svg).toContain("b.csv");
  });

  test("separated samples report a large KS", () => {
    const svg = cdfOverlayFigure(
      stat([0, 0.1, 0.2]),
      stat([5, 5.1, 5.2]),
      ["a", "b"],
      "far apart",
    );
    expect(svg).toContain("KS = 1.0000");
  });

  test("empty side refuses", () => {
    expect(() => cdfOverlayFigure([], stat([1]), ["a", "b"], "t")).toThrow(
      "no replicas",
    );
  });
});

describe("ratioCurveFigure", () => {
  const points = [
    { op: "ratio-vdelta", spacing: 64, mean: 0.98, se: 0.01 },
    { op: "ratio-vdelta", spacing: 8, mean: 0.8, se: 0.05 },
    { op: "ratio-vdelta", spacing: 502, mean: 1.0, se: 0.002 },
    { op: "ratio-deltah", spacing: 64, mean: 0.89, se: 0.001 },
  ];

  test("joins each estimator's points in spacing order", () => {
    const svg = ratioCurveFigure(points, "wide region");
    const d = /<path d="([^"]+)" fill="none"/.exec(svg);
    expect(d).not.toBeNull();
    const xs = pathPoints(d![1]).map((p) => p[0]);
    const sorted = [...xs].sort((a, b) => a - b);
    expect(xs).toEqual(sorted);
    expect(svg).toContain("ratio-vdelta");
    expect(svg).toContain("ratio-deltah");
  });

  test("draws one whisker and marker per point", () => {
    const svg = ratioCurveFigure(points, "t");
    expect(svg.match(/<circle /g)).toHaveLength(points.length);
  });

  test("no points refuse", () => {
    expect(() => ratioCurveFigure([], "t")).toThrow("no ratio points");
  });
});
