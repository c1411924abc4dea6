/**
 * End-to-end: real simulator artifacts in, all three figure kinds out.
 *
 * The simulator is driven through its public command line only, at small
 * replica counts; the figures must be non-empty and the line ensemble
 * must keep its top-to-bottom order.
 */

import { execFileSync } from "node:child_process";
import { mkdirSync, mkdtempSync, readFileSync, statSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { beforeAll, describe, expect, test } from "vitest";

import { main } from "../src/cli.js";

let work: string;

function owl(outDir: string, ...args: string[]): void {
  mkdirSync(outDir, { recursive: true });
  execFileSync("python3", ["-m", "owl", ...args, "--out", outDir], {
    stdio: "pipe",
  });
}

beforeAll(() => {
  work = mkdtempSync(join(tmpdir(), "report-e2e-"));
  owl(
    join(work, "edge"),
    ...("--experiment edge --source nibm --d 4 --start 0,1,2,3 " +
      "--T 2500 --a 0.177 --L 0.5 --k 3 --n 60 --seed 11").split(" "),
  );
  for (const seed of ["11", "12"]) {
    owl(
      join(work, `stat-${seed}`),
      ...("--experiment top-stat --source gue --d 4 --T 1 --a 0.5 " +
        `--n 300 --seed ${seed}`).split(" "),
    );
  }
  for (const spacing of [8, 16, 32]) {
    owl(
      join(work, `ratio-${spacing}`),
      ...("--experiment ratio-vdelta --d 3 --T 100 --eps 0.05 " +
        `--start 0,${spacing},${2 * spacing} --n 200 --seed 11`).split(" "),
    );
  }
}, 180_000);

describe("figures from simulator output", () => {
  test("all three kinds render non-empty images within budget", () => {
    const t0 = Date.now();
    const figures: Array<[string, string[]]> = [
      ["lines.svg", ["--kind", "lines", "--in", join(work, "edge", "edge-lines.csv")]],
      [
        "cdf.svg",
        [
          "--kind", "cdf-overlay",
          "--in", join(work, "stat-11", "top-stat.csv"),
          "--in", join(work, "stat-12", "top-stat.csv"),
        ],
      ],
      [
        "ratio.svg",
        [
          "--kind", "ratio-curve",
          "--in", join(work, "ratio-8", "ratio-vdelta.json"),
          "--in", join(work, "ratio-16", "ratio-vdelta.json"),
          "--in", join(work, "ratio-32", "ratio-vdelta.json"),
        ],
      ],
    ];
    for (const [name, args] of figures) {
      const out = join(work, name);
      expect(main([...args, "--out", out])).toBe(0);
      expect(statSync(out).size).toBeGreaterThan(500);
    }
    expect(Date.now() - t0).toBeLessThan(30_000);
  });

  test("the rendered line ensemble keeps top-to-bottom order", () => {
    const svg = readFileSync(join(work, "lines.svg"), "utf8");
    const curves = new Map<number, number[]>();
    for (const m of svg.matchAll(/<path d="([^"]+)"[^>]*data-line="(\d+)"/g)) {
      const ys = [...m[1].matchAll(/[ML][-\d.e+]+,([-\d.e+]+)/g)].map((c) =>
        Number(c[1]),
      );
      curves.set(Number(m[2]), ys);
    }
    expect([...curves.keys()]).toEqual([1, 2, 3]);
    for (const line of [1, 2]) {
      const above = curves.get(line)!;
      const below = curves.get(line + 1)!;
      expect(above.length).toBe(below.length);
      for (let i = 0; i < above.length; i++) {
        // svg y axis points down, so above means smaller
        expect(above[i]).toBeLessThan(below[i]);
      }
    }
  });

  test("a sample overlaid on itself reports KS = 0", () => {
    const out = join(work, "self.svg");
    const same = join(work, "stat-11", "top-stat.csv");
    expect(main(["--kind", "cdf-overlay", "--in", same, "--in", same, "--out", out]))
      .toBe(0);
    expect(readFileSync(out, "utf8")).toContain("KS = 0.0000");
  });
});
