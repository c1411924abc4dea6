import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { beforeAll, describe, expect, test } from "vitest";

import { render } from "../src/render.js";

let dir: string;

function put(name: string, text: string): string {
  const p = join(dir, name);
  writeFileSync(p, text);
  return p;
}

const EDGE =
  "replica,line,grid_time,value\n" +
  [0, 1]
    .flatMap((r) =>
      [1, 2, 3].flatMap((j) =>
        [-0.5, 0, 0.5].map((t) => `${r},${j},${t},${(4 - j) + 0.1 * r + 0.2 * t}`),
      ),
    )
    .join("\n") +
  "\n";

const STAT = (shift: number) =>
  "replica,value,weight\n" +
  [0, 1, 2, 3].map((i) => `${i},${i * 0.5 + shift},1.0`).join("\n") +
  "\n";

const RATIO = (spacing: number, mean: number) =>
  JSON.stringify({
    op: "ratio-vdelta",
    mean,
    se: 0.01,
    params: { start: `0,${spacing},${2 * spacing}` },
  });

beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), "render-"));
});

describe("render", () => {
  test("lines kind writes a nonempty svg", () => {
    const out = join(dir, "lines.svg");
    render({ kind: "lines", inputs: [put("edge.csv", EDGE)], output: out });
    const svg = readFileSync(out, "utf8");
    expect(svg.length).toBeGreaterThan(500);
    expect(svg).toContain("<svg");
    expect(svg).toContain("</svg>");
  });

  test("cdf-overlay kind writes a nonempty svg", () => {
    const out = join(dir, "cdf.svg");
    render({
      kind: "cdf-overlay",
      inputs: [put("s1.csv", STAT(0)), put("s2.csv", STAT(0.25))],
      output: out,
      title: "routes",
    });
    const svg = readFileSync(out, "utf8");
    expect(svg).toContain("routes");
    expect(svg).toContain("KS = ");
  });

  test("ratio-curve kind accepts several estimate files", () => {
    const out = join(dir, "ratio.svg");
    render({
      kind: "ratio-curve",
      inputs: [
        put("r1.json", RATIO(8, 0.82)),
        put("r2.json", RATIO(64, 0.97)),
      ],
      output: out,
    });
    expect(readFileSync(out, "utf8")).toContain("ratio-vdelta");
  });

  test("empty replica set: error, no file written", () => {
    const out = join(dir, "never.svg");
    expect(() =>
      render({
        kind: "lines",
        inputs: [put("hdr.csv", "replica,line,grid_time,value\n")],
        output: out,
      }),
    ).toThrow("no replicas");
    expect(existsSync(out)).toBe(false);
  });

  test("schema mismatch names the missing column", () => {
    const out = join(dir, "never2.svg");
    expect(() =>
      render({
        kind: "lines",
        inputs: [put("stat-as-edge.csv", STAT(0))],
        output: out,
      }),
    ).toThrow('missing column "line"');
    expect(existsSync(out)).toBe(false);
  });

  test("cdf-overlay wants exactly two inputs", () => {
    expect(() =>
      render({
        kind: "cdf-overlay",
        inputs: [join(dir, "s1.csv")],
        output: join(dir, "x.svg"),
      }),
    ).toThrow("exactly 2");
  });

  test("missing input file is reported by path", () => {
    expect(() =>
      render({
        kind: "lines",
        inputs: [join(dir, "ghost.csv")],
        output: join(dir, "x.svg"),
      }),
    ).toThrow("not found");
  });

  test("re-rendering reproduces the file byte for byte", () => {
    const out1 = join(dir, "rep1.svg");
    const out2 = join(dir, "rep2.svg");
    const spec = { kind: "lines" as const, inputs: [join(dir, "edge.csv")] };
    render({ ...spec, output: out1 });
    render({ ...spec, output: out2 });
    expect(readFileSync(out1, "utf8")).toBe(readFileSync(out2, "utf8"));
  });
});
