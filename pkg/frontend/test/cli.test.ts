import { existsSync, mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { beforeAll, describe, expect, test, vi } from "vitest";

import { main } from "../src/cli.js";

let dir: string;
let edgeCsv: string;

beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), "cli-"));
  edgeCsv = join(dir, "edge.csv");
  writeFileSync(
    edgeCsv,
    "replica,line,grid_time,value\n0,1,0,2\n0,1,1,2.1\n0,2,0,1\n0,2,1,1.1\n",
  );
});

function quietly(run: () => number): number {
  const out = vi.spyOn(console, "log").mockImplementation(() => {});
  const err = vi.spyOn(console, "error").mockImplementation(() => {});
  try {
    return run();
  } finally {
    out.mockRestore();
    err.mockRestore();
  }
}

describe("cli", () => {
  test("renders and reports the output path", () => {
    const out = join(dir, "fig.svg");
    const rc = quietly(() =>
      main(["--kind", "lines", "--in", edgeCsv, "--out", out]),
    );
    expect(rc).toBe(0);
    expect(existsSync(out)).toBe(true);
  });

  test("unknown kind exits 2", () => {
    expect(quietly(() => main(["--kind", "pie", "--in", edgeCsv, "--out", "x"])))
      .toBe(2);
  });

  test("missing --out exits 2", () => {
    expect(quietly(() => main(["--kind", "lines", "--in", edgeCsv]))).toBe(2);
  });

  test("unknown flag exits 2", () => {
    expect(quietly(() => main(["--kind", "lines", "--frobnicate"]))).toBe(2);
  });

  test("render failure exits 1 and writes nothing", () => {
    const out = join(dir, "never.svg");
    const rc = quietly(() =>
      main(["--kind", "cdf-overlay", "--in", edgeCsv, "--in", edgeCsv, "--out", out]),
    );
    expect(rc).toBe(1);
    expect(existsSync(out)).toBe(false);
  });
});
