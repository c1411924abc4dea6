#!/usr/bin/env node
// render --kind <lines|cdf-overlay|ratio-curve> --in <file...> --out <img.svg>

import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { KINDS, render, type FigureKind } from "./render.js";

export function main(argv: string[]): number {
  let values: {
    kind?: string;
    in?: string[];
    out?: string;
    title?: string;
  };
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        kind: { type: "string" },
        in: { type: "string", multiple: true },
        out: { type: "string" },
        title: { type: "string" },
      },
      allowPositionals: false,
    }));
  } catch (ex) {
    console.error(ex instanceof Error ? ex.message : String(ex));
    return 2;
  }
  if (!values.kind || !KINDS.includes(values.kind as FigureKind)) {
    console.error(`--kind must be one of: ${KINDS.join(", ")}`);
    return 2;
  }
  if (!values.in?.length || !values.out) {
    console.error("--in <file...> and --out <img> are required");
    return 2;
  }
  try {
    const out = render({
      kind: values.kind as FigureKind,
      inputs: values.in,
      output: values.out,
      title: values.title,
    });
    console.log(`wrote ${out}`);
    return 0;
  } catch (ex) {
    console.error(ex instanceof Error ? ex.message : String(ex));
    return 1;
  }
}

const entry = process.argv[1];
if (entry !== undefined && import.meta.url === pathToFileURL(entry).href) {
  process.exit(main(process.argv.slice(2)));
}
