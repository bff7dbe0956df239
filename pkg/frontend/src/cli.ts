#!/usr/bin/env node
import { readFileSync } from "node:fs";
import { parseFigureSpec, SchemaError } from "./schema.js";
import { renderFigure } from "./render.js";

export function main(argv: string[]): number {
  if (argv.length !== 1) {
    console.error("usage: spdsim-plots <figure-spec.json>");
    return 2;
  }
  let spec;
  try {
    spec = parseFigureSpec(readFileSync(argv[0], "utf8"));
  } catch (e) {
    console.error(`spec error: ${(e as Error).message}`);
    return 2;
  }
  try {
    const { svgPath, pngPath } = renderFigure(spec);
    console.log(`${svgPath}\n${pngPath}`);
    return 0;
  } catch (e) {
    if (e instanceof SchemaError) {
      console.error(`schema error: ${e.message}`);
      return 2;
    }
    console.error(`render error: ${(e as Error).message}`);
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
