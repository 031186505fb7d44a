#!/usr/bin/env node
/**
 * Figure renderer for the simulation CLI's CSV artifacts.
 *
 * Usage:
 *   fhn-figures --spec figure.ini --out figure.svg
 *
 * The spec names the input CSVs and the panel layout (see spec.ts); CSV
 * paths are resolved relative to the spec file.  Exit codes: 0 written,
 * 1 artifact data problem (missing column, malformed CSV, unreadable
 * file), 2 usage or spec problem.
 */
import { readFileSync, writeFileSync } from "fs";
import path from "path";
import { pathToFileURL } from "url";

import { parseCsv, type Table } from "./csv.js";
import { ParseError, SchemaError } from "./errors.js";
import { heatmapFigure, pairFigure, pulseFigure } from "./panels.js";
import { parseFigureSpec, type FigureSpec } from "./spec.js";

const USAGE = "usage: fhn-figures --spec PATH --out PATH";

function loadTable(csvPath: string): Table {
  let text: string;
  try {
    text = readFileSync(csvPath, "utf-8");
  } catch {
    throw new SchemaError(`cannot read input CSV: ${csvPath}`);
  }
  return parseCsv(text, csvPath);
}

/** Build the SVG for a parsed spec; CSV paths relative to `baseDir`. */
export function renderFigure(spec: FigureSpec, baseDir: string): string {
  const resolve = (p: string) => path.resolve(baseDir, p);
  switch (spec.kind) {
    case "pulse":
      return pulseFigure(loadTable(resolve(spec.csv)), spec);
    case "pair":
      return pairFigure(loadTable(resolve(spec.left.csv)),
                        loadTable(resolve(spec.right.csv)), spec);
    case "heatmap":
      return heatmapFigure(loadTable(resolve(spec.csv)), spec);
  }
}

export function main(args: string[]): number {
  let specPath = "";
  let outPath = "";
  for (let i = 0; i < args.length; i += 2) {
    const flag = args[i];
    const value = args[i + 1];
    if (value === undefined) {
      console.error(USAGE);
      return 2;
    }
    if (flag === "--spec") specPath = value;
    else if (flag === "--out") outPath = value;
    else {
      console.error(`unknown argument: ${flag}\n${USAGE}`);
      return 2;
    }
  }
  if (!specPath || !outPath) {
    console.error(USAGE);
    return 2;
  }

  let spec: FigureSpec;
  try {
    spec = parseFigureSpec(readFileSync(specPath, "utf-8"), specPath);
  } catch (err) {
    if (err instanceof ParseError) {
      console.error(err.message);
      return 2;
    }
    console.error(`cannot read spec: ${specPath}`);
    return 2;
  }

  try {
    const svg = renderFigure(spec, path.dirname(specPath));
    writeFileSync(outPath, svg);
    console.log(`wrote ${outPath}`);
    return 0;
  } catch (err) {
    if (err instanceof ParseError || err instanceof SchemaError) {
      console.error(err.message);
      return 1;
    }
    throw err;
  }
}

if (process.argv[1] &&
    import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
