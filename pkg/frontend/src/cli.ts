#!/usr/bin/env node
/** plot --in <csv...> --y <col> [--bounds <cols>] [--log-y] [--labels a,b] --out <path> */

import { realpathSync, writeFileSync } from "fs";
import { pathToFileURL } from "url";

import { buildFigure, FigureSpec } from "./figure.js";

class UsageError extends Error {}

export function parseArgs(argv: string[]): FigureSpec {
  const inputs: string[] = [];
  let yColumn: string | null = null;
  let boundColumns: string[] = [];
  let logY = false;
  let labels: string[] = [];
  let output: string | null = null;
  let i = 0;
  const next = (flag: string): string => {
    if (i + 1 >= argv.length) throw new UsageError(`${flag} needs a value`);
    return argv[++i];
  };
  for (; i < argv.length; i++) {
    const arg = argv[i];
    switch (arg) {
      case "--in":
        inputs.push(next(arg));
        while (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
          inputs.push(argv[++i]);
        }
        break;
      case "--y":
        yColumn = next(arg);
        break;
      case "--bounds":
        boundColumns = next(arg).split(",").map((c) => c.trim()).filter(Boolean);
        break;
      case "--labels":
        labels = next(arg).split(",").map((c) => c.trim());
        break;
      case "--log-y":
        logY = true;
        break;
      case "--out":
        output = next(arg);
        break;
      default:
        throw new UsageError(`unknown argument '${arg}'`);
    }
  }
  if (inputs.length === 0) throw new UsageError("--in is required");
  if (yColumn === null) throw new UsageError("--y is required");
  if (output === null) throw new UsageError("--out is required");
  return { inputs, yColumn, boundColumns, logY, labels, output };
}

export function main(argv: string[]): number {
  let spec: FigureSpec;
  try {
    spec = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`usage error: ${(err as Error).message}\n`);
    return 2;
  }
  try {
    const svg = buildFigure(spec);
    writeFileSync(spec.output, svg, "ascii");
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
  return 0;
}

const isDirectRun = (() => {
  if (process.argv[1] === undefined) return false;
  try {
    return import.meta.url === pathToFileURL(realpathSync(process.argv[1])).href;
  } catch {
    return false;
  }
})();
if (isDirectRun) {
  process.exit(main(process.argv.slice(2)));
}
