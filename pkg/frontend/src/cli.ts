/**
 * Regenerate sweep figures from a leo-rsma results CSV.
 *
 * Usage: node dist/cli.js <results.csv> --out <dir> [--variants a,b]
 *
 * Emits one SVG per sweep kind found in the CSV (power_dbw.svg or
 * num_satellites.svg).  Strictly a consumer of the CSV: no rate math is
 * recomputed here.
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { aggregate, sweepKinds } from "./aggregate.js";
import { parseResultsCsv, SchemaError } from "./csv.js";
import { renderSvg } from "./svg.js";

export interface CliArgs {
  csvPath: string;
  outDir: string;
  variants?: string[];
}

export function parseArgs(argv: string[]): CliArgs {
  let csvPath: string | undefined;
  let outDir = ".";
  let variants: string[] | undefined;
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    if (arg === "--out") {
      outDir = argv[++i];
    } else if (arg === "--variants") {
      variants = argv[++i].split(",").filter((v) => v.length > 0);
    } else if (!arg.startsWith("--") && csvPath === undefined) {
      csvPath = arg;
    } else {
      throw new Error(`unexpected argument: ${arg}`);
    }
  }
  if (!csvPath) {
    throw new Error("usage: cli.js <results.csv> --out <dir> [--variants a,b]");
  }
  return { csvPath, outDir, variants };
}

export function run(args: CliArgs): string[] {
  const rows = parseResultsCsv(readFileSync(args.csvPath, "utf8"));
  mkdirSync(args.outDir, { recursive: true });
  const written: string[] = [];
  for (const kind of sweepKinds(rows)) {
    const subset = rows.filter((r) => r.sweep === kind);
    const curves = aggregate(subset, args.variants);
    const svg = renderSvg(curves, { xField: kind });
    const path = join(args.outDir, `${kind}.svg`);
    writeFileSync(path, svg);
    written.push(path);
  }
  return written;
}

export function main(argv: string[]): number {
  try {
    const paths = run(parseArgs(argv));
    for (const path of paths) {
      console.log(`wrote ${path}`);
    }
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${(err as Error).message}`);
      return 2;
    }
    console.error(String(err));
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
