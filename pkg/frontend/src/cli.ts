/** Figure renderer entry point.
 *
 *   render --kind coverage_vs_d --in metrics.csv --out fig3.svg [--alpha 0.1]
 *          [--threshold 0.0234] [--no-panels]
 *
 * Exit codes: 0 written, 1 schema mismatch (column diagnostics on stderr),
 * 2 usage error.
 */

import { readFileSync, writeFileSync } from "fs";
import { FIGURE_KINDS, FigureKind, FigureSpec, render } from "./figures.js";
import { SchemaError } from "./csv.js";

interface Args {
  kind?: string;
  in?: string;
  out?: string;
  alpha?: string;
  threshold?: string;
  panels: boolean;
}

function parseArgs(argv: string[]): Args {
  const args: Args = { panels: true };
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--no-panels") {
      args.panels = false;
      continue;
    }
    if (!a.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`unexpected argument "${a}"`);
    }
    const key = a.slice(2);
    if (!["kind", "in", "out", "alpha", "threshold"].includes(key)) {
      throw new Error(`unknown flag "${a}"`);
    }
    (args as unknown as Record<string, string>)[key] = argv[++i];
  }
  return args;
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
  if (!args.kind || !args.in || !args.out) {
    console.error(
      "usage: render --kind <kind> --in <csv> --out <svg> " +
        "[--alpha A] [--threshold T] [--no-panels]\n" +
        `kinds: ${FIGURE_KINDS.join(", ")}`,
    );
    return 2;
  }
  if (!(FIGURE_KINDS as readonly string[]).includes(args.kind)) {
    console.error(`error: unknown kind "${args.kind}"; ` +
      `expected one of ${FIGURE_KINDS.join(", ")}`);
    return 2;
  }
  let csvText: string;
  try {
    csvText = readFileSync(args.in, "utf8");
  } catch (err) {
    console.error(`error: cannot read ${args.in}: ${(err as Error).message}`);
    return 2;
  }
  const spec: FigureSpec = {
    kind: args.kind as FigureKind,
    csvText,
    panelPerDgp: args.panels,
    alpha: args.alpha !== undefined ? Number(args.alpha) : undefined,
    threshold: args.threshold !== undefined ? Number(args.threshold) : undefined,
  };
  let image: string;
  try {
    image = render(spec);
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 1;
    }
    throw err;
  }
  writeFileSync(args.out, image);
  console.error(`wrote ${args.out}`);
  return 0;
}

const isDirect = process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (isDirect) {
  process.exit(main(process.argv.slice(2)));
}
