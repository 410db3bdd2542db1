#!/usr/bin/env node
/** render --kind <k> --in <csv> --out <img>
 *
 * Renders one roaforge result CSV into a static SVG figure.  Exits nonzero
 * (writing nothing) when the CSV header does not match the contract for the
 * requested kind; the message names the offending column.
 */

import { writeFileSync } from "fs";
import { CsvContractError } from "./csv";
import { FigureKind, KINDS, render } from "./figures";

function parseArgs(argv: string[]): { kind: FigureKind; input: string; output: string } {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new CsvContractError(`malformed arguments near '${key}'; usage: render --kind <k> --in <csv> --out <img>`);
    }
    flags.set(key.slice(2), value);
  }
  const kind = flags.get("kind");
  const input = flags.get("in");
  const output = flags.get("out");
  if (!kind || !input || !output) {
    throw new CsvContractError("usage: render --kind <k> --in <csv> --out <img>");
  }
  if (!(KINDS as string[]).includes(kind)) {
    throw new CsvContractError(`unknown figure kind '${kind}'; choose from ${KINDS.join(", ")}`);
  }
  return { kind: kind as FigureKind, input, output };
}

export function main(argv: string[]): number {
  try {
    const { kind, input, output } = parseArgs(argv);
    const svg = render(kind, input);
    writeFileSync(output, svg);
    return 0;
  } catch (error) {
    if (error instanceof CsvContractError) {
      console.error(`render: ${error.message}`);
      return 1;
    }
    if (error instanceof Error && "code" in error && (error as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`render: ${error.message}`);
      return 1;
    }
    throw error;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
