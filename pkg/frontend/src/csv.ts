import { readFileSync } from "fs";
import Papa from "papaparse";

export class CsvContractError extends Error {}

export interface Table {
  header: string[];
  rows: Record<string, string>[];
}

/** Load a CSV and fail loudly when its header differs from the contract.
 *
 * `expected` entries ending in `*` match a run of numbered columns
 * (`state_*` matches state_0, state_1, ... in order).
 */
export function loadCsv(path: string, expected: string[]): Table {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new CsvContractError(`${path}: ${parsed.errors[0].message}`);
  }
  const header = parsed.meta.fields ?? [];
  validateHeader(path, header, expected);
  if (parsed.data.length === 0) {
    throw new CsvContractError(`${path}: no data rows under the header`);
  }
  return { header, rows: parsed.data };
}

function validateHeader(path: string, header: string[], expected: string[]): void {
  let h = 0;
  for (const want of expected) {
    if (want.endsWith("*")) {
      const stem = want.slice(0, -1);
      let index = 0;
      while (h < header.length && header[h] === `${stem}${index}`) {
        h += 1;
        index += 1;
      }
      if (index === 0) {
        throw new CsvContractError(`${path}: expected column '${stem}0' at position ${h}, found '${header[h] ?? "<end>"}'`);
      }
      continue;
    }
    if (header[h] !== want) {
      throw new CsvContractError(`${path}: expected column '${want}' at position ${h}, found '${header[h] ?? "<end>"}'`);
    }
    h += 1;
  }
  if (h !== header.length) {
    throw new CsvContractError(`${path}: unexpected trailing column '${header[h]}'`);
  }
}

export function numeric(table: Table, column: string): number[] {
  return table.rows.map((row, i) => {
    const value = Number(row[column]);
    if (!Number.isFinite(value)) {
      throw new CsvContractError(`column '${column}' row ${i + 1}: not a number (${row[column]})`);
    }
    return value;
  });
}
