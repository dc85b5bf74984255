/** Parsing and validation of leo-rsma results CSV files. */

export const EXPECTED_COLUMNS = [
  "sweep",
  "sweep_value",
  "variant",
  "drop",
  "mmfr_ub",
  "mmfr_true",
  "mmfr_stderr",
  "iterations",
] as const;

export interface ResultRow {
  sweep: string;
  sweepValue: number;
  variant: string;
  drop: number;
  mmfrUb: number;
  mmfrTrue: number;
  mmfrStderr: number;
  iterations: number;
}

export class SchemaError extends Error {}

export function parseResultsCsv(text: string): ResultRow[] {
  const lines = text.split(/\r?\n/).filter((line) => line.trim().length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty results file");
  }
  const header = lines[0].split(",");
  for (const column of EXPECTED_COLUMNS) {
    if (!header.includes(column)) {
      throw new SchemaError(`missing column "${column}" in results header`);
    }
  }
  const index = new Map(header.map((name, i) => [name, i]));
  const rows: ResultRow[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== header.length) {
      throw new SchemaError(
        `row has ${parts.length} fields, header has ${header.length}: ${line}`,
      );
    }
    const num = (name: string): number => {
      const raw = parts[index.get(name)!];
      const value = Number(raw);
      if (!Number.isFinite(value)) {
        throw new SchemaError(`non-numeric value "${raw}" in column "${name}"`);
      }
      return value;
    };
    rows.push({
      sweep: parts[index.get("sweep")!],
      sweepValue: num("sweep_value"),
      variant: parts[index.get("variant")!],
      drop: num("drop"),
      mmfrUb: num("mmfr_ub"),
      mmfrTrue: num("mmfr_true"),
      mmfrStderr: num("mmfr_stderr"),
      iterations: num("iterations"),
    });
  }
  return rows;
}
