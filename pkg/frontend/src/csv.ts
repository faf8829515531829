/** Minimal CSV reader for the simulator's metrics and monitor trace files. */

export interface Table {
  columns: string[];
  rows: Record<string, string>[];
}

export class SchemaError extends Error {}

export function parseCsv(text: string): Table {
  const lines = text
    .split(/\r?\n/)
    .filter((l) => l.length > 0 && !l.startsWith("#"));
  if (lines.length === 0) {
    throw new SchemaError("empty CSV: no header line found");
  }
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line, i) => {
    const parts = line.split(",");
    if (parts.length !== columns.length) {
      throw new SchemaError(
        `row ${i + 1} has ${parts.length} fields, header has ${columns.length}`,
      );
    }
    const row: Record<string, string> = {};
    columns.forEach((c, j) => (row[c] = parts[j]));
    return row;
  });
  return { columns, rows };
}

/** Parses "inf"/"-inf"/"nan" the way the simulator serializes them. */
export function num(value: string): number {
  if (value === "inf") return Infinity;
  if (value === "-inf") return -Infinity;
  if (value === "nan") return NaN;
  const v = Number(value);
  if (Number.isNaN(v) && value !== "nan") {
    throw new SchemaError(`not a number: "${value}"`);
  }
  return v;
}

export function requireColumns(table: Table, needed: string[]): void {
  const missing = needed.filter((c) => !table.columns.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `missing column(s) [${missing.join(", ")}]; ` +
        `file has [${table.columns.join(", ")}]`,
    );
  }
}
