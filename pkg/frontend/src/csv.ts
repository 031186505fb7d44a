/**
 * Strict reader for the simulation CLI's CSV artifacts.
 *
 * Artifacts are plain comma-separated files: one header row of column
 * names followed by numeric rows (floats printed with 17 significant
 * digits).  Anything else — ragged rows, non-numeric cells, an empty
 * file — is rejected, with the offending line number.
 */
import { ParseError, SchemaError } from "./errors.js";

export interface Table {
  /** Column names in file order. */
  header: string[];
  /** One Float64Array per column, all of equal length. */
  columns: Float64Array[];
  /** Number of data rows. */
  length: number;
  source: string;
}

export function parseCsv(text: string, source: string): Table {
  const lines = text.split("\n");
  while (lines.length > 0 && lines[lines.length - 1] === "") lines.pop();
  if (lines.length === 0) {
    throw new ParseError(source, 1, "empty CSV file");
  }
  const header = (lines[0] ?? "").split(",").map((h) => h.trim());
  if (header.some((h) => h === "")) {
    throw new ParseError(source, 1, "empty column name in header");
  }
  const width = header.length;
  const rows = lines.length - 1;
  const columns = header.map(() => new Float64Array(rows));
  for (let i = 0; i < rows; i++) {
    const cells = (lines[i + 1] ?? "").split(",");
    if (cells.length !== width) {
      throw new ParseError(
        source,
        i + 2,
        `expected ${width} columns, found ${cells.length}`,
      );
    }
    for (let j = 0; j < width; j++) {
      const value = Number(cells[j]);
      if (cells[j]?.trim() === "" || Number.isNaN(value)) {
        throw new ParseError(
          source,
          i + 2,
          `column ${header[j]} is not numeric: ${JSON.stringify(cells[j])}`,
        );
      }
      columns[j]![i] = value;
    }
  }
  return { header, columns, length: rows, source };
}

/** Column by name; SchemaError names the missing column. */
export function column(table: Table, name: string): Float64Array {
  const index = table.header.indexOf(name);
  if (index < 0) {
    throw new SchemaError(
      `${table.source}: missing column ${JSON.stringify(name)} ` +
        `(has: ${table.header.join(", ")})`,
    );
  }
  return table.columns[index]!;
}

/** All columns whose names share a prefix, in file order. */
export function columnsWithPrefix(
  table: Table,
  prefix: string,
): { name: string; values: Float64Array }[] {
  const out: { name: string; values: Float64Array }[] = [];
  for (let i = 0; i < table.header.length; i++) {
    const name = table.header[i]!;
    if (name.startsWith(prefix)) out.push({ name, values: table.columns[i]! });
  }
  return out;
}

/** Assert the presence of every named column up front. */
export function requireColumns(table: Table, names: string[]): void {
  for (const name of names) column(table, name);
}
