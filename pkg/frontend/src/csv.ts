import { readFileSync } from "node:fs";
import Papa from "papaparse";
import { SchemaError } from "./schema.js";

export interface Table {
  columns: string[];
  rows: Record<string, number>[];
}

/** Read a one-line-header numeric CSV; missing columns raise named errors. */
export function readCsv(path: string, required: string[] = []): Table {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new SchemaError(`${path}: CSV parse error at row ${e.row}: ${e.message}`);
  }
  const columns = parsed.meta.fields ?? [];
  for (const col of required) {
    if (!columns.includes(col)) {
      throw new SchemaError(
        `${path}: missing required column '${col}' (have: ${columns.join(", ")})`,
      );
    }
  }
  const rows = parsed.data.map((r) => {
    const out: Record<string, number> = {};
    for (const c of columns) out[c] = Number(r[c]);
    return out;
  });
  return { columns, rows };
}

export function column(table: Table, name: string): number[] {
  if (!table.columns.includes(name)) {
    throw new SchemaError(`missing column '${name}' (have: ${table.columns.join(", ")})`);
  }
  return table.rows.map((r) => r[name]);
}
