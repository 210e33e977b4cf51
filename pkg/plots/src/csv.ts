import { readFileSync } from "fs";

export interface Table {
  columns: string[];
  rows: Record<string, number | string>[];
}

/** Minimal CSV reader: header row, comma separated, numbers parsed eagerly. */
export function readCsv(path: string): Table {
  const text = readFileSync(path, "utf8").trim();
  if (text.length === 0) return { columns: [], rows: [] };
  const lines = text.split(/\r?\n/);
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line) => {
    const cells = line.split(",");
    const row: Record<string, number | string> = {};
    columns.forEach((c, i) => {
      const raw = cells[i] ?? "";
      const num = Number(raw);
      row[c] = raw !== "" && Number.isFinite(num) ? num : raw;
    });
    return row;
  });
  return { columns, rows };
}

/** Throw with every missing column enumerated, not just the first. */
export function requireColumns(table: Table, needed: string[], path: string): void {
  const missing = needed.filter((c) => !table.columns.includes(c));
  if (missing.length > 0) {
    throw new Error(
      `${path}: missing required columns: ${missing.join(", ")} ` +
      `(found: ${table.columns.join(", ") || "none"})`,
    );
  }
}

export function numericColumn(table: Table, name: string): number[] {
  return table.rows.map((r) => {
    const v = r[name];
    if (typeof v !== "number") throw new Error(`non-numeric value in column ${name}`);
    return v;
  });
}
