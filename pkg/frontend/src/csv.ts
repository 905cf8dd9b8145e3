/** Strict reader for the simulator's trace/summary CSV files. */

export interface Table {
  columns: string[];
  /** column name -> numeric values, row order preserved */
  data: Map<string, number[]>;
  rows: number;
}

export class MissingColumnError extends Error {
  readonly column: string;
  constructor(column: string, source: string) {
    super(`column '${column}' not found in ${source}`);
    this.name = "MissingColumnError";
    this.column = column;
  }
}

export class EmptyCsvError extends Error {
  constructor(source: string) {
    super(`no data rows in ${source}`);
    this.name = "EmptyCsvError";
  }
}

function parseCell(cell: string): number {
  if (cell === "nan") return NaN;
  if (cell === "inf") return Infinity;
  if (cell === "-inf") return -Infinity;
  const value = Number(cell);
  if (cell.trim() === "" || Number.isNaN(value)) {
    throw new Error(`cannot parse numeric cell '${cell}'`);
  }
  return value;
}

export function parseCsv(text: string, source: string): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) throw new EmptyCsvError(source);
  const columns = lines[0].split(",").map((c) => c.trim());
  if (lines.length === 1) throw new EmptyCsvError(source);
  const data = new Map<string, number[]>(columns.map((c) => [c, []]));
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== columns.length) {
      throw new Error(
        `${source}: row ${i + 1} has ${cells.length} cells, header has ${columns.length}`,
      );
    }
    for (let j = 0; j < columns.length; j++) {
      data.get(columns[j])!.push(parseCell(cells[j]));
    }
  }
  return { columns, data, rows: lines.length - 1 };
}

export function requireColumn(table: Table, column: string, source: string): number[] {
  const values = table.data.get(column);
  if (values === undefined) throw new MissingColumnError(column, source);
  return values;
}
