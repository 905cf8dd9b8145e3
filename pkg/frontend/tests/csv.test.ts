import { describe, expect, it } from "vitest";

import { EmptyCsvError, MissingColumnError, parseCsv, requireColumn } from "../src/csv.js";

describe("parseCsv", () => {
  it("parses numeric rows in column order", () => {
    const table = parseCsv("a,b\n1,2\n3,nan\n", "t.csv");
    expect(table.columns).toEqual(["a", "b"]);
    expect(table.rows).toBe(2);
    expect(table.data.get("a")).toEqual([1, 3]);
    expect(table.data.get("b")![1]).toBeNaN();
  });

  it("parses inf cells", () => {
    const table = parseCsv("a\ninf\n-inf\n", "t.csv");
    expect(table.data.get("a")).toEqual([Infinity, -Infinity]);
  });

  it("rejects an empty file", () => {
    expect(() => parseCsv("", "t.csv")).toThrow(EmptyCsvError);
  });

  it("rejects a header-only file", () => {
    expect(() => parseCsv("a,b\n", "t.csv")).toThrow(EmptyCsvError);
  });

  it("rejects ragged rows", () => {
    expect(() => parseCsv("a,b\n1\n", "t.csv")).toThrow(/row 2/);
  });

  it("rejects junk cells", () => {
    expect(() => parseCsv("a\nhello\n", "t.csv")).toThrow(/cannot parse/);
  });
});

describe("requireColumn", () => {
  it("names the missing column", () => {
    const table = parseCsv("a\n1\n", "t.csv");
    expect(() => requireColumn(table, "mean_f", "t.csv")).toThrow(
      /column 'mean_f' not found/,
    );
    try {
      requireColumn(table, "mean_f", "t.csv");
    } catch (err) {
      expect((err as MissingColumnError).column).toBe("mean_f");
    }
  });
});
