import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { dirname, join } from "path";
import { fileURLToPath } from "url";

import { describe, expect, it } from "vitest";

import { buildFigure } from "../src/figure.js";
import { main, parseArgs } from "../src/cli.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");
const SUMMARY = join(FIXTURES, "summary.csv");
const SWEEP = join(FIXTURES, "sweep.csv");
const REFERENCE = join(FIXTURES, "reference.svg");

const baseSpec = {
  inputs: [SUMMARY],
  yColumn: "mean_dist_sq",
  boundColumns: ["bound_sc"],
  logY: true,
  labels: [],
  output: "unused.svg",
};

describe("buildFigure", () => {
  it("reproduces the committed reference image byte for byte", () => {
    const svg = buildFigure(baseSpec);
    const reference = readFileSync(REFERENCE, "ascii");
    expect(svg).toBe(reference);
  });

  it("is deterministic across repeated renders", () => {
    expect(buildFigure(baseSpec)).toBe(buildFigure(baseSpec));
  });

  it("draws one labeled curve per sweep value", () => {
    const svg = buildFigure({ ...baseSpec, inputs: [SWEEP], boundColumns: [] });
    expect(svg).toContain("sweep_value=1");
    expect(svg).toContain("sweep_value=3");
    expect(svg).toContain("sweep_value=6");
  });

  it("fails with a named-column error on schema drift", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const drifted = join(dir, "drift.csv");
    const lines = readFileSync(SUMMARY, "ascii").split("\n");
    lines[0] = lines[0].replace("mean_dist_sq", "dist_mean_sq");
    writeFileSync(drifted, lines.join("\n"));
    expect(() => buildFigure({ ...baseSpec, inputs: [drifted] })).toThrow(
      /column 'mean_dist_sq' not found/,
    );
  });

  it("rejects an empty csv", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const empty = join(dir, "empty.csv");
    writeFileSync(empty, "");
    expect(() => buildFigure({ ...baseSpec, inputs: [empty] })).toThrow(/no data rows/);
  });

  it("includes the uncertainty band and dashed bound overlay", () => {
    const svg = buildFigure(baseSpec);
    expect(svg).toContain('fill-opacity="0.15"');
    expect(svg).toContain('stroke-dasharray="7,4"');
    expect(svg).toContain("bound_sc");
  });
});

describe("cli", () => {
  it("parses the documented flags", () => {
    const spec = parseArgs([
      "--in", SUMMARY, "--y", "mean_dist_sq",
      "--bounds", "bound_sc", "--log-y", "--out", "fig.svg",
    ]);
    expect(spec.inputs).toEqual([SUMMARY]);
    expect(spec.yColumn).toBe("mean_dist_sq");
    expect(spec.boundColumns).toEqual(["bound_sc"]);
    expect(spec.logY).toBe(true);
    expect(spec.output).toBe("fig.svg");
  });

  it("accepts several --in paths", () => {
    const spec = parseArgs(["--in", "a.csv", "b.csv", "--y", "mean_f", "--out", "x.svg"]);
    expect(spec.inputs).toEqual(["a.csv", "b.csv"]);
  });

  it("returns 2 on usage errors and 1 on data errors", () => {
    expect(main(["--y", "mean_f", "--out", "x.svg"])).toBe(2);
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const empty = join(dir, "empty.csv");
    writeFileSync(empty, "");
    expect(main(["--in", empty, "--y", "mean_f", "--out", join(dir, "o.svg")])).toBe(1);
  });

  it("writes the output file on success", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const out = join(dir, "fig.svg");
    const code = main([
      "--in", SUMMARY, "--y", "mean_dist_sq", "--bounds", "bound_sc",
      "--log-y", "--out", out,
    ]);
    expect(code).toBe(0);
    expect(readFileSync(out, "ascii")).toBe(readFileSync(REFERENCE, "ascii"));
  });
});
