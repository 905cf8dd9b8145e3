/** Figure assembly: read summary CSVs, build curves, render to SVG bytes. */

import { readFileSync } from "fs";
import { basename } from "path";

import { EmptyCsvError, parseCsv, requireColumn, Table } from "./csv.js";
import { renderSvg, Band, Curve, RenderSpec } from "./render.js";

export interface FigureSpec {
  inputs: string[];
  yColumn: string;
  boundColumns: string[];
  logY: boolean;
  labels: string[];
  output: string;
}

const SWEEP_COLUMN = "sweep_value";
const ROUND_COLUMN = "round";

function seColumnFor(yColumn: string): string | null {
  return yColumn.startsWith("mean_") ? yColumn.replace(/^mean_/, "se_") : null;
}

interface Series {
  label: string;
  rounds: number[];
  values: number[];
  ses: number[] | null;
  bounds: { label: string; values: number[] }[];
}

function sliceSeries(
  table: Table,
  source: string,
  spec: FigureSpec,
  label: string,
  indices: number[] | null,
): Series {
  const pick = (values: number[]) =>
    indices === null ? values : indices.map((i) => values[i]);
  const rounds = pick(requireColumn(table, ROUND_COLUMN, source));
  const values = pick(requireColumn(table, spec.yColumn, source));
  const seColumn = seColumnFor(spec.yColumn);
  const ses =
    seColumn !== null && table.data.has(seColumn)
      ? pick(table.data.get(seColumn)!)
      : null;
  const bounds = spec.boundColumns.map((column) => ({
    label: column,
    values: pick(requireColumn(table, column, source)),
  }));
  return { label, rounds, values, ses, bounds };
}

function loadSeries(spec: FigureSpec): Series[] {
  const series: Series[] = [];
  spec.inputs.forEach((path, fileIndex) => {
    const source = basename(path);
    const table = parseCsv(readFileSync(path, "ascii"), source);
    if (table.rows === 0) throw new EmptyCsvError(source);
    const fileLabel = spec.labels[fileIndex] ?? source.replace(/\.csv$/, "");
    if (table.data.has(SWEEP_COLUMN)) {
      const sweep = table.data.get(SWEEP_COLUMN)!;
      const groups = new Map<number, number[]>();
      sweep.forEach((value, row) => {
        if (!groups.has(value)) groups.set(value, []);
        groups.get(value)!.push(row);
      });
      for (const [value, rows] of groups) {
        const label =
          spec.inputs.length > 1
            ? `${fileLabel} ${SWEEP_COLUMN}=${value}`
            : `${SWEEP_COLUMN}=${value}`;
        series.push(sliceSeries(table, source, spec, label, rows));
      }
    } else {
      series.push(sliceSeries(table, source, spec, fileLabel, null));
    }
  });
  return series;
}

export function buildFigure(spec: FigureSpec): string {
  if (spec.inputs.length === 0) throw new Error("at least one input CSV required");
  const series = loadSeries(spec);
  const curves: Curve[] = [];
  const bands: Band[] = [];
  series.forEach((s, index) => {
    if (s.ses !== null) {
      bands.push({
        x: s.rounds,
        lo: s.values.map((v, i) => v - 2 * s.ses![i]),
        hi: s.values.map((v, i) => v + 2 * s.ses![i]),
        colorIndex: index,
      });
    }
    curves.push({
      label: s.label,
      x: s.rounds,
      y: s.values,
      colorIndex: index,
      dashed: false,
    });
    for (const bound of s.bounds) {
      curves.push({
        label: series.length > 1 ? `${s.label} ${bound.label}` : bound.label,
        x: s.rounds,
        y: bound.values,
        colorIndex: index,
        dashed: true,
      });
    }
  });
  const render: RenderSpec = {
    curves,
    bands,
    logY: spec.logY,
    xLabel: ROUND_COLUMN,
    yLabel: spec.yColumn,
  };
  return renderSvg(render);
}
