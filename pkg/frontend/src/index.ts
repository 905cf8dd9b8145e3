export { buildFigure, FigureSpec } from "./figure.js";
export { parseCsv, requireColumn, MissingColumnError, EmptyCsvError } from "./csv.js";
export { renderSvg } from "./render.js";
export { parseArgs, main } from "./cli.js";
