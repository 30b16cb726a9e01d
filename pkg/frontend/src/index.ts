export {
  DumpPoint,
  PlotError,
  RESULTS_HEADER,
  RESULTS_SCHEMA_VERSION,
  ResultRow,
  SchemaError,
  TAPS_HEADER,
  TapRow,
  readDumpCsv,
  readResultsCsv,
  readTapsCsv,
} from "./csv";
export { Curve, CurvePoint, EmptySelectionError, buildCurves, renderBerFigure } from "./ber";
export { Panel, renderConstellationFigure } from "./constellation";
export { renderTapFigure } from "./taps";
export { FEC_THRESHOLD, FigureKind, PlotSpec, applyFilter, plotFigure } from "./plot";
export { run } from "./cli";
