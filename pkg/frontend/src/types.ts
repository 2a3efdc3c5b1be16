/** Eight corner coordinates x1,y1,...,x4,y4 in image pixels. */
export type Corners = [number, number, number, number, number, number, number, number];

/** One scored detection quad. */
export interface Detection {
  quad: Corners;
  score: number;
}

export interface IouResult {
  iou: number;
  /** Canonical text form, identical to `quadkit iou` stdout. */
  text: string;
}

export interface GridResult {
  /** Row-major (x, y) sample positions, kernelH * kernelW entries. */
  points: Array<[number, number]>;
  /** Row-major (dy, dx) per-tap offsets; null for even kernels. */
  offsets: Array<[number, number]> | null;
  /** Canonical text form, identical to `quadkit grid` stdout. */
  text: string;
}

export interface PnmsResult {
  detections: Detection[];
  /** Canonical detection-file body, identical to what `quadkit pnms` writes. */
  fileText: string;
}

/** Scale range handled by one pyramid level; hi of null means unbounded. */
export interface LevelRange {
  level: number;
  lo: number;
  hi: number | null;
}

export interface TargetLevelSummary {
  level: number;
  stride: number;
  height: number;
  width: number;
  positive: number;
  ignore: number;
  negative: number;
}

export interface TargetsResult {
  /** Per-level text summary, identical to `quadkit targets` stdout. */
  summary: string;
  /** Serialised target maps, identical to the blob `quadkit targets` writes. */
  blob: Uint8Array;
  levels: TargetLevelSummary[];
}

export interface EvalRow {
  tau: number;
  truePositives: number;
  falsePositives: number;
  falseNegatives: number;
  precision: number;
  recall: number;
  fMeasure: number;
}

export interface EvalResult {
  results: EvalRow[];
  /** One row per threshold, identical to `quadkit eval` stdout. */
  report: string;
}

export interface HealthResult {
  status: string;
  version: string;
}
