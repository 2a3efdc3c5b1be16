import { QuadkitConnectionError, QuadkitServiceError, QuadkitValidationError } from "./errors.js";
import type {
  Corners,
  Detection,
  EvalResult,
  GridResult,
  HealthResult,
  IouResult,
  LevelRange,
  PnmsResult,
  TargetsResult,
} from "./types.js";

const asPair = (p: number[]): [number, number] => [p[0], p[1]];

/**
 * Client for a running quadkit service (`quadkit serve`).
 *
 * Every method delegates to one endpoint; nothing is computed locally.  The
 * text/bytes fields in the results are the canonical serialisations the CLI
 * writes, byte for byte.
 */
export class QuadkitClient {
  constructor(readonly baseUrl: string) {}

  private async post<T>(path: string, payload: unknown): Promise<T> {
    let resp: Response;
    try {
      resp = await fetch(new URL(path, this.baseUrl), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(payload),
      });
    } catch (err) {
      throw new QuadkitConnectionError(`service request failed: ${err}`);
    }
    if (resp.status === 422) {
      throw new QuadkitValidationError(await resp.text());
    }
    if (!resp.ok) {
      let body: { error?: unknown; detail?: unknown } | null = null;
      try {
        body = await resp.json();
      } catch {
        // non-JSON failure body, fall through
      }
      if (body && typeof body.error === "string") {
        throw new QuadkitServiceError(body.error, String(body.detail ?? ""));
      }
      throw new QuadkitConnectionError(`HTTP ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  async health(): Promise<HealthResult> {
    let resp: Response;
    try {
      resp = await fetch(new URL("/health", this.baseUrl));
    } catch (err) {
      throw new QuadkitConnectionError(`service request failed: ${err}`);
    }
    if (!resp.ok) {
      throw new QuadkitConnectionError(`HTTP ${resp.status}`);
    }
    return (await resp.json()) as HealthResult;
  }

  /** Exact polygon IoU of two convex quads. */
  async iouQuad(a: Corners, b: Corners): Promise<IouResult> {
    return this.post<IouResult>("/v1/iou", { a, b });
  }

  /** Quad-aligned sampling grid; odd kernels also carry per-tap offsets. */
  async sampleGrid(
    quad: Corners,
    opts: { stride?: number; kernelH?: number; kernelW?: number } = {},
  ): Promise<GridResult> {
    const raw = await this.post<{ points: number[][]; offsets: number[][] | null; text: string }>(
      "/v1/grid",
      {
        quad,
        stride: opts.stride ?? 1,
        kernel_h: opts.kernelH ?? 3,
        kernel_w: opts.kernelW ?? 3,
      },
    );
    return {
      points: raw.points.map(asPair),
      offsets: raw.offsets === null ? null : raw.offsets.map(asPair),
      text: raw.text,
    };
  }

  /** Polygon NMS over a detection-file body; returns survivors in score order. */
  async pnms(fileText: string, threshold = 0.3): Promise<PnmsResult> {
    const raw = await this.post<{ detections: Array<{ quad: number[]; score: number }>; file_text: string }>(
      "/v1/pnms",
      { file_text: fileText, threshold },
    );
    return {
      detections: raw.detections.map((d): Detection => ({ quad: d.quad as Corners, score: d.score })),
      fileText: raw.file_text,
    };
  }

  /** Rasterise a ground-truth file body into per-level target maps. */
  async buildTargets(
    gtText: string,
    width: number,
    height: number,
    opts: { shrinkR?: number; levels?: LevelRange[] } = {},
  ): Promise<TargetsResult> {
    const raw = await this.post<{
      summary: string;
      blob_b64: string;
      levels: TargetsResult["levels"];
    }>("/v1/targets", {
      gt_text: gtText,
      width,
      height,
      shrink_r: opts.shrinkR ?? 0.25,
      levels: opts.levels ?? null,
    });
    return {
      summary: raw.summary,
      blob: new Uint8Array(Buffer.from(raw.blob_b64, "base64")),
      levels: raw.levels,
    };
  }

  /**
   * Evaluate detections against ground truth.
   *
   * Keys of both maps are file stems; a stem present in `gtFiles` but absent
   * from `detFiles` counts as zero detections, the reverse is an error.
   */
  async evaluate(
    gtFiles: Record<string, string>,
    detFiles: Record<string, string>,
    taus: number[] = [0.5, 0.75],
  ): Promise<EvalResult> {
    const raw = await this.post<{
      results: Array<{
        tau: number;
        true_positives: number;
        false_positives: number;
        false_negatives: number;
        precision: number;
        recall: number;
        f_measure: number;
      }>;
      report: string;
    }>("/v1/evaluate", { gt_files: gtFiles, det_files: detFiles, taus });
    return {
      results: raw.results.map((r) => ({
        tau: r.tau,
        truePositives: r.true_positives,
        falsePositives: r.false_positives,
        falseNegatives: r.false_negatives,
        precision: r.precision,
        recall: r.recall,
        fMeasure: r.f_measure,
      })),
      report: raw.report,
    };
  }
}
