/**
 * HTTP bindings for the segmentation service.
 *
 * All numerics run server-side; requests and responses carry doubles
 * through JSON, which round-trips float64 exactly on both ends, so
 * results are bitwise identical to in-process solver output.
 */
import { Matrix, fromNested, toNested } from "./matrix";

export interface SolverOptions {
  alpha?: number;
  lam?: number;
  epsilon?: number;
  radius?: number;
  stepSize?: number;
  nIter?: number;
  stopTol?: number;
}

export interface SolveReport {
  objectiveTrace: number[];
  nIterRun: number;
  converged: boolean;
  clipCount: number;
  maxRowViolation: number;
  finalObjective: number;
  stepHalvings: number;
}

export interface Segment {
  action: number;
  start: number;
  length: number;
}

export interface EvalResult {
  mof: number;
  f1: number;
  miou: number;
  matching: Record<string, number>;
  perVideo?: EvalResult[];
}

export type EvalMode = "full_dataset" | "per_video";

export class ServiceError extends Error {
  constructor(public readonly status: number, public readonly detail: string) {
    super(`service returned ${status}: ${detail}`);
    this.name = "ServiceError";
  }
}

function optionsBody(options: SolverOptions): Record<string, number> {
  const body: Record<string, number> = {};
  if (options.alpha !== undefined) body.alpha = options.alpha;
  if (options.lam !== undefined) body.lam = options.lam;
  if (options.epsilon !== undefined) body.epsilon = options.epsilon;
  if (options.radius !== undefined) body.radius = options.radius;
  if (options.stepSize !== undefined) body.step_size = options.stepSize;
  if (options.nIter !== undefined) body.n_iter = options.nIter;
  if (options.stopTol !== undefined) body.stop_tol = options.stopTol;
  return body;
}

function reportOf(raw: any): SolveReport {
  return {
    objectiveTrace: raw.objective_trace,
    nIterRun: raw.n_iter_run,
    converged: raw.converged,
    clipCount: raw.clip_count,
    maxRowViolation: raw.max_row_violation,
    finalObjective: raw.final_objective,
    stepHalvings: raw.step_halvings,
  };
}

function evalOf(raw: any): EvalResult {
  return {
    mof: raw.mof,
    f1: raw.f1,
    miou: raw.miou,
    matching: raw.matching,
    perVideo: raw.per_video ? raw.per_video.map(evalOf) : undefined,
  };
}

export class Client {
  constructor(public readonly baseUrl: string = "http://127.0.0.1:8000") {}

  private async post(route: string, payload: unknown): Promise<any> {
    const resp = await fetch(`${this.baseUrl}${route}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!resp.ok) {
      let detail = await resp.text();
      try {
        detail = JSON.parse(detail).detail ?? detail;
      } catch {
        // leave raw text
      }
      throw new ServiceError(resp.status, String(detail));
    }
    return resp.json();
  }

  async health(): Promise<boolean> {
    try {
      const resp = await fetch(`${this.baseUrl}/health`);
      return resp.ok;
    } catch {
      return false;
    }
  }

  /** Solve a transport problem for an (N, K) cost matrix. */
  async solve(cost: Matrix, options: SolverOptions = {}): Promise<{ plan: Matrix; report: SolveReport }> {
    const body = await this.post("/solve", { cost: toNested(cost), options: optionsBody(options) });
    return { plan: fromNested(body.plan), report: reportOf(body.report) };
  }

  /** Argmax-decode a plan into per-frame labels and run-length segments. */
  async decode(plan: Matrix): Promise<{ labels: Int32Array; segments: Segment[] }> {
    const body = await this.post("/decode", { plan: toNested(plan) });
    return { labels: Int32Array.from(body.labels as number[]), segments: body.segments };
  }

  /** Score predicted label sequences against ground truth. */
  async evaluate(
    predictions: ArrayLike<number>[],
    groundTruth: ArrayLike<number>[],
    mode: EvalMode = "full_dataset"
  ): Promise<EvalResult> {
    const body = await this.post("/evaluate", {
      predictions: predictions.map((p) => Array.from(p)),
      ground_truth: groundTruth.map((g) => Array.from(g)),
      mode,
    });
    return evalOf(body);
  }

  /** Full inference path: embeddings + action embeddings to segmentation. */
  async segment(
    features: Matrix,
    actions: Matrix,
    options: SolverOptions = {},
    rho = 0
  ): Promise<{ labels: Int32Array; segments: Segment[]; plan: Matrix; report: SolveReport }> {
    const body = await this.post("/segment", {
      features: toNested(features),
      actions: toNested(actions),
      options: optionsBody(options),
      rho,
    });
    return {
      labels: Int32Array.from(body.labels as number[]),
      segments: body.segments,
      plan: fromNested(body.plan),
      report: reportOf(body.report),
    };
  }
}

const defaultClient = () => new Client(process.env.OTSEG_SERVER ?? "http://127.0.0.1:8000");

export const solve = (cost: Matrix, options: SolverOptions = {}, baseUrl?: string) =>
  (baseUrl ? new Client(baseUrl) : defaultClient()).solve(cost, options);

export const decode = (plan: Matrix, baseUrl?: string) =>
  (baseUrl ? new Client(baseUrl) : defaultClient()).decode(plan);

export const evaluate = (
  predictions: ArrayLike<number>[],
  groundTruth: ArrayLike<number>[],
  mode: EvalMode = "full_dataset",
  baseUrl?: string
) => (baseUrl ? new Client(baseUrl) : defaultClient()).evaluate(predictions, groundTruth, mode);
