"""Application layer shared by the HTTP routes and the CLI.

Each handler takes a request model and returns a response model; the
FastAPI routes and the thin CLI client both go through these, so the two
surfaces cannot drift apart numerically.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from .. import costs, metrics, segmentation, solver
from .schemas import (
    DecodeRequest,
    DecodeResponse,
    EvalResultModel,
    EvaluateRequest,
    LogitsToCostRequest,
    LogitsToCostResponse,
    SegmentEntry,
    SegmentRequest,
    SegmentResponse,
    SolveReportModel,
    SolveRequest,
    SolveResponse,
    SolverOptions,
)


def solver_config(options: SolverOptions) -> solver.SolverConfig:
    return solver.SolverConfig(**options.overrides())


def _report_model(report: solver.SolveReport) -> SolveReportModel:
    d = dataclasses.asdict(report)
    d["objective_trace"] = [float(v) for v in report.objective_trace]
    return SolveReportModel(**d)


def _segments_model(seg: segmentation.Segmentation):
    return [SegmentEntry(action=a, start=s, length=n) for a, s, n in seg.segments]


def handle_solve(req: SolveRequest) -> SolveResponse:
    plan, report = solver.solve(
        np.asarray(req.cost, dtype=np.float64),
        solver_config(req.options),
        p=req.row_marginal,
        q=req.col_target,
    )
    return SolveResponse(plan=plan.plan.tolist(), report=_report_model(report))


def handle_decode(req: DecodeRequest) -> DecodeResponse:
    seg = segmentation.decode(np.asarray(req.plan, dtype=np.float64))
    return DecodeResponse(labels=seg.labels.tolist(), segments=_segments_model(seg))


def _eval_model(res: metrics.EvalResult) -> EvalResultModel:
    return EvalResultModel(
        mof=res.mof,
        f1=res.f1,
        miou=res.miou,
        matching={str(k): int(v) for k, v in res.matching.items()},
        per_video=[_eval_model(r) for r in res.per_video] if res.per_video is not None else None,
    )


def handle_evaluate(req: EvaluateRequest) -> EvalResultModel:
    res = metrics.evaluate(
        [np.asarray(p, dtype=np.int64) for p in req.predictions],
        [np.asarray(g, dtype=np.int64) for g in req.ground_truth],
        mode=req.mode,
    )
    return _eval_model(res)


def handle_logits_to_cost(req: LogitsToCostRequest) -> LogitsToCostResponse:
    return LogitsToCostResponse(
        cost=costs.logits_to_cost(np.asarray(req.logits, dtype=np.float64)).tolist()
    )


def handle_segment(req: SegmentRequest) -> SegmentResponse:
    cost = costs.build_kot_cost(
        np.asarray(req.features, dtype=np.float64),
        np.asarray(req.actions, dtype=np.float64),
    )
    if req.rho:
        cost = costs.add_temporal_prior(cost, req.rho)
    plan, report = solver.solve(cost, solver_config(req.options))
    seg = segmentation.decode(plan)
    return SegmentResponse(
        labels=seg.labels.tolist(),
        segments=_segments_model(seg),
        plan=plan.plan.tolist(),
        report=_report_model(report),
    )
