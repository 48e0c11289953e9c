"""Pydantic request/response models for the HTTP service.

Matrices travel as nested JSON lists of floats.  JSON serialization of
doubles is exact on both ends (shortest round-tripping repr), so results
fetched over HTTP are bitwise equal to in-process results.
"""
from __future__ import annotations

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field


class SolverOptions(BaseModel):
    """Mirror of the solver configuration; omitted fields keep defaults."""

    alpha: Optional[float] = None
    lam: Optional[float] = None
    epsilon: Optional[float] = None
    radius: Optional[float] = None
    step_size: Optional[float] = None
    n_iter: Optional[int] = None
    stop_tol: Optional[float] = None

    def overrides(self) -> dict:
        return {k: v for k, v in self.model_dump().items() if v is not None}


class SolveRequest(BaseModel):
    cost: List[List[float]]
    options: SolverOptions = Field(default_factory=SolverOptions)
    row_marginal: Optional[List[float]] = None
    col_target: Optional[List[float]] = None


class SolveReportModel(BaseModel):
    objective_trace: List[float]
    n_iter_run: int
    converged: bool
    clip_count: int
    max_row_violation: float
    final_objective: float
    step_halvings: int


class SolveResponse(BaseModel):
    plan: List[List[float]]
    report: SolveReportModel


class SegmentEntry(BaseModel):
    action: int
    start: int
    length: int


class DecodeRequest(BaseModel):
    plan: List[List[float]]


class DecodeResponse(BaseModel):
    labels: List[int]
    segments: List[SegmentEntry]


class EvaluateRequest(BaseModel):
    predictions: List[List[int]]
    ground_truth: List[List[int]]
    mode: Literal["full_dataset", "per_video"] = "full_dataset"


class EvalResultModel(BaseModel):
    mof: float
    f1: float
    miou: float
    matching: Dict[str, int]
    per_video: Optional[List["EvalResultModel"]] = None


class LogitsToCostRequest(BaseModel):
    logits: List[List[float]]


class LogitsToCostResponse(BaseModel):
    cost: List[List[float]]


class SegmentRequest(BaseModel):
    """Full inference path: embeddings in, segmentation out."""

    features: List[List[float]]
    actions: List[List[float]]
    options: SolverOptions = Field(default_factory=SolverOptions)
    rho: float = 0.0


class SegmentResponse(BaseModel):
    labels: List[int]
    segments: List[SegmentEntry]
    plan: List[List[float]]
    report: SolveReportModel


class HealthResponse(BaseModel):
    status: Literal["ok"] = "ok"


class VersionResponse(BaseModel):
    name: str
    version: str
