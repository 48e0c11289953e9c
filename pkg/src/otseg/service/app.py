"""FastAPI application wrapping the core package.

All endpoints are stateless and safe for concurrent clients.  Domain
errors map to 422 (bad input) and numerical failures to 500 with a
structured body.
"""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import InvalidInputError, NumericalError
from . import handlers
from .schemas import (
    DecodeRequest,
    DecodeResponse,
    EvalResultModel,
    EvaluateRequest,
    HealthResponse,
    LogitsToCostRequest,
    LogitsToCostResponse,
    SegmentRequest,
    SegmentResponse,
    SolveRequest,
    SolveResponse,
    VersionResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(
        title="otseg",
        version=__version__,
        description="Temporally consistent action segmentation via optimal transport",
    )

    @app.exception_handler(InvalidInputError)
    async def _invalid_input(_: Request, exc: InvalidInputError):
        return JSONResponse(status_code=422, content={"error": "invalid_input", "detail": str(exc)})

    @app.exception_handler(NumericalError)
    async def _numerical(_: Request, exc: NumericalError):
        return JSONResponse(
            status_code=500, content={"error": "numerical_failure", "detail": str(exc)}
        )

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse()

    @app.get("/version", response_model=VersionResponse)
    def version():
        return VersionResponse(name="otseg", version=__version__)

    @app.post("/solve", response_model=SolveResponse)
    def solve(req: SolveRequest):
        return handlers.handle_solve(req)

    @app.post("/decode", response_model=DecodeResponse)
    def decode(req: DecodeRequest):
        return handlers.handle_decode(req)

    @app.post("/evaluate", response_model=EvalResultModel)
    def evaluate(req: EvaluateRequest):
        return handlers.handle_evaluate(req)

    @app.post("/logits-to-cost", response_model=LogitsToCostResponse)
    def logits_to_cost(req: LogitsToCostRequest):
        return handlers.handle_logits_to_cost(req)

    @app.post("/segment", response_model=SegmentResponse)
    def segment(req: SegmentRequest):
        return handlers.handle_segment(req)

    return app


app = create_app()
