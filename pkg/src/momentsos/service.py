"""HTTP service wrapping the relaxation pipeline.

POST a problem (same schema as the JSON problem file) together with a run
configuration; responses are the pipeline reports.  The CLI uses the same
request/response models and can either call these handlers in-process or
talk to a running instance over HTTP.
"""

from __future__ import annotations

from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .correlative import OrderTooLowError
from .poly import PopFormatError
from .run import (
    BlocksReport,
    RelaxReport,
    RunConfig,
    RunReport,
    compute_gap,
    run_blocks,
    run_relax,
    run_solve,
)


class PolyPayload(BaseModel):
    supp: list[list[int]]
    coe: list[float]


class ProblemPayload(BaseModel):
    """Problem description, mirroring the JSON file format."""

    n: int = Field(ge=1)
    nb: int = 0
    format: Literal["dense", "index"] = "dense"
    objective: PolyPayload
    ineq: list[PolyPayload] = []
    eq: list[PolyPayload] = []


class SolveRequest(BaseModel):
    problem: ProblemPayload
    config: RunConfig = RunConfig()


class GapRequest(BaseModel):
    ac: float
    opt: float


class GapResponse(BaseModel):
    gap_percent: float


class HealthResponse(BaseModel):
    status: str
    version: str


app = FastAPI(
    title="momentsos",
    description="Sparsity-adapted moment relaxations for polynomial optimization",
    version=__version__,
)


def _run(fn, request: SolveRequest):
    try:
        return fn(request.problem.model_dump(), request.config)
    except (PopFormatError, OrderTooLowError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/solve", response_model=RunReport)
def solve(request: SolveRequest) -> RunReport:
    return _run(run_solve, request)


@app.post("/blocks", response_model=BlocksReport)
def blocks(request: SolveRequest) -> BlocksReport:
    return _run(run_blocks, request)


@app.post("/relax", response_model=RelaxReport)
def relax(request: SolveRequest) -> RelaxReport:
    return _run(run_relax, request)


@app.post("/gap", response_model=GapResponse)
def gap(request: GapRequest) -> GapResponse:
    try:
        return GapResponse(gap_percent=compute_gap(request.ac, request.opt))
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
