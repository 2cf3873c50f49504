"""Pipeline orchestration shared by the HTTP service and the CLI.

A RunConfig selects the hierarchy (dense, correlative, term-sparse, or
combined), the relaxation and sparse orders, and solver settings; the run
functions parse a problem, build one relaxation per sparse-order step
(reusing supports between steps), and either solve with the built-in
interior-point solver or export SDPA text.
"""

from __future__ import annotations

import time
from typing import Literal, Optional

from pydantic import BaseModel, Field

from .correlative import CliqueDecomposition, decompose
from .poly import PopFormatError, PopInstance, half_degrees, pop_from_data, parse_pop
from .relax import (
    MomentSdp,
    assemble_cs,
    assemble_cs_ts,
    assemble_dense,
    assemble_ts,
    structure_summary,
)
from .sdp import solve_ipm, to_standard_form
from .sdp.sdpa import sdpa_dumps
from .termsparse import BlockStructure, full_blocks, iterate_steps, newton_basis

OK_STATUSES = ("optimal", "near-optimal", "exported")


class RunConfig(BaseModel):
    """Hierarchy selection and solver options for one run."""

    order: Optional[int] = Field(default=None, ge=1)
    sparse_order: int = Field(default=1, ge=1)
    ts: Literal["none", "block", "MD", "MF", "heuristic"] = "none"
    cs: Literal["none", "MD", "MF", "heuristic"] = "none"
    moment_one: bool = False
    merge: bool = False
    md: int = Field(default=3, ge=2)
    nb: Optional[int] = Field(default=None, ge=0)
    numeq: int = Field(default=0, ge=0)
    newton: bool = False
    stabilize: bool = False
    solver: Literal["internal", "sdpa-export"] = "internal"
    tol: float = Field(default=1e-8, gt=0)
    max_iter: int = Field(default=200, ge=1)
    ac: Optional[float] = None

    def ts_heuristic(self) -> str:
        # recommended default for term sparsity is minimum fill-in
        return "MF" if self.ts == "heuristic" else self.ts

    def cs_heuristic(self) -> str:
        # recommended default for correlative sparsity is minimum degree
        return "MD" if self.cs == "heuristic" else self.cs


class StepReport(BaseModel):
    k: int
    optimum: Optional[float] = None
    status: str
    mb: int
    n_moments: int
    iterations: int = 0
    time_s: float = 0.0


class RunReport(BaseModel):
    optimum: Optional[float] = None
    status: str
    mc: int
    mb: int
    steps: list[StepReport]
    time_s: float
    stabilized: bool
    order: int
    gap: Optional[float] = None
    dat_s: Optional[str] = None


class BlocksStepReport(BaseModel):
    k: int
    block_sizes: dict[int, int]
    mb: int
    stabilized: bool


class BlocksReport(BaseModel):
    order: int
    cliques: list[list[int]]
    j_prime: list[int]
    mc: int
    steps: list[BlocksStepReport]
    stabilized_at: Optional[int] = None


class RelaxReport(BaseModel):
    dat_s: str
    summary: dict
    mc: int
    mb: int
    order: int


def compute_gap(ac: float, opt: float) -> float:
    """Optimality gap (ac - opt) / ac in percent; undefined for ac = 0."""
    if ac == 0:
        raise ValueError("optimality gap is undefined for a zero local optimum")
    return (ac - opt) / ac * 100.0


def prepare_pop(problem, config: RunConfig) -> PopInstance:
    """Parse problem data (dict or JSON text) applying nb/numeq overrides."""
    if isinstance(problem, PopInstance):
        if config.nb is not None or config.numeq:
            raise PopFormatError(
                "nb/numeq overrides require raw problem data, not a built instance"
            )
        return problem
    if isinstance(problem, str):
        import json

        try:
            data = json.loads(problem)
        except json.JSONDecodeError as exc:
            raise PopFormatError(
                f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    else:
        data = dict(problem)
    if config.nb is not None:
        data = {**data, "nb": config.nb}
    return pop_from_data(data, numeq=config.numeq)


def _resolve_order(pop: PopInstance, config: RunConfig) -> int:
    d_min = max(half_degrees(pop).d_min, 1)
    if config.order is None:
        return d_min
    return config.order  # too-low orders fail in the builders


def _structures(pop: PopInstance, d: int, config: RunConfig):
    """Yield (k, BlockStructure) per step plus the clique decomposition."""
    decomposition = None
    if config.cs != "none":
        decomposition = decompose(pop, d, config.cs_heuristic())
    basis0 = None
    if config.newton:
        if pop.g or pop.h or decomposition is not None:
            raise PopFormatError(
                "the Newton-polytope basis applies to unconstrained dense/TS runs only"
            )
        basis0 = newton_basis(pop.f, d)

    if config.ts == "none":
        yield decomposition, full_blocks(pop, d, decomposition, basis0)
        return
    steps = iterate_steps(
        pop,
        d,
        config.ts_heuristic(),
        decomposition,
        basis0,
        merge=config.merge,
        md=config.md,
    )
    limit = 100 if config.stabilize else config.sparse_order
    for _ in range(limit):
        structure = next(steps)
        yield decomposition, structure
        if config.stabilize and structure.stabilized:
            break
    steps.close()


def _assemble(
    pop: PopInstance,
    d: int,
    decomposition: CliqueDecomposition | None,
    structure: BlockStructure,
    config: RunConfig,
) -> MomentSdp:
    if config.cs == "none" and config.ts == "none":
        return assemble_dense(pop, d)
    if config.cs != "none" and config.ts == "none":
        return assemble_cs(pop, d, decomposition)
    if config.cs == "none":
        return assemble_ts(pop, d, structure)
    return assemble_cs_ts(pop, d, decomposition, structure, config.moment_one)


def run_solve(problem, config: RunConfig) -> RunReport:
    """Run steps 1..k of the selected hierarchy and report per-step optima."""
    t_start = time.perf_counter()
    pop = prepare_pop(problem, config)
    d = _resolve_order(pop, config)

    steps: list[StepReport] = []
    decomposition = None
    structure = None
    dat_s = None
    for decomposition, structure in _structures(pop, d, config):
        t_step = time.perf_counter()
        msdp = _assemble(pop, d, decomposition, structure, config)
        summary = structure_summary(msdp)
        if config.solver == "sdpa-export":
            dat_s = sdpa_dumps(to_standard_form(msdp))
            steps.append(
                StepReport(
                    k=structure.k,
                    status="exported",
                    mb=summary["max_block_size"],
                    n_moments=summary["n_moments"],
                    time_s=time.perf_counter() - t_step,
                )
            )
            continue
        result = solve_ipm(
            to_standard_form(msdp), tol=config.tol, max_iter=config.max_iter
        )
        optimum = (
            result.primal_objective if result.status in OK_STATUSES else None
        )
        steps.append(
            StepReport(
                k=structure.k,
                optimum=optimum,
                status=result.status,
                mb=summary["max_block_size"],
                n_moments=summary["n_moments"],
                iterations=result.iterations,
                time_s=time.perf_counter() - t_step,
            )
        )

    final = steps[-1]
    mc = decomposition.max_clique_size if decomposition is not None else pop.n
    gap = None
    if config.ac is not None and final.optimum is not None:
        gap = compute_gap(config.ac, final.optimum)
    return RunReport(
        optimum=final.optimum,
        status=final.status,
        mc=mc,
        mb=max(s.mb for s in steps),
        steps=steps,
        time_s=time.perf_counter() - t_start,
        stabilized=structure.stabilized if structure is not None else True,
        order=d,
        gap=gap,
        dat_s=dat_s,
    )


def run_blocks(problem, config: RunConfig) -> BlocksReport:
    """Structure analysis only: cliques, per-step block histograms, no solving."""
    pop = prepare_pop(problem, config)
    d = _resolve_order(pop, config)
    steps: list[BlocksStepReport] = []
    decomposition = None
    stabilized_at = None
    for decomposition, structure in _structures(pop, d, config):
        hist = _dense_hist(pop, d, decomposition, structure, config)
        steps.append(
            BlocksStepReport(
                k=structure.k,
                block_sizes=hist,
                mb=max(hist, default=0),
                stabilized=structure.stabilized,
            )
        )
        if structure.stabilized and stabilized_at is None:
            stabilized_at = structure.k
    if decomposition is not None:
        cliques = [list(c) for c in decomposition.cliques]
        j_prime = list(decomposition.j_prime)
        mc = decomposition.max_clique_size
    else:
        cliques = [list(range(pop.n))]
        j_prime = []
        mc = pop.n
    return BlocksReport(
        order=d,
        cliques=cliques,
        j_prime=j_prime,
        mc=mc,
        steps=steps,
        stabilized_at=stabilized_at,
    )


def _dense_hist(pop, d, decomposition, structure, config):
    msdp = _assemble(pop, d, decomposition, structure, config)
    return structure_summary(msdp)["psd_block_sizes"]


def run_relax(problem, config: RunConfig) -> RelaxReport:
    """Assemble the final-step relaxation and export SDPA text plus a summary."""
    pop = prepare_pop(problem, config)
    d = _resolve_order(pop, config)
    decomposition = structure = None
    for decomposition, structure in _structures(pop, d, config):
        pass
    msdp = _assemble(pop, d, decomposition, structure, config)
    summary = structure_summary(msdp)
    dat_s = sdpa_dumps(to_standard_form(msdp))
    mc = decomposition.max_clique_size if decomposition is not None else pop.n
    return RelaxReport(
        dat_s=dat_s,
        summary=summary,
        mc=mc,
        mb=summary["max_block_size"],
        order=d,
    )
