"""Command-line front end: parse, analyze, relax, solve, export, serve.

Every command runs in-process by default; pass --server to send the same
request to a running service instance instead.  Exit codes: 0 on success
(optimal, near-optimal, or exported), 2 on input errors, 3 on solver
failure.
"""

from __future__ import annotations

import json
import sys

import click

from .correlative import OrderTooLowError
from .poly import PopFormatError
from .run import (
    OK_STATUSES,
    RunConfig,
    compute_gap,
    run_blocks,
    run_relax,
    run_solve,
)

EXIT_INPUT = 2
EXIT_SOLVER = 3


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _config_options(fn):
    opts = [
        click.option("--order", "-d", type=int, default=None, help="Relaxation order (default: minimum feasible)."),
        click.option("--sparse-order", "-k", type=int, default=1, show_default=True, help="Term-sparsity iteration count."),
        click.option("--ts", type=click.Choice(["none", "block", "MD", "MF", "heuristic"]), default="none", show_default=True, help="Term-sparsity mode (heuristic = MF)."),
        click.option("--cs", type=click.Choice(["none", "MD", "MF", "heuristic"]), default="none", show_default=True, help="Correlative-sparsity heuristic (heuristic = MD)."),
        click.option("--moment-one", is_flag=True, help="Add a first-order moment block per clique (CS-TS only)."),
        click.option("--merge", is_flag=True, help="Merge heavily overlapping PSD blocks."),
        click.option("--md", type=int, default=3, show_default=True, help="Block merge strength (>= 2)."),
        click.option("--nb", type=int, default=None, help="Leading binary-variable count override."),
        click.option("--numeq", type=int, default=0, show_default=True, help="Trailing constraints to treat as equalities."),
        click.option("--newton", is_flag=True, help="Newton-polytope monomial basis (unconstrained only)."),
        click.option("--stabilize", is_flag=True, help="Iterate until the support stabilizes."),
        click.option("--solver", type=click.Choice(["internal", "sdpa-export"]), default="internal", show_default=True),
        click.option("--tol", type=float, default=1e-8, show_default=True, help="Solver tolerance."),
        click.option("--max-iter", type=int, default=200, show_default=True),
        click.option("--server", type=str, default=None, help="Send the request to a running service URL."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _build_config(kw) -> RunConfig:
    fields = {
        k: v
        for k, v in kw.items()
        if k in RunConfig.model_fields and v is not None
    }
    try:
        return RunConfig(**fields)
    except ValueError as exc:
        _fail(str(exc), EXIT_INPUT)


def _load_problem(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        _fail(str(exc), EXIT_INPUT)
    except json.JSONDecodeError as exc:
        _fail(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            EXIT_INPUT,
        )


def _post(server: str, endpoint: str, payload: dict) -> dict:
    import httpx

    try:
        resp = httpx.post(f"{server.rstrip('/')}/{endpoint}", json=payload, timeout=600.0)
    except httpx.HTTPError as exc:
        _fail(f"service request failed: {exc}", EXIT_INPUT)
    if resp.status_code == 422:
        detail = resp.json().get("detail", resp.text)
        _fail(str(detail), EXIT_INPUT)
    if resp.status_code != 200:
        _fail(f"service error {resp.status_code}: {resp.text}", EXIT_SOLVER)
    return resp.json()


def _dispatch(endpoint: str, runner, report_model, problem: dict, config: RunConfig, server):
    if server:
        data = _post(server, endpoint, {"problem": problem, "config": config.model_dump()})
        return report_model.model_validate(data)
    try:
        return runner(problem, config)
    except (PopFormatError, OrderTooLowError, ValueError) as exc:
        _fail(str(exc), EXIT_INPUT)


def _write_json(report, path: str, exclude=frozenset({"dat_s"})) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.model_dump_json(indent=2, exclude=set(exclude)))
        fh.write("\n")


@click.group()
@click.version_option(package_name="momentsos")
def main():
    """Sparsity-adapted moment relaxations for polynomial optimization."""


@main.command()
@click.argument("problem_file", type=click.Path(exists=True, dir_okay=False))
@_config_options
@click.option("--ac", type=float, default=None, help="Local optimum; adds the optimality gap to the report.")
@click.option("--json", "json_out", type=click.Path(dir_okay=False), default=None, help="Write the report as JSON.")
@click.option("--export", "export_path", type=click.Path(dir_okay=False), default=None, help="Write the .dat-s export (with --solver sdpa-export).")
def solve(problem_file, ac, json_out, export_path, server, **kw):
    """Build and solve the selected relaxation hierarchy."""
    config = _build_config({**kw, "ac": ac})
    if export_path and config.solver != "sdpa-export":
        _fail("--export requires --solver sdpa-export (or use the relax command)", EXIT_INPUT)
    from .run import RunReport

    problem = _load_problem(problem_file)
    report = _dispatch("solve", run_solve, RunReport, problem, config, server)

    hierarchy = _hierarchy_name(config)
    click.echo(f"hierarchy: {hierarchy}   order d={report.order}")
    for step in report.steps:
        opt = "-" if step.optimum is None else f"{step.optimum:.12g}"
        click.echo(
            f"  step k={step.k}: optimum={opt}  status={step.status}  "
            f"mb={step.mb}  moments={step.n_moments}  ({step.time_s:.2f}s)"
        )
    opt = "-" if report.optimum is None else f"{report.optimum:.12g}"
    click.echo(f"optimum = {opt}")
    click.echo(
        f"status={report.status}  mc={report.mc}  mb={report.mb}  "
        f"stabilized={str(report.stabilized).lower()}  time={report.time_s:.2f}s"
    )
    if report.gap is not None:
        click.echo(f"gap = {report.gap:.2f}%")
    if export_path and report.dat_s:
        with open(export_path, "w", encoding="utf-8") as fh:
            fh.write(report.dat_s)
        click.echo(f"wrote {export_path}")
    if json_out:
        _write_json(report, json_out)
    if report.status not in OK_STATUSES:
        sys.exit(EXIT_SOLVER)


def _hierarchy_name(config: RunConfig) -> str:
    if config.cs != "none" and config.ts != "none":
        return f"CS-TS (cs={config.cs_heuristic()}, ts={config.ts_heuristic()})"
    if config.cs != "none":
        return f"CS (cs={config.cs_heuristic()})"
    if config.ts != "none":
        return f"TS (ts={config.ts_heuristic()})"
    return "dense"


@main.command()
@click.argument("problem_file", type=click.Path(exists=True, dir_okay=False))
@_config_options
@click.option("--json", "json_out", type=click.Path(dir_okay=False), default=None, help="Write the report as JSON.")
def blocks(problem_file, json_out, server, **kw):
    """Report cliques and per-step block structure without solving."""
    config = _build_config(kw)
    from .run import BlocksReport

    problem = _load_problem(problem_file)
    report = _dispatch("blocks", run_blocks, BlocksReport, problem, config, server)
    click.echo(f"order d={report.order}   mc={report.mc}")
    click.echo("cliques: " + "; ".join("{" + ",".join(str(v + 1) for v in c) + "}" for c in report.cliques))
    click.echo(f"top-degree constraints kept scalar: {report.j_prime or 'none'}")
    for step in report.steps:
        sizes = ", ".join(f"{dim}x{dim}: {cnt}" for dim, cnt in step.block_sizes.items())
        click.echo(f"  step k={step.k}: mb={step.mb}  blocks {{{sizes}}}  stabilized={str(step.stabilized).lower()}")
    if report.stabilized_at is not None:
        click.echo(f"stabilized at k={report.stabilized_at}")
    if json_out:
        _write_json(report, json_out)


@main.command()
@click.argument("problem_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_path", type=click.Path(dir_okay=False))
@_config_options
@click.option("--json", "json_out", type=click.Path(dir_okay=False), default=None, help="Write the structure summary as JSON.")
def relax(problem_file, out_path, json_out, server, **kw):
    """Assemble the relaxation and write it in SDPA sparse format."""
    config = _build_config(kw)
    from .run import RelaxReport

    problem = _load_problem(problem_file)
    report = _dispatch("relax", run_relax, RelaxReport, problem, config, server)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(report.dat_s)
    click.echo(f"wrote {out_path}")
    click.echo(f"order d={report.order}  mc={report.mc}  mb={report.mb}")
    click.echo(f"summary: {report.summary}")
    if json_out:
        _write_json(report, json_out)


@main.command()
@click.option("--ac", type=float, required=True, help="Local optimum from an NLP solver.")
@click.option("--opt", type=float, required=True, help="Relaxation bound.")
@click.option("--server", type=str, default=None)
def gap(ac, opt, server):
    """Optimality gap (ac - opt) / ac as a percentage."""
    if server:
        data = _post(server, "gap", {"ac": ac, "opt": opt})
        value = data["gap_percent"]
    else:
        try:
            value = compute_gap(ac, opt)
        except ValueError as exc:
            _fail(str(exc), EXIT_INPUT)
    click.echo(f"gap = {value:.2f}%")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
