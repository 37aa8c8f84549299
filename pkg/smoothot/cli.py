"""Command-line frontend: ``smoothot {solve,transfer,bounds,exact,compare}``."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from pydantic import BaseModel, ValidationError

from . import io
from .bounds import BoundKind
from .client import SmoothOT
from .errors import (
    InputFileError,
    InvalidConfigError,
    SmoothOTError,
    exit_code_for,
    exit_code_table,
)
from .oracle import plan_error, value_errors
from .problem import Problem
from .types import (
    BoundReport,
    RegParams,
    RelaxationParams,
    RunConfig,
    SolveOptions,
    SolveReport,
    ValueErrors,
)

logger = logging.getLogger(__name__)

REG_ALIASES = {
    "entropy": "entropy",
    "l2": "squared_l2",
    "squared_l2": "squared_l2",
    "gl-entropy": "group_lasso_entropy",
    "group_lasso_entropy": "group_lasso_entropy",
    "gl-l2": "group_lasso_l2",
    "group_lasso_l2": "group_lasso_l2",
}


class RunReport(BaseModel):
    """JSON report of a ``solve`` run."""

    formulation: str
    reg: str | None
    gamma: float
    iterations: int
    objective: float
    plan_sparsity: float
    row_residual: float
    col_residual: float
    solve: SolveReport
    bounds: BoundReport | None = None
    exact_value: float | None = None
    errors: ValueErrors | None = None
    plan_error: float | None = None


class ExactReport(BaseModel):
    value: float
    pivots: int
    plan_sparsity: float
    row_residual: float
    col_residual: float


class CompareRow(BaseModel):
    gamma: float
    iterations: int
    converged: bool
    objective: float
    plan_sparsity: float
    value_error: float | None
    reg_value_error: float
    marginal_error: float
    plan_error: float


class CompareReport(BaseModel):
    formulation: str
    reg: str | None
    exact_value: float
    rows: list[CompareRow]


class TransferReport(BaseModel):
    output: str
    k_source: int
    k_target: int
    direction: str
    empty_rows: list[int]
    solve: SolveReport


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _reg_kind(value: str) -> str:
    try:
        return REG_ALIASES[value]
    except KeyError:
        raise argparse.ArgumentTypeError(
            f"unknown regularizer {value!r} (choose from {', '.join(REG_ALIASES)})"
        ) from None


def _gammas(value: str) -> list[float]:
    try:
        return [float(tok) for tok in value.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad gamma list {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--formulation", choices=["dual", "semidual", "relaxed", "semirelaxed"])
    common.add_argument("--reg", type=_reg_kind, help="entropy | l2 | gl-entropy | gl-l2")
    common.add_argument("--gamma", type=float)
    common.add_argument("--mu", type=float)
    common.add_argument("--groups", type=Path, help="one line of row indices per group")
    common.add_argument(
        "--solver",
        choices=[
            "quasi_newton",
            "gradient_descent",
            "alternating",
            "accelerated_projected_gradient",
        ],
    )
    common.add_argument("--max-iters", dest="max_iters", type=int)
    common.add_argument("--grad-tol", dest="grad_tol", type=float)
    common.add_argument("--a", type=Path, help="source histogram CSV")
    common.add_argument("--b", type=Path, help="target histogram CSV")
    common.add_argument("--cost", type=Path, help="cost matrix CSV")
    common.add_argument("--out", type=Path)
    common.add_argument("--report", type=Path, help="JSON report (stdout when omitted)")
    common.add_argument("--seed", type=int)

    parser = argparse.ArgumentParser(
        prog="smoothot",
        description="Smooth and sparse regularized optimal transport.",
        epilog=exit_code_table(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    solve = sub.add_parser("solve", parents=[common], help="solve an instance from CSV files")
    solve.add_argument("--exact", action="store_true", help="compare against the exact LP")
    transfer = sub.add_parser("transfer", parents=[common], help="colour transfer between PNGs")
    transfer.add_argument("--source", required=True, help="PNG path or http(s) URL")
    transfer.add_argument("--target", required=True, help="PNG path or http(s) URL")
    transfer.add_argument("--k", type=int)
    transfer.add_argument("--direction", choices=["source_to_target", "target_to_source"])
    sub.add_parser("bounds", parents=[common], help="approximation-error constants")
    sub.add_parser("exact", parents=[common], help="exact LP via network simplex")
    compare = sub.add_parser("compare", parents=[common], help="error metrics over a gamma grid")
    compare.add_argument("--gammas", type=_gammas, help="comma-separated, e.g. 1e-3,1e-2,1")
    return parser


def parse_config(argv: Sequence[str] | None = None) -> tuple[RunConfig, int]:
    """Parse ``argv`` into a validated config and the verbosity level."""
    args = vars(build_parser().parse_args(argv))
    verbose = args.pop("verbose")
    fields = {k: v for k, v in args.items() if v is not None and v is not False}
    return RunConfig(**fields), verbose


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _options(config: RunConfig) -> SolveOptions:
    return SolveOptions(
        max_iters=config.max_iters, grad_tol=config.grad_tol, solver=config.solver
    )


def _params(config: RunConfig, gamma: float) -> tuple[RegParams | None, RelaxationParams | None]:
    if config.formulation in ("relaxed", "semirelaxed"):
        return None, RelaxationParams(gamma=gamma)
    groups = io.read_groups(config.groups) if config.groups is not None else None
    return RegParams(kind=config.reg, gamma=gamma, mu=config.mu, groups=groups), None


def _bound_kind(config: RunConfig) -> BoundKind | None:
    if config.reg in ("entropy", "squared_l2"):
        return config.reg  # type: ignore[return-value]
    return None


def _load_problem(client: SmoothOT, config: RunConfig) -> Problem:
    return client.problem(
        io.read_histogram(config.a), io.read_histogram(config.b), io.read_cost(config.cost)
    )


def _emit(model: BaseModel, path: Path | None) -> None:
    text = model.model_dump_json(indent=2)
    if path is None:
        print(text)
    else:
        try:
            path.write_text(text + "\n")
        except OSError as exc:
            raise InputFileError(f"Cannot write {path}: {exc}") from exc


def _run_solve(client: SmoothOT, config: RunConfig) -> None:
    problem = _load_problem(client, config)
    reg, rel = _params(config, config.gamma)
    _, plan, report = problem.solve(config.formulation, reg, rel, _options(config))
    if config.out is not None:
        io.write_matrix(config.out, plan)
    out = RunReport(
        formulation=config.formulation,
        reg=config.reg if reg is not None else None,
        gamma=config.gamma,
        iterations=report.iters,
        objective=report.objective,
        plan_sparsity=report.plan_sparsity,
        row_residual=report.row_residual,
        col_residual=report.col_residual,
        solve=report,
    )
    if config.exact:
        exact = problem.exact()
        kind = _bound_kind(config)
        out = out.model_copy(
            update={
                "bounds": problem.bounds(kind) if kind is not None else None,
                "exact_value": exact.value,
                "errors": value_errors(plan, report.objective, exact, problem.C),
                "plan_error": plan_error(plan, exact.plan),
            }
        )
    _emit(out, config.report)


def _run_exact(client: SmoothOT, config: RunConfig) -> None:
    exact = _load_problem(client, config).exact()
    if config.out is not None:
        io.write_matrix(config.out, exact.plan)
    _emit(
        ExactReport(
            value=exact.value,
            pivots=exact.pivots,
            plan_sparsity=exact.plan.sparsity,
            row_residual=exact.plan.row_residual,
            col_residual=exact.plan.col_residual,
        ),
        config.report,
    )


def _run_bounds(client: SmoothOT, config: RunConfig) -> None:
    kind = _bound_kind(config)
    if kind is None:
        raise InvalidConfigError("bounds are defined for the entropy and l2 regularizers.")
    _emit(_load_problem(client, config).bounds(kind), config.report)


def _run_compare(client: SmoothOT, config: RunConfig) -> None:
    problem = _load_problem(client, config)
    exact = problem.exact()
    rows = []
    for gamma in config.gammas:
        reg, rel = _params(config, gamma)
        _, plan, report = problem.solve(config.formulation, reg, rel, _options(config))
        errs = value_errors(plan, report.objective, exact, problem.C)
        rows.append(
            CompareRow(
                gamma=gamma,
                iterations=report.iters,
                converged=report.converged,
                objective=report.objective,
                plan_sparsity=report.plan_sparsity,
                value_error=errs.value_error,
                reg_value_error=errs.reg_value_error,
                marginal_error=errs.marginal_error,
                plan_error=plan_error(plan, exact.plan),
            )
        )
        logger.info("gamma=%g reg_value_error=%.3g", gamma, errs.reg_value_error)
    _emit(
        CompareReport(
            formulation=config.formulation,
            reg=config.reg if config.formulation in ("dual", "semidual") else None,
            exact_value=exact.value,
            rows=rows,
        ),
        config.report,
    )


def _run_transfer(client: SmoothOT, config: RunConfig) -> None:
    reg, rel = _params(config, config.gamma)
    result = client.transfer(
        config.source,
        config.target,
        k=config.k,
        seed=config.seed,
        formulation=config.formulation,
        reg=reg,
        rel=rel,
        opts=_options(config),
        direction=config.direction,
    )
    io.write_image(result.image, config.out)
    _emit(
        TransferReport(
            output=str(config.out),
            k_source=result.source_palette.k,
            k_target=result.target_palette.k,
            direction=config.direction,
            empty_rows=result.empty_rows,
            solve=result.report,
        ),
        config.report,
    )


_COMMANDS = {
    "solve": _run_solve,
    "exact": _run_exact,
    "bounds": _run_bounds,
    "compare": _run_compare,
    "transfer": _run_transfer,
}


def run(config: RunConfig) -> int:
    """Execute one subcommand; returns the process exit code."""
    try:
        with SmoothOT() as client:
            _COMMANDS[config.subcommand](client, config)
    except SmoothOTError as exc:
        print(f"error[{exc.code}]: {exc.message}", file=sys.stderr)
        return exit_code_for(exc)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    try:
        config, verbose = parse_config(argv)
    except SmoothOTError as exc:
        print(f"error[{exc.code}]: {exc.message}", file=sys.stderr)
        return exit_code_for(exc)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "config"
        print(f"error[invalid_config]: {where}: {first['msg']}", file=sys.stderr)
        return exit_code_for(InvalidConfigError())
    logging.basicConfig(
        level=[logging.WARNING, logging.INFO, logging.DEBUG][min(verbose, 2)],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
