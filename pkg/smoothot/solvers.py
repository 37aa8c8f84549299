"""Objective/gradient assembly and solvers for the smoothed and relaxed OT formulations.

Dual and semi-dual objectives are maximized; relaxed primals are minimized.
All solvers return ``(potentials, plan, report)`` or ``(plan, report)`` and
treat an exhausted iteration budget as a soft failure (flag on the report)
unless ``SolveOptions.strict`` is set.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable, Iterator
from concurrent.futures import Executor
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .core import primal_value, validate_instance
from .errors import InvalidConfigError, MaxItersExceededError, UnsupportedRegularizerError
from .regularizers import Regularizer, make_regularizer, project_simplex, simplex_threshold
from .types import (
    CostMatrix,
    DualPotentials,
    Formulation,
    GapRounding,
    Histogram,
    RegParams,
    RelaxationParams,
    SolveOptions,
    SolveReport,
    TransportPlan,
)

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]

ARMIJO = 1e-4
MIN_STEP = 1e-30


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------


def _dual_eval(
    alpha: np.ndarray, beta: np.ndarray, a: np.ndarray, b: np.ndarray, C: np.ndarray, R: Regularizer
) -> tuple[float, np.ndarray, np.ndarray, int]:
    out = R.delta_Omega(alpha[:, None] + beta[None, :] - C)
    value = float(alpha @ a + beta @ b - np.sum(out.values))
    return value, a - out.grad.sum(axis=1), b - out.grad.sum(axis=0), out.clamped


def dual_objective_grad(
    alpha: np.ndarray,
    beta: np.ndarray,
    a: Histogram,
    b: Histogram,
    C: CostMatrix,
    reg: RegParams,
) -> tuple[float, np.ndarray, np.ndarray]:
    """alpha^T a + beta^T b - sum_j delta_Omega(alpha + beta_j 1 - c_j) and its gradient."""
    validate_instance(a, b, C)
    value, ga, gb, _ = _dual_eval(
        np.asarray(alpha, dtype=np.float64),
        np.asarray(beta, dtype=np.float64),
        a.weights,
        b.weights,
        C.entries,
        make_regularizer(reg),
    )
    return value, ga, gb


def _require_closed_form_max(reg: RegParams) -> None:
    if reg.is_group_lasso:
        raise UnsupportedRegularizerError(
            f"'{reg.kind}' has no closed-form smoothed max; use the dual formulation."
        )


def _semidual_eval(
    alpha: np.ndarray, a: np.ndarray, b: np.ndarray, C: np.ndarray, R: Regularizer
) -> tuple[float, np.ndarray]:
    out = R.max_Omega(alpha[:, None] - C, b)
    return float(alpha @ a - out.values @ b), a - out.grad @ b


def semi_dual_objective_grad(
    alpha: np.ndarray, a: Histogram, b: Histogram, C: CostMatrix, reg: RegParams
) -> tuple[float, np.ndarray]:
    """alpha^T a - sum_j b_j max_{Omega_j}(alpha - c_j) and its gradient."""
    validate_instance(a, b, C)
    _require_closed_form_max(reg)
    return _semidual_eval(
        np.asarray(alpha, dtype=np.float64), a.weights, b.weights, C.entries, make_regularizer(reg)
    )


def relaxed_primal_objective_grad(
    T: np.ndarray, a: Histogram, b: Histogram, C: CostMatrix, rel: RelaxationParams
) -> tuple[float, np.ndarray]:
    """<T,C> + ||T1 - a||^2 / (4 gamma) + ||T^T 1 - b||^2 / (4 gamma) and its gradient."""
    T = np.asarray(T, dtype=np.float64)
    r = T.sum(axis=1) - a.weights
    s = T.sum(axis=0) - b.weights
    value = float(np.vdot(T, C.entries) + (r @ r + s @ s) / (4 * rel.gamma))
    grad = C.entries + r[:, None] / (2 * rel.gamma) + s[None, :] / (2 * rel.gamma)
    return value, grad


def semi_relaxed_primal_objective_grad(
    T: np.ndarray, a: Histogram, C: CostMatrix, rel: RelaxationParams
) -> tuple[float, np.ndarray]:
    """<T,C> + ||T1 - a||^2 / (2 gamma) and its gradient (column constraints handled apart)."""
    T = np.asarray(T, dtype=np.float64)
    r = T.sum(axis=1) - a.weights
    value = float(np.vdot(T, C.entries) + (r @ r) / (2 * rel.gamma))
    return value, C.entries + r[:, None] / rel.gamma


def regularized_value(T: TransportPlan | np.ndarray, C: CostMatrix, reg: RegParams) -> float:
    """<T,C> + Omega(T)."""
    t = T.entries if isinstance(T, TransportPlan) else np.asarray(T, dtype=np.float64)
    return primal_value(t, C) + make_regularizer(reg).Omega(t)


# ---------------------------------------------------------------------------
# Plan recovery and exact block updates
# ---------------------------------------------------------------------------


def recover_plan_from_dual(
    alpha: np.ndarray,
    beta: np.ndarray,
    a: Histogram,
    b: Histogram,
    C: CostMatrix,
    reg: RegParams,
) -> TransportPlan:
    """t_j = grad delta_Omega(alpha + beta_j 1 - c_j)."""
    X = np.asarray(alpha)[:, None] + np.asarray(beta)[None, :] - C.entries
    return TransportPlan.from_entries(make_regularizer(reg).delta_Omega(X).grad, a, b)


def recover_plan_from_semidual(
    alpha: np.ndarray, a: Histogram, b: Histogram, C: CostMatrix, reg: RegParams
) -> TransportPlan:
    """t_j = b_j grad max_{Omega_j}(alpha - c_j); column sums equal b."""
    _require_closed_form_max(reg)
    out = make_regularizer(reg).max_Omega(np.asarray(alpha)[:, None] - C.entries, b.weights)
    return TransportPlan.from_entries(out.grad * b.weights[None, :], a, b)


def _block_update(
    potential: np.ndarray, weights: np.ndarray, C: np.ndarray, reg: RegParams
) -> np.ndarray:
    """Exact maximizer of the smoothed dual in the other block, one coordinate per column of C."""
    gamma = reg.gamma
    if reg.kind == "entropy":
        lse = logsumexp(potential[:, None] / gamma - 1.0 - C / gamma, axis=0)
        return gamma * (np.log(weights) - lse)
    if reg.kind == "squared_l2":
        scale = gamma * weights
        tau, _ = simplex_threshold((potential[:, None] - C) / scale[None, :], 1.0)
        return -scale * tau
    raise UnsupportedRegularizerError(f"No exact block update for '{reg.kind}'.")


def smoothed_c_transform(
    alpha: np.ndarray, b: Histogram, C: CostMatrix, reg: RegParams
) -> np.ndarray:
    """beta(alpha): the beta maximizing the smoothed dual for fixed alpha."""
    return _block_update(np.asarray(alpha, dtype=np.float64), b.weights, C.entries, reg)


def iterate_alternating(
    a: Histogram, b: Histogram, C: CostMatrix, reg: RegParams
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(alpha, beta)`` after each sweep ``beta <- beta(alpha); alpha <- alpha(beta)``."""
    validate_instance(a, b, C)
    alpha = np.zeros(C.m)
    while True:
        beta = _block_update(alpha, b.weights, C.entries, reg)
        alpha = _block_update(beta, a.weights, C.entries.T, reg)
        yield alpha, beta


# ---------------------------------------------------------------------------
# Optimization engines (minimization form)
# ---------------------------------------------------------------------------


class _Run(NamedTuple):
    x: np.ndarray
    trace: list[float]
    iters: int
    converged: bool
    exhausted: bool


def _box_projected_grad(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    return np.where(x > 0, g, np.minimum(g, 0.0))


def _minimize_lbfgs(
    fun: Objective, x0: np.ndarray, opts: SolveOptions, nonneg: bool = False
) -> _Run:
    trace: list[float] = [fun(x0)[0]]

    def callback(intermediate_result) -> None:
        if opts.record_trace:
            trace.append(float(intermediate_result.fun))

    res = minimize(
        fun,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=[(0.0, None)] * x0.size if nonneg else None,
        callback=callback,
        options={
            "maxiter": opts.max_iters,
            "maxcor": opts.memory,
            "gtol": opts.grad_tol,
            "ftol": 0.0,
            "maxfun": 50 * opts.max_iters,
            "maxls": 50,
        },
    )
    value, g = fun(res.x)
    if nonneg:
        g = _box_projected_grad(res.x, g)
    converged = bool(np.max(np.abs(g)) <= opts.grad_tol)
    if not converged and res.nit < opts.max_iters:
        logger.warning("L-BFGS stopped early without reaching grad_tol: %s", res.message)
    if not opts.record_trace:
        trace = [value]
    elif trace[-1] != value:
        trace.append(value)
    return _Run(res.x, trace, int(res.nit), converged, not converged and res.nit >= opts.max_iters)


def _minimize_gradient(fun: Objective, x0: np.ndarray, opts: SolveOptions) -> _Run:
    """Gradient descent with Armijo backtracking; the step doubles after each success."""
    x = x0
    f, g = fun(x)
    trace = [f]
    step = 1.0
    iters = 0
    converged = False
    while iters < opts.max_iters:
        if np.max(np.abs(g)) <= opts.grad_tol:
            converged = True
            break
        gg = float(g @ g)
        while True:
            xn = x - step * g
            fn, gn = fun(xn)
            if fn <= f - ARMIJO * step * gg:
                break
            step /= 2
            if step < MIN_STEP:
                logger.warning("gradient line search stalled at iteration %d", iters)
                return _Run(x, trace, iters, False, False)
        x, f, g = xn, fn, gn
        step *= 2
        iters += 1
        if opts.record_trace:
            trace.append(f)
    else:
        converged = bool(np.max(np.abs(g)) <= opts.grad_tol)
    if not opts.record_trace:
        trace = [f]
    return _Run(x, trace, iters, converged, not converged)


def _minimize_projected(
    fun: Objective,
    project: Callable[[np.ndarray], np.ndarray],
    stationarity: Callable[[np.ndarray, np.ndarray, float], float],
    x0: np.ndarray,
    step0: float,
    opts: SolveOptions,
    accelerated: bool = True,
) -> _Run:
    """FISTA with backtracking and function-value restart; plain projected gradient otherwise."""
    x = project(x0)
    f, g = fun(x)
    trace = [f]
    y, fy, gy = x, f, g
    t = 1.0
    step = step0
    iters = 0
    converged = stationarity(x, g, step) <= opts.grad_tol
    while not converged and iters < opts.max_iters:
        while True:
            xn = project(y - step * gy)
            d = xn - y
            fn, gn = fun(xn)
            if fn <= fy + np.vdot(gy, d) + np.vdot(d, d) / (2 * step) + 1e-15 * abs(fy):
                break
            step /= 2
            if step < MIN_STEP:
                logger.warning("projected gradient backtracking stalled at iteration %d", iters)
                return _Run(x, trace, iters, False, False)
        iters += 1
        if accelerated and fn > f:
            t_next = 1.0
            y_next = xn
        elif accelerated:
            t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
            y_next = xn + ((t - 1.0) / t_next) * (xn - x)
        else:
            t_next = 1.0
            y_next = xn
        x, f, g, t = xn, fn, gn, t_next
        if y_next is xn:
            y, fy, gy = xn, fn, gn
        else:
            y = y_next
            fy, gy = fun(y)
        if opts.record_trace:
            trace.append(f)
        converged = stationarity(x, g, step) <= opts.grad_tol
    if not opts.record_trace:
        trace = [f]
    return _Run(x, trace, iters, converged, not converged)


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------


def _round_columns(T: np.ndarray, b: Histogram, reg: RegParams) -> tuple[np.ndarray, GapRounding]:
    """Make column sums equal b: rescale for entropy kinds, simplex projection otherwise."""
    if reg.kind in ("entropy", "group_lasso_entropy"):
        sums = T.sum(axis=0)
        return T * (b.weights / sums)[None, :], "column_rescaling"
    return project_simplex(T, b.weights), "column_simplex_projection"


def _report(
    formulation: str,
    solver: str,
    run: _Run,
    objective: float,
    plan: TransportPlan,
    started: float,
    opts: SolveOptions,
    sign: float = 1.0,
    duality_gap: float | None = None,
    gap_rounding: GapRounding = "none",
    clamp_events: int = 0,
) -> SolveReport:
    report = SolveReport(
        formulation=formulation,
        solver=solver,
        objective=objective,
        objective_trace=[sign * v for v in run.trace],
        iters=run.iters,
        converged=run.converged,
        max_iters_exceeded=run.exhausted,
        duality_gap=duality_gap,
        gap_rounding=gap_rounding,
        plan_sparsity=plan.sparsity,
        row_residual=plan.row_residual,
        col_residual=plan.col_residual,
        wall_time=time.perf_counter() - started,
        clamp_events=clamp_events,
    )
    if run.exhausted:
        logger.warning("%s/%s hit max_iters=%d", formulation, solver, opts.max_iters)
        if opts.strict:
            raise MaxItersExceededError(details=report.model_dump())
    else:
        logger.info(
            "%s/%s finished: iters=%d objective=%.10g time=%.3fs",
            formulation,
            solver,
            report.iters,
            objective,
            report.wall_time,
        )
    return report


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------


def solve_dual(
    a: Histogram,
    b: Histogram,
    C: CostMatrix,
    reg: RegParams,
    opts: SolveOptions | None = None,
    executor: Executor | None = None,
    workers: int = 1,
) -> tuple[DualPotentials, TransportPlan, SolveReport]:
    """Maximize the smoothed dual from alpha = 0, beta = 0."""
    validate_instance(a, b, C)
    opts = opts or SolveOptions()
    solver = opts.solver or "quasi_newton"
    if solver == "alternating":
        return alternating_minimization(a, b, C, reg, opts)
    if solver not in ("quasi_newton", "gradient_descent"):
        raise InvalidConfigError(f"Solver '{solver}' does not apply to the dual.")
    started = time.perf_counter()
    R = make_regularizer(reg, executor=executor, workers=workers)
    m = C.m
    clamps = [0]

    def neg_dual(x: np.ndarray) -> tuple[float, np.ndarray]:
        value, ga, gb, clamped = _dual_eval(x[:m], x[m:], a.weights, b.weights, C.entries, R)
        clamps[0] += clamped
        return -value, -np.concatenate([ga, gb])

    x0 = np.zeros(m + C.n)
    if solver == "quasi_newton":
        run = _minimize_lbfgs(neg_dual, x0, opts)
    else:
        run = _minimize_gradient(neg_dual, x0, opts)
    alpha, beta = run.x[:m], run.x[m:]
    value = -neg_dual(run.x)[0]
    T = R.delta_Omega(alpha[:, None] + beta[None, :] - C.entries).grad
    plan = TransportPlan.from_entries(T, a, b)
    rounded, rounding = _round_columns(T, b, reg)
    gap = primal_value(rounded, C) + R.Omega(rounded) - value
    report = _report(
        "dual", solver, run, value, plan, started, opts, -1.0, gap, rounding, clamps[0]
    )
    return DualPotentials(alpha=alpha, beta=beta), plan, report


def solve_semidual(
    a: Histogram,
    b: Histogram,
    C: CostMatrix,
    reg: RegParams,
    opts: SolveOptions | None = None,
) -> tuple[DualPotentials, TransportPlan, SolveReport]:
    """Maximize the smoothed semi-dual from alpha = 0."""
    validate_instance(a, b, C)
    _require_closed_form_max(reg)
    opts = opts or SolveOptions()
    solver = opts.solver or "quasi_newton"
    if solver not in ("quasi_newton", "gradient_descent"):
        raise InvalidConfigError(f"Solver '{solver}' does not apply to the semi-dual.")
    started = time.perf_counter()
    R = make_regularizer(reg)

    def neg_semidual(x: np.ndarray) -> tuple[float, np.ndarray]:
        value, grad = _semidual_eval(x, a.weights, b.weights, C.entries, R)
        return -value, -grad

    x0 = np.zeros(C.m)
    if solver == "quasi_newton":
        run = _minimize_lbfgs(neg_semidual, x0, opts)
    else:
        run = _minimize_gradient(neg_semidual, x0, opts)
    alpha = run.x
    value = -neg_semidual(alpha)[0]
    out = R.max_Omega(alpha[:, None] - C.entries, b.weights)
    T = out.grad * b.weights[None, :]
    plan = TransportPlan.from_entries(T, a, b)
    gap = primal_value(T, C) + R.Omega(T) - value
    beta = smoothed_c_transform(alpha, b, C, reg)
    report = _report("semidual", solver, run, value, plan, started, opts, -1.0, gap, "none")
    return DualPotentials(alpha=alpha, beta=beta), plan, report


def alternating_minimization(
    a: Histogram,
    b: Histogram,
    C: CostMatrix,
    reg: RegParams,
    opts: SolveOptions | None = None,
) -> tuple[DualPotentials, TransportPlan, SolveReport]:
    """Two-block exact coordinate ascent on the smoothed dual (Sinkhorn for entropy)."""
    validate_instance(a, b, C)
    if reg.kind not in ("entropy", "squared_l2"):
        raise UnsupportedRegularizerError(f"No exact block update for '{reg.kind}'.")
    opts = opts or SolveOptions()
    started = time.perf_counter()
    R = make_regularizer(reg)
    alpha, beta = np.zeros(C.m), np.zeros(C.n)
    trace = [_dual_eval(alpha, beta, a.weights, b.weights, C.entries, R)[0]]
    sweeps = 0
    converged = False
    for new_alpha, new_beta in iterate_alternating(a, b, C, reg):
        change = max(np.max(np.abs(new_alpha - alpha)), np.max(np.abs(new_beta - beta)))
        alpha, beta = new_alpha, new_beta
        sweeps += 1
        if opts.record_trace:
            trace.append(_dual_eval(alpha, beta, a.weights, b.weights, C.entries, R)[0])
        if change <= opts.grad_tol:
            converged = True
            break
        if sweeps >= opts.max_iters:
            break
    value, _, _, clamped = _dual_eval(alpha, beta, a.weights, b.weights, C.entries, R)
    if not opts.record_trace:
        trace = [value]
    run = _Run(np.concatenate([alpha, beta]), trace, sweeps, converged, not converged)
    T = R.delta_Omega(alpha[:, None] + beta[None, :] - C.entries).grad
    plan = TransportPlan.from_entries(T, a, b)
    rounded, rounding = _round_columns(T, b, reg)
    gap = primal_value(rounded, C) + R.Omega(rounded) - value
    report = _report(
        "dual", "alternating", run, value, plan, started, opts, 1.0, gap, rounding, clamped
    )
    return DualPotentials(alpha=alpha, beta=beta), plan, report


def solve_relaxed_primal(
    a: Histogram,
    b: Histogram,
    C: CostMatrix,
    rel: RelaxationParams,
    opts: SolveOptions | None = None,
) -> tuple[TransportPlan, SolveReport]:
    """Minimize the relaxed primal over T >= 0 from T = a b^T."""
    validate_instance(a, b, C)
    opts = opts or SolveOptions()
    solver = opts.solver or "accelerated_projected_gradient"
    started = time.perf_counter()
    shape = (C.m, C.n)

    def objective(T: np.ndarray) -> tuple[float, np.ndarray]:
        return relaxed_primal_objective_grad(T, a, b, C, rel)

    T0 = np.outer(a.weights, b.weights)
    if solver == "quasi_newton":

        def flat(x: np.ndarray) -> tuple[float, np.ndarray]:
            value, grad = objective(x.reshape(shape))
            return value, grad.ravel()

        run = _minimize_lbfgs(flat, T0.ravel(), opts, nonneg=True)
        run = run._replace(x=np.maximum(run.x.reshape(shape), 0.0))
    elif solver in ("accelerated_projected_gradient", "gradient_descent"):
        run = _minimize_projected(
            objective,
            lambda T: np.maximum(T, 0.0),
            lambda T, g, _step: float(np.max(np.abs(_box_projected_grad(T, g)))),
            T0,
            rel.gamma,
            opts,
            accelerated=solver == "accelerated_projected_gradient",
        )
    else:
        raise InvalidConfigError(f"Solver '{solver}' does not apply to the relaxed primal.")
    plan = TransportPlan.from_entries(run.x, a, b)
    value = objective(run.x)[0]
    return plan, _report("relaxed", solver, run, value, plan, started, opts)


def solve_semi_relaxed_primal(
    a: Histogram,
    b: Histogram,
    C: CostMatrix,
    rel: RelaxationParams,
    opts: SolveOptions | None = None,
) -> tuple[TransportPlan, SolveReport]:
    """Minimize the semi-relaxed primal over {T >= 0, T^T 1 = b} from T = a b^T."""
    validate_instance(a, b, C)
    opts = opts or SolveOptions()
    solver = opts.solver or "accelerated_projected_gradient"
    if solver not in ("accelerated_projected_gradient", "gradient_descent"):
        raise InvalidConfigError(f"Solver '{solver}' does not apply to the semi-relaxed primal.")
    started = time.perf_counter()

    def objective(T: np.ndarray) -> tuple[float, np.ndarray]:
        return semi_relaxed_primal_objective_grad(T, a, C, rel)

    def project(T: np.ndarray) -> np.ndarray:
        return project_simplex(T, b.weights)

    def gradient_mapping(T: np.ndarray, g: np.ndarray, step: float) -> float:
        return float(np.max(np.abs(T - project(T - step * g)))) / step

    run = _minimize_projected(
        objective,
        project,
        gradient_mapping,
        np.outer(a.weights, b.weights),
        rel.gamma,
        opts,
        accelerated=solver == "accelerated_projected_gradient",
    )
    plan = TransportPlan.from_entries(run.x, a, b)
    value = objective(run.x)[0]
    return plan, _report("semirelaxed", solver, run, value, plan, started, opts)


def solve(
    formulation: Formulation,
    a: Histogram,
    b: Histogram,
    C: CostMatrix,
    reg: RegParams | None = None,
    rel: RelaxationParams | None = None,
    opts: SolveOptions | None = None,
    executor: Executor | None = None,
    workers: int = 1,
) -> tuple[DualPotentials | None, TransportPlan, SolveReport]:
    """Dispatch to the solver of ``formulation``."""
    if formulation in ("dual", "semidual"):
        if reg is None:
            raise InvalidConfigError(f"'{formulation}' needs regularizer parameters.")
        if formulation == "dual":
            return solve_dual(a, b, C, reg, opts, executor=executor, workers=workers)
        return solve_semidual(a, b, C, reg, opts)
    if rel is None:
        raise InvalidConfigError(f"'{formulation}' needs relaxation parameters.")
    if formulation == "relaxed":
        plan, report = solve_relaxed_primal(a, b, C, rel, opts)
    else:
        plan, report = solve_semi_relaxed_primal(a, b, C, rel, opts)
    return None, plan, report
