"""Approximation-error constants of the regularized and relaxed problems.

For a regularized problem with strength gamma:

    gamma * L <= OT_Omega(a, b) - OT(a, b) <= gamma * U

and for the relaxed primals:

    0 <= OT(a, b) - OT_Phi(a, b) <= gamma * L   (L_tilde for the semi-relaxed one)
"""

from __future__ import annotations

import logging
from typing import Literal

import numpy as np
from scipy.stats import entropy

from .core import validate_instance
from .types import BoundReport, CostMatrix, Histogram

logger = logging.getLogger(__name__)

BoundKind = Literal["entropy", "squared_l2"]


def theorem1_bounds(a: Histogram, b: Histogram, kind: BoundKind) -> tuple[float, float]:
    """Lower and upper constants ``(L, U)`` of the regularized approximation error."""
    if kind == "entropy":
        ha, hb = float(entropy(a.weights)), float(entropy(b.weights))
        return -ha - hb, -max(ha, hb)
    m, n = a.dim, b.dim
    t_bar = a.weights[:, None] / n + b.weights[None, :] / m - 1.0 / (m * n)
    lower = 0.5 * float(np.sum(t_bar**2))
    upper = 0.5 * min(float(a.weights @ a.weights), float(b.weights @ b.weights))
    return lower, upper


def _relaxation_constants(a: Histogram, b: Histogram, C: CostMatrix) -> dict[str, float]:
    m, n = C.m, C.n
    inv_a = float(np.max(1.0 / a.weights))
    inv_b = float(np.max(1.0 / b.weights))
    c_inf = float(np.max(np.abs(C.entries)))
    nu1 = max((2.0 + n / m) * inv_a, inv_b)
    nu2 = max(inv_a, (2.0 + m / n) * inv_b)
    return {
        "L": c_inf**2 * min(nu1 + n, nu2 + m) ** 2,
        "L_tilde": 2.0 * c_inf**2 * inv_a**2,
        "nu1": nu1,
        "nu2": nu2,
    }


def theorem2_bounds(
    a: Histogram, b: Histogram, C: CostMatrix
) -> tuple[float, float, float, float]:
    """``(L, L_tilde, nu1, nu2)`` for the relaxed and semi-relaxed primals."""
    validate_instance(a, b, C)
    k = _relaxation_constants(a, b, C)
    return k["L"], k["L_tilde"], k["nu1"], k["nu2"]


def verify_sandwich(
    measured: float,
    exact: float,
    lower: float,
    upper: float,
    gamma: float,
    grad_tol: float = 1e-6,
) -> bool:
    """Check ``gamma*lower <= measured - exact <= gamma*upper`` up to ``10*grad_tol*(1+|exact|)``.

    The relaxed primals are checked with ``lower=-L`` and ``upper=0``.
    """
    slack = 10.0 * grad_tol * (1.0 + abs(exact))
    diff = measured - exact
    ok = gamma * lower - slack <= diff <= gamma * upper + slack
    if not ok:
        logger.debug(
            "sandwich violated: diff=%.6g not in [%.6g, %.6g] (slack %.3g)",
            diff,
            gamma * lower,
            gamma * upper,
            slack,
        )
    return ok


def bound_report(a: Histogram, b: Histogram, C: CostMatrix, kind: BoundKind) -> BoundReport:
    validate_instance(a, b, C)
    lower, upper = theorem1_bounds(a, b, kind)
    k = _relaxation_constants(a, b, C)
    return BoundReport(
        kind=kind,
        L=lower,
        U=upper,
        L_relaxed=k["L"],
        L_semi_relaxed=k["L_tilde"],
        nu1=k["nu1"],
        nu2=k["nu2"],
    )
