"""Basic OT quantities shared by every solver: validation, LP values, c-transform."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError
from .types import CostMatrix, Histogram, TransportPlan


def validate_instance(a: Histogram, b: Histogram, C: CostMatrix) -> None:
    """Check that ``(a, b, C)`` form an OT instance.

    Histogram and cost invariants (positivity, normalization, nonnegative finite
    costs) are enforced when the records are built, so only shapes remain.
    """
    if (a.dim, b.dim) != (C.m, C.n):
        raise DimensionMismatchError(
            f"Histograms have sizes ({a.dim}, {b.dim}) but the cost matrix is {C.m}x{C.n}.",
            details={"m": a.dim, "n": b.dim, "cost_shape": [C.m, C.n]},
        )


def _entries(T: TransportPlan | np.ndarray) -> np.ndarray:
    return T.entries if isinstance(T, TransportPlan) else np.asarray(T, dtype=np.float64)


def primal_value(T: TransportPlan | np.ndarray, C: CostMatrix) -> float:
    """<T, C>."""
    t = _entries(T)
    if t.shape != C.entries.shape:
        raise DimensionMismatchError(f"Plan shape {t.shape} does not match cost {C.entries.shape}.")
    return float(np.vdot(t, C.entries))


def marginal_residuals(T: TransportPlan | np.ndarray, a: Histogram, b: Histogram) -> tuple[
    np.ndarray, np.ndarray
]:
    """Row and column marginal violations ``T 1 - a`` and ``T^T 1 - b``."""
    t = _entries(T)
    return t.sum(axis=1) - a.weights, t.sum(axis=0) - b.weights


def _check_alpha(alpha: np.ndarray, C: CostMatrix) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (C.m,):
        raise DimensionMismatchError(f"alpha has shape {alpha.shape}, expected ({C.m},).")
    return alpha


def c_transform(alpha: np.ndarray, C: CostMatrix) -> np.ndarray:
    """beta_j = min_i (C_ij - alpha_i); ties resolve to the smallest row index."""
    alpha = _check_alpha(alpha, C)
    shifted = C.entries - alpha[:, None]
    return shifted[np.argmin(shifted, axis=0), np.arange(C.n)]


def dual_value(alpha: np.ndarray, beta: np.ndarray, a: Histogram, b: Histogram) -> float:
    """Unregularized dual objective alpha^T a + beta^T b."""
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if alpha.shape != (a.dim,) or beta.shape != (b.dim,):
        raise DimensionMismatchError("Potentials do not match histogram sizes.")
    return float(alpha @ a.weights + beta @ b.weights)


def semi_dual_value(alpha: np.ndarray, a: Histogram, b: Histogram, C: CostMatrix) -> float:
    """alpha^T a - sum_j b_j max_i (alpha_i - C_ij)."""
    validate_instance(a, b, C)
    alpha = _check_alpha(alpha, C)
    col_max = np.max(alpha[:, None] - C.entries, axis=0)
    return float(alpha @ a.weights - col_max @ b.weights)
