"""Strongly convex regularizers Omega and their restricted conjugates.

Each regularizer exposes, column-wise on an ``m x n`` matrix ``X``:

* ``delta_Omega(X)``: ``sup_{y >= 0} y^T x - Omega(y)`` (conjugate on the
  nonnegative orthant) and its maximizer;
* ``max_Omega(X, b)``: ``sup_{y in simplex} y^T x - Omega_j(y)`` with
  ``Omega_j(y) = Omega(b_j y) / b_j`` and its maximizer;
* ``Omega(T)``: ``sum_j Omega(t_j)``.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from concurrent.futures import Executor
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp, softmax, wrightomega, xlogy

from .errors import (
    InvalidConfigError,
    NonFiniteInputError,
    NonPositiveMassError,
    UnsupportedRegularizerError,
)
from .types import ConjugateValueGrad, RegParams, TransportPlan

logger = logging.getLogger(__name__)

ENTROPY_CLAMP = 700.0
INNER_TOL = 1e-10
INNER_MAX_ITERS = 10_000


class ColumnConjugates(NamedTuple):
    values: np.ndarray
    grad: np.ndarray
    clamped: int = 0


def _check_finite(x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)):
        raise NonFiniteInputError()


# ---------------------------------------------------------------------------
# Simplex projection
# ---------------------------------------------------------------------------


def simplex_threshold(X: np.ndarray, radius: float | np.ndarray = 1.0) -> tuple[
    np.ndarray, np.ndarray
]:
    """Threshold ``tau`` and support size ``rho`` of the projection of each column.

    ``P(x) = [x - tau]_+`` with ``tau = (sum_{r <= rho} x_[r] - radius) / rho``.
    """
    X = np.asarray(X, dtype=np.float64)
    _check_finite(X)
    radius = np.asarray(radius, dtype=np.float64)
    if np.any(radius <= 0):
        raise InvalidConfigError("Simplex radius must be positive.")
    cols = X.reshape(X.shape[0], -1)
    m = cols.shape[0]
    u = -np.sort(-cols, axis=0)
    css = np.cumsum(u, axis=0) - radius.reshape(1, -1)
    cond = u - css / np.arange(1, m + 1)[:, None] > 0
    rho = m - np.argmax(cond[::-1], axis=0)
    tau = css[rho - 1, np.arange(cols.shape[1])] / rho
    if X.ndim == 1:
        return tau[0], rho[0]
    return tau, rho


def project_simplex(x: np.ndarray, radius: float | np.ndarray = 1.0) -> np.ndarray:
    """Euclidean projection onto ``{y >= 0, sum(y) = radius}``, column-wise for matrices."""
    x = np.asarray(x, dtype=np.float64)
    tau, _ = simplex_threshold(x, radius)
    return np.maximum(x - tau, 0.0)


# ---------------------------------------------------------------------------
# Regularizers
# ---------------------------------------------------------------------------


class Regularizer(ABC):
    def __init__(self, params: RegParams):
        self.params = params
        self.gamma = params.gamma

    @abstractmethod
    def delta_Omega(self, X: np.ndarray) -> ColumnConjugates: ...

    def max_Omega(self, X: np.ndarray, b: np.ndarray) -> ColumnConjugates:
        raise UnsupportedRegularizerError(
            f"max_Omega has no closed form for '{self.params.kind}'; use the dual formulation."
        )

    @abstractmethod
    def Omega(self, T: np.ndarray) -> float: ...


class NegEntropy(Regularizer):
    """Omega(y) = gamma * sum_i y_i log y_i."""

    def delta_Omega(self, X: np.ndarray) -> ColumnConjugates:
        Z = X / self.gamma
        clamped = int(np.count_nonzero(Z > ENTROPY_CLAMP))
        if clamped:
            logger.warning("entropy conjugate clamped %d argument(s) at %g", clamped, ENTROPY_CLAMP)
            Z = np.minimum(Z, ENTROPY_CLAMP)
        G = np.exp(Z - 1.0)
        return ColumnConjugates(self.gamma * G.sum(axis=0), G, clamped)

    def max_Omega(self, X: np.ndarray, b: np.ndarray) -> ColumnConjugates:
        Z = X / self.gamma
        values = self.gamma * (logsumexp(Z, axis=0) - np.log(b))
        return ColumnConjugates(values, softmax(Z, axis=0))

    def Omega(self, T: np.ndarray) -> float:
        return float(self.gamma * np.sum(xlogy(T, T)))


class SquaredL2(Regularizer):
    """Omega(y) = gamma / 2 * ||y||^2."""

    def delta_Omega(self, X: np.ndarray) -> ColumnConjugates:
        P = np.maximum(X, 0.0)
        return ColumnConjugates(np.sum(P * P, axis=0) / (2 * self.gamma), P / self.gamma)

    def max_Omega(self, X: np.ndarray, b: np.ndarray) -> ColumnConjugates:
        scale = self.gamma * b
        Y = project_simplex(X / scale, 1.0)
        values = np.sum(X * Y, axis=0) - 0.5 * scale * np.sum(Y * Y, axis=0)
        return ColumnConjugates(values, Y)

    def Omega(self, T: np.ndarray) -> float:
        return float(0.5 * self.gamma * np.sum(T * T))


class _GroupLasso(Regularizer):
    def __init__(self, params: RegParams):
        super().__init__(params)
        self.mu = params.mu

    def _group_norms(self, Y: np.ndarray) -> list[np.ndarray]:
        groups = self.params.resolved_groups(Y.shape[0])
        return [np.sqrt(np.sum(Y[g] ** 2, axis=0)) for g in groups]

    def _group_penalty(self, Y: np.ndarray) -> np.ndarray:
        """sum_G ||y_G|| per column."""
        return np.sum(self._group_norms(Y), axis=0)


class GroupLassoL2(_GroupLasso):
    """Omega(y) = gamma * (||y||^2 / 2 + mu * sum_G ||y_G||); exact group soft-thresholding."""

    def delta_Omega(self, X: np.ndarray) -> ColumnConjugates:
        Xp = np.maximum(X, 0.0) / self.gamma
        Y = np.zeros_like(Xp)
        for g in self.params.resolved_groups(X.shape[0]):
            norms = np.sqrt(np.sum(Xp[g] ** 2, axis=0))
            # zero-norm groups stay exactly zero
            keep = norms > self.mu
            shrink = np.zeros_like(norms)
            np.divide(self.mu, norms, out=shrink, where=keep)
            Y[g] = np.where(keep, 1.0 - shrink, 0.0) * Xp[g]
        return ColumnConjugates(np.sum(X * Y, axis=0) - self._column_omega(Y), Y)

    def _column_omega(self, Y: np.ndarray) -> np.ndarray:
        return self.gamma * (0.5 * np.sum(Y * Y, axis=0) + self.mu * self._group_penalty(Y))

    def Omega(self, T: np.ndarray) -> float:
        return float(np.sum(self._column_omega(T)))


class GroupLassoEntropy(_GroupLasso):
    """Omega(y) = gamma * (sum_i y_i log y_i + mu * sum_G ||y_G||).

    ``delta_Omega`` has no closed form; it is solved per column by proximal
    gradient: the entropy term through its exact prox (Wright omega), the group
    norms as the smooth part, per-column backtracking from step ``gamma``.
    """

    def __init__(self, params: RegParams, executor: Executor | None = None, workers: int = 1):
        super().__init__(params)
        self._executor = executor
        self._workers = max(1, workers)
        self._warm: np.ndarray | None = None

    def _column_omega(self, Y: np.ndarray) -> np.ndarray:
        return self.gamma * (np.sum(xlogy(Y, Y), axis=0) + self.mu * self._group_penalty(Y))

    def Omega(self, T: np.ndarray) -> float:
        return float(np.sum(self._column_omega(T)))

    def _smooth(self, X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        value = -np.sum(X * Y, axis=0)
        grad = -X.copy()
        scale = self.gamma * self.mu
        for g in self.params.resolved_groups(Y.shape[0]):
            norms = np.sqrt(np.sum(Y[g] ** 2, axis=0))
            value = value + scale * norms
            grad[g] += scale * Y[g] / norms
        return value, grad

    def _prox_entropy(self, V: np.ndarray, step: np.ndarray) -> np.ndarray:
        c = step * self.gamma
        Y = c * np.real(wrightomega(V / c - 1.0 - np.log(c)))
        # the log barrier keeps y > 0; guard against underflow to exact zero
        return np.maximum(Y, np.finfo(float).tiny)

    def _solve_block(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        n = X.shape[1]
        step = np.full(n, self.gamma)
        active = np.ones(n, dtype=bool)
        for _ in range(INNER_MAX_ITERS):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            Xa, Ya, sa = X[:, idx], Y[:, idx], step[idx]
            f0, G = self._smooth(Xa, Ya)
            while True:
                Yn = self._prox_entropy(Ya - sa * G, sa)
                D = Yn - Ya
                f1, _ = self._smooth(Xa, Yn)
                bound = f0 + np.sum(G * D, axis=0) + np.sum(D * D, axis=0) / (2 * sa)
                fail = f1 > bound + 1e-15 * np.abs(bound)
                if not fail.any():
                    break
                sa = np.where(fail, sa / 2, sa)
            Y[:, idx] = Yn
            step[idx] = sa
            residual = np.max(np.abs(D), axis=0) / sa
            active[idx[residual <= INNER_TOL]] = False
        else:
            logger.warning("group-lasso entropy inner solve hit %d iterations", INNER_MAX_ITERS)
        return Y

    def delta_Omega(self, X: np.ndarray) -> ColumnConjugates:
        Z = X / self.gamma
        clamped = int(np.count_nonzero(Z > ENTROPY_CLAMP))
        if self._warm is not None and self._warm.shape == X.shape:
            Y0 = self._warm.copy()
        else:
            Y0 = np.maximum(np.exp(np.minimum(Z, ENTROPY_CLAMP) - 1.0), np.finfo(float).tiny)
        n = X.shape[1]
        blocks = np.array_split(np.arange(n), min(self._workers, n))
        if self._executor is not None and len(blocks) > 1:
            parts = list(
                self._executor.map(lambda cols: self._solve_block(X[:, cols], Y0[:, cols]), blocks)
            )
            Y = np.concatenate(parts, axis=1)
        else:
            Y = self._solve_block(X, Y0)
        self._warm = Y.copy()
        return ColumnConjugates(np.sum(X * Y, axis=0) - self._column_omega(Y), Y, clamped)


def make_regularizer(
    params: RegParams, executor: Executor | None = None, workers: int = 1
) -> Regularizer:
    if params.kind == "entropy":
        return NegEntropy(params)
    if params.kind == "squared_l2":
        return SquaredL2(params)
    if params.kind == "group_lasso_l2":
        return GroupLassoL2(params)
    return GroupLassoEntropy(params, executor=executor, workers=workers)


# ---------------------------------------------------------------------------
# Single-vector entry points
# ---------------------------------------------------------------------------


def delta_omega(x: np.ndarray, reg: RegParams) -> ConjugateValueGrad:
    """delta_Omega(x) and its gradient for one vector."""
    x = np.asarray(x, dtype=np.float64)
    _check_finite(x)
    out = make_regularizer(reg).delta_Omega(x[:, None])
    return ConjugateValueGrad(value=float(out.values[0]), grad=out.grad[:, 0], clamped=out.clamped)


def max_omega(x: np.ndarray, reg: RegParams, bj: float) -> ConjugateValueGrad:
    """Smoothed max ``max_{Omega_j}(x)`` and its gradient (a point of the simplex)."""
    x = np.asarray(x, dtype=np.float64)
    _check_finite(x)
    if bj <= 0:
        raise NonPositiveMassError(f"b_j must be positive, got {bj}.")
    out = make_regularizer(reg).max_Omega(x[:, None], np.array([bj]))
    return ConjugateValueGrad(value=float(out.values[0]), grad=out.grad[:, 0])


def omega_value(T: TransportPlan | np.ndarray, reg: RegParams) -> float:
    """sum_j Omega(t_j), with 0 log 0 = 0."""
    t = T.entries if isinstance(T, TransportPlan) else np.asarray(T, dtype=np.float64)
    return make_regularizer(reg).Omega(t)
