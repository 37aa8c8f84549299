"""Exact unregularized OT via the transportation (network) simplex method."""

from __future__ import annotations

import logging
from collections import deque

import numpy as np

from .core import marginal_residuals, primal_value, validate_instance
from .errors import DimensionMismatchError, SizeLimitExceededError, ZeroReferenceError
from .types import (
    CostMatrix,
    DualPotentials,
    ExactSolution,
    Histogram,
    TransportPlan,
    ValueErrors,
)

logger = logging.getLogger(__name__)

MAX_CELLS = 1_000_000


def _north_west_corner(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Initial feasible basis with exactly m + n - 1 cells (degenerate cells carry zero flow)."""
    m, n = a.size, b.size
    supply, demand = a.copy(), b.copy()
    flow = np.zeros((m, n))
    basis: list[tuple[int, int]] = []
    i = j = 0
    while True:
        q = max(min(supply[i], demand[j]), 0.0)
        flow[i, j] = q
        basis.append((i, j))
        supply[i] -= q
        demand[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1 or supply[i] <= demand[j]:
            i += 1
        else:
            j += 1
    return flow, basis


class _SpanningTree:
    """Basis cells as a tree over row nodes ``0..m-1`` and column nodes ``m..m+n-1``."""

    def __init__(self, m: int, n: int, cells: list[tuple[int, int]]):
        self.m = m
        self.adj: list[set[int]] = [set() for _ in range(m + n)]
        for i, j in cells:
            self.add(i, j)

    def add(self, i: int, j: int) -> None:
        self.adj[i].add(self.m + j)
        self.adj[self.m + j].add(i)

    def remove(self, i: int, j: int) -> None:
        self.adj[i].discard(self.m + j)
        self.adj[self.m + j].discard(i)

    def potentials(self, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Solve u_i + v_j = C_ij on every basic cell with u_0 = 0."""
        m = self.m
        pot = np.zeros(len(self.adj))
        seen = np.zeros(len(self.adj), dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            node = queue.popleft()
            for other in self.adj[node]:
                if seen[other]:
                    continue
                seen[other] = True
                if node < m:
                    pot[other] = C[node, other - m] - pot[node]
                else:
                    pot[other] = C[other, node - m] - pot[node]
                queue.append(other)
        return pot[:m], pot[m:]

    def path(self, start: int, goal: int) -> list[int]:
        """Node sequence of the unique tree path from ``start`` to ``goal``."""
        parent = {start: start}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if node == goal:
                break
            for other in self.adj[node]:
                if other not in parent:
                    parent[other] = node
                    queue.append(other)
        nodes = [goal]
        while nodes[-1] != start:
            nodes.append(parent[nodes[-1]])
        return nodes[::-1]


def solve_exact(a: Histogram, b: Histogram, C: CostMatrix) -> ExactSolution:
    """Optimal vertex of U(a, b) and certifying potentials.

    Entering cells follow Dantzig's most-negative reduced cost and switch to
    Bland's smallest-index rule while pivots are degenerate; the leaving cell
    is the smallest-index cell among the blocking ties.
    """
    validate_instance(a, b, C)
    m, n = C.m, C.n
    if m * n > MAX_CELLS:
        raise SizeLimitExceededError(
            f"{m}x{n} instance exceeds the exact solver limit of {MAX_CELLS} cells.",
            details={"m": m, "n": n},
        )
    cost = C.entries
    flow, cells = _north_west_corner(a.weights, b.weights)
    tree = _SpanningTree(m, n, cells)
    basic = np.zeros((m, n), dtype=bool)
    for i, j in cells:
        basic[i, j] = True
    tol = 1e-12 * max(1.0, float(np.max(cost)))

    pivots = 0
    degenerate = False
    while True:
        u, v = tree.potentials(cost)
        reduced = cost - u[:, None] - v[None, :]
        reduced[basic] = 0.0
        candidates = reduced < -tol
        if not candidates.any():
            break
        if degenerate:
            flat = int(np.flatnonzero(candidates.ravel())[0])
        else:
            flat = int(np.argmin(reduced))
        ie, je = divmod(flat, n)

        nodes = tree.path(m + je, ie)
        # cycle cells after the entering one alternate -, +, -, ...
        cycle = [
            (min(p, q), max(p, q) - m) for p, q in zip(nodes[:-1], nodes[1:], strict=True)
        ]
        minus = cycle[0::2]
        plus = cycle[1::2]
        theta = min(flow[i, j] for i, j in minus)
        leave = min((i, j) for i, j in minus if flow[i, j] <= theta)

        flow[ie, je] += theta
        for i, j in plus:
            flow[i, j] += theta
        for i, j in minus:
            flow[i, j] -= theta
        flow[leave] = 0.0
        basic[leave] = False
        basic[ie, je] = True
        tree.remove(*leave)
        tree.add(ie, je)
        degenerate = theta == 0.0
        pivots += 1
        if pivots % 1000 == 0:
            logger.debug("network simplex: %d pivots", pivots)

    plan = TransportPlan.from_entries(np.maximum(flow, 0.0), a, b)
    value = primal_value(plan, C)
    logger.info("exact OT on %dx%d: value=%.12g pivots=%d", m, n, value, pivots)
    return ExactSolution(
        plan=plan, value=value, dual=DualPotentials(alpha=u, beta=v), a=a, b=b, pivots=pivots
    )


def plan_error(T: TransportPlan, T_star: TransportPlan) -> float:
    """||T - T*||_F / ||T*||_F."""
    if T.shape != T_star.shape:
        raise DimensionMismatchError(f"Plan shapes {T.shape} and {T_star.shape} differ.")
    ref = float(np.linalg.norm(T_star.entries))
    if ref == 0.0:
        raise ZeroReferenceError("Reference plan has zero norm.")
    return float(np.linalg.norm(T.entries - T_star.entries)) / ref


def value_errors(
    T: TransportPlan, v_reg: float, exact: ExactSolution, C: CostMatrix
) -> ValueErrors:
    """Relative value error, regularized value error and marginal error against ``exact``."""
    if T.shape != exact.plan.shape:
        raise DimensionMismatchError(f"Plan shapes {T.shape} and {exact.plan.shape} differ.")
    ref = exact.value
    r, s = marginal_residuals(T, exact.a, exact.b)
    marginal_error = float(np.linalg.norm(r) + np.linalg.norm(s))
    reg_value_error = abs(v_reg - ref)
    if ref == 0.0:
        logger.warning("exact OT value is zero; relative value error is undefined")
        value_error = None
    else:
        value_error = abs(primal_value(T, C) - ref) / ref
    return ValueErrors(
        value_error=value_error, reg_value_error=reg_value_error, marginal_error=marginal_error
    )
