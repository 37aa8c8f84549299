"""Tests for the network-simplex oracle and the error metrics."""

import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from smoothot import (
    CostMatrix,
    DimensionMismatchError,
    Histogram,
    SizeLimitExceededError,
    TransportPlan,
    ZeroReferenceError,
    plan_error,
    solve_exact,
    value_errors,
)
from smoothot import oracle

# ---------------------------------------------------------------------------
# Fixtures / helpers
# ---------------------------------------------------------------------------

HALF = Histogram(weights=[0.5, 0.5])
ANTI_DIAG = CostMatrix(entries=[[0.0, 1.0], [1.0, 0.0]])
DIAG_COST = CostMatrix(entries=[[1.0, 0.0], [0.0, 1.0]])


def _random_instance(rng, m, n):
    a = rng.random(m) + 0.1
    b = rng.random(n) + 0.1
    return (
        Histogram(weights=a / a.sum()),
        Histogram(weights=b / b.sum()),
        CostMatrix(entries=rng.random((m, n))),
    )


def _linprog_value(a: Histogram, b: Histogram, C: CostMatrix) -> float:
    m, n = C.m, C.n
    rows = np.kron(np.eye(m), np.ones((1, n)))
    cols = np.kron(np.ones((1, m)), np.eye(n))
    res = linprog(
        C.entries.ravel(),
        A_eq=np.vstack([rows, cols]),
        b_eq=np.concatenate([a.weights, b.weights]),
        bounds=(0, None),
        method="highs",
    )
    assert res.status == 0
    return float(res.fun)


def _enumerated_value(a: Histogram, b: Histogram, C: CostMatrix) -> float:
    """Cheapest feasible basic solution over every support of size m + n - 1."""
    m, n = C.m, C.n
    A = np.vstack([np.kron(np.eye(m), np.ones((1, n))), np.kron(np.ones((1, m)), np.eye(n))])
    rhs = np.concatenate([a.weights, b.weights])
    best = np.inf
    for support in itertools.combinations(range(m * n), m + n - 1):
        cols = A[:, support]
        if np.linalg.matrix_rank(cols) < m + n - 1:
            continue
        x = np.linalg.lstsq(cols, rhs, rcond=None)[0]
        if np.all(x >= -1e-12) and np.allclose(cols @ x, rhs, atol=1e-12):
            best = min(best, float(C.entries.ravel()[list(support)] @ x))
    return best


# ---------------------------------------------------------------------------
# solve_exact
# ---------------------------------------------------------------------------


class TestSolveExact:
    def test_identity_matching(self):
        exact = solve_exact(HALF, HALF, ANTI_DIAG)
        assert exact.value == 0.0
        np.testing.assert_array_equal(exact.plan.entries, [[0.5, 0.0], [0.0, 0.5]])

    def test_swapped_matching(self):
        exact = solve_exact(HALF, HALF, DIAG_COST)
        assert exact.value == 0.0
        np.testing.assert_array_equal(exact.plan.entries, [[0.0, 0.5], [0.5, 0.0]])

    def test_single_row(self):
        a = Histogram(weights=[1.0])
        b = Histogram(weights=[0.25, 0.75])
        exact = solve_exact(a, b, CostMatrix(entries=[[2.0, 4.0]]))
        assert exact.value == pytest.approx(3.5)
        assert exact.pivots == 0

    def test_marginals_exact(self):
        rng = np.random.default_rng(0)
        a, b, C = _random_instance(rng, 7, 9)
        plan = solve_exact(a, b, C).plan
        np.testing.assert_allclose(plan.entries.sum(axis=1), a.weights, atol=1e-12)
        np.testing.assert_allclose(plan.entries.sum(axis=0), b.weights, atol=1e-12)
        assert np.all(plan.entries >= 0)

    def test_vertex_sparsity(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            m, n = rng.integers(2, 10, size=2)
            a, b, C = _random_instance(rng, int(m), int(n))
            plan = solve_exact(a, b, C).plan
            assert np.count_nonzero(plan.entries) <= m + n - 1

    def test_dual_certificate(self):
        rng = np.random.default_rng(2)
        a, b, C = _random_instance(rng, 6, 8)
        exact = solve_exact(a, b, C)
        alpha, beta = exact.dual.alpha, exact.dual.beta
        assert np.all(alpha[:, None] + beta[None, :] <= C.entries + 1e-10)
        dual = float(alpha @ a.weights + beta @ b.weights)
        assert dual == pytest.approx(exact.value, abs=1e-10)

    def test_degenerate_marginals(self):
        # equal partial sums force zero-flow basic cells
        a = Histogram(weights=[0.25, 0.25, 0.25, 0.25])
        b = Histogram(weights=[0.5, 0.5])
        rng = np.random.default_rng(3)
        C = CostMatrix(entries=rng.random((4, 2)))
        assert solve_exact(a, b, C).value == pytest.approx(_enumerated_value(a, b, C), abs=1e-12)

    @pytest.mark.slow
    def test_matches_linprog(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            m, n = rng.integers(1, 7, size=2)
            a, b, C = _random_instance(rng, int(m), int(n))
            assert solve_exact(a, b, C).value == pytest.approx(_linprog_value(a, b, C), abs=1e-7)

    @pytest.mark.slow
    def test_matches_support_enumeration(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            m, n = rng.integers(1, 4, size=2)
            a, b, C = _random_instance(rng, int(m), int(n))
            expected = _enumerated_value(a, b, C)
            assert solve_exact(a, b, C).value == pytest.approx(expected, abs=1e-10)

    def test_size_limit(self, monkeypatch):
        monkeypatch.setattr(oracle, "MAX_CELLS", 3)
        with pytest.raises(SizeLimitExceededError) as exc_info:
            solve_exact(HALF, HALF, ANTI_DIAG)
        assert exc_info.value.details == {"m": 2, "n": 2}
        assert exc_info.value.exit_code == 30


# ---------------------------------------------------------------------------
# Error metrics
# ---------------------------------------------------------------------------


class TestPlanError:
    def test_identical(self):
        plan = solve_exact(HALF, HALF, ANTI_DIAG).plan
        assert plan_error(plan, plan) == 0.0

    def test_opposite_matching(self):
        good = solve_exact(HALF, HALF, ANTI_DIAG).plan
        bad = solve_exact(HALF, HALF, DIAG_COST).plan
        assert plan_error(bad, good) == pytest.approx(np.sqrt(2.0))

    def test_zero_reference(self):
        zero = TransportPlan(entries=np.zeros((2, 2)), row_residual=0.5, col_residual=0.5)
        with pytest.raises(ZeroReferenceError):
            plan_error(zero, zero)

    def test_shape_mismatch(self):
        small = solve_exact(HALF, HALF, ANTI_DIAG).plan
        third = Histogram(weights=[1 / 3, 1 / 3, 1 / 3])
        big = solve_exact(third, third, CostMatrix(entries=np.ones((3, 3)))).plan
        with pytest.raises(DimensionMismatchError):
            plan_error(small, big)


class TestValueErrors:
    def test_zero_exact_value(self):
        exact = solve_exact(HALF, HALF, ANTI_DIAG)
        errs = value_errors(exact.plan, 0.1, exact, ANTI_DIAG)
        assert errs.value_error is None
        assert errs.reg_value_error == pytest.approx(0.1)
        assert errs.marginal_error == 0.0

    def test_uniform_plan(self):
        C = CostMatrix(entries=[[1.0, 2.0], [2.0, 1.0]])
        exact = solve_exact(HALF, HALF, C)
        uniform = TransportPlan.from_entries(np.full((2, 2), 0.25), HALF, HALF)
        errs = value_errors(uniform, 1.25, exact, C)
        assert exact.value == pytest.approx(1.0)
        assert errs.value_error == pytest.approx(0.5)
        assert errs.reg_value_error == pytest.approx(0.25)

    def test_marginal_error(self):
        exact = solve_exact(HALF, HALF, ANTI_DIAG)
        partial = TransportPlan.from_entries(np.array([[0.5, 0.0], [0.0, 0.0]]), HALF, HALF)
        errs = value_errors(partial, 0.0, exact, ANTI_DIAG)
        assert errs.marginal_error == pytest.approx(1.0)
