"""Tests for the domain records, validation and basic OT quantities."""

import math

import numpy as np
import pytest

from smoothot import (
    CostMatrix,
    DimensionMismatchError,
    Histogram,
    NegativeCostError,
    NonFiniteInputError,
    NonPositiveMassError,
    NotNormalizedError,
    RegParams,
    TransportPlan,
    c_transform,
    dual_value,
    marginal_residuals,
    primal_value,
    semi_dual_value,
    validate_instance,
)
from smoothot.errors import InvalidConfigError, exit_code_for, exit_code_table

# ---------------------------------------------------------------------------
# Fixtures / helpers
# ---------------------------------------------------------------------------

HALF = Histogram(weights=[0.5, 0.5])
ANTI_DIAG = CostMatrix(entries=[[0.0, 1.0], [1.0, 0.0]])
RAMP = CostMatrix(entries=[[1.0, 2.0], [3.0, 4.0]])


def _plan(entries, a=HALF, b=HALF) -> TransportPlan:
    return TransportPlan.from_entries(np.asarray(entries, dtype=float), a, b)


def _random_instance(rng, m, n):
    a = rng.random(m) + 0.1
    b = rng.random(n) + 0.1
    return (
        Histogram(weights=a / a.sum()),
        Histogram(weights=b / b.sum()),
        CostMatrix(entries=rng.random((m, n))),
    )


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------


class TestHistogram:
    def test_valid(self):
        h = Histogram(weights=[0.25, 0.75])
        assert h.dim == 2
        assert h.weights.sum() == 1.0

    def test_is_read_only(self):
        with pytest.raises(ValueError):
            HALF.weights[0] = 1.0

    def test_zero_mass(self):
        with pytest.raises(NonPositiveMassError) as exc_info:
            Histogram(weights=[1.0, 0.0])
        assert exc_info.value.details["index"] == 1
        assert exc_info.value.exit_code == 11

    def test_not_normalized(self):
        with pytest.raises(NotNormalizedError):
            Histogram(weights=[0.5, 0.6])

    def test_renormalizes_within_tolerance(self):
        h = Histogram(weights=[0.5 + 4e-13, 0.5])
        assert math.fsum(h.weights) == pytest.approx(1.0, abs=1e-15)

    def test_non_finite(self):
        with pytest.raises(NonFiniteInputError):
            Histogram(weights=[np.nan, 1.0])

    def test_wrong_rank(self):
        with pytest.raises(DimensionMismatchError):
            Histogram(weights=[[0.5, 0.5]])


class TestCostMatrix:
    def test_shape(self):
        assert (RAMP.m, RAMP.n) == (2, 2)

    def test_negative(self):
        with pytest.raises(NegativeCostError) as exc_info:
            CostMatrix(entries=[[0.0, -1.0]])
        assert exc_info.value.details == {"row": 0, "col": 1}

    def test_infinite(self):
        with pytest.raises(NonFiniteInputError):
            CostMatrix(entries=[[0.0, np.inf]])


class TestTransportPlan:
    def test_residuals(self):
        plan = _plan([[0.5, 0.0], [0.0, 0.25]])
        assert plan.row_residual == pytest.approx(0.25)
        assert plan.col_residual == pytest.approx(0.25)

    def test_sparsity(self):
        assert _plan([[0.5, 0.0], [0.0, 0.5]]).sparsity == 0.5

    def test_negative_entry(self):
        with pytest.raises(NonPositiveMassError):
            _plan([[0.5, -0.1], [0.0, 0.5]])


class TestRegParams:
    def test_gamma_must_be_positive(self):
        with pytest.raises(ValueError):
            RegParams(kind="entropy", gamma=0.0)

    def test_default_group_is_all_rows(self):
        groups = RegParams(kind="group_lasso_l2", gamma=1.0).resolved_groups(3)
        assert [g.tolist() for g in groups] == [[0, 1, 2]]

    def test_repeated_row(self):
        with pytest.raises(InvalidConfigError):
            RegParams(kind="group_lasso_l2", gamma=1.0, groups=((0, 1), (1, 2)))

    def test_groups_must_cover_rows(self):
        reg = RegParams(kind="group_lasso_l2", gamma=1.0, groups=((0,), (2,)))
        with pytest.raises(InvalidConfigError):
            reg.resolved_groups(3)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


class TestValidateInstance:
    def test_uniform_ok(self):
        validate_instance(HALF, HALF, CostMatrix(entries=np.zeros((2, 2))))

    def test_dimension_mismatch(self):
        third = Histogram(weights=[1 / 3, 1 / 3, 1 / 3])
        with pytest.raises(DimensionMismatchError) as exc_info:
            validate_instance(HALF, third, RAMP)
        assert exc_info.value.details["cost_shape"] == [2, 2]


class TestPrimalValue:
    def test_diagonal_plan(self):
        assert primal_value(_plan(np.eye(2) / 2), ANTI_DIAG) == 0.0

    def test_uniform_plan(self):
        assert primal_value(_plan(np.full((2, 2), 0.25)), RAMP) == pytest.approx(2.5)

    def test_zero_plan(self):
        assert primal_value(np.zeros((2, 2)), RAMP) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            primal_value(np.zeros((3, 2)), RAMP)


class TestCTransform:
    def test_zero_potential(self):
        np.testing.assert_array_equal(c_transform(np.zeros(2), ANTI_DIAG), [0.0, 0.0])

    def test_ramp(self):
        np.testing.assert_array_equal(c_transform(np.array([1.0, 0.0]), RAMP), [0.0, 1.0])

    def test_constant_columns(self):
        C = CostMatrix(entries=np.tile([2.0, 5.0, 7.0], (4, 1)))
        np.testing.assert_array_equal(c_transform(np.zeros(4), C), [2.0, 5.0, 7.0])

    def test_shift(self):
        rng = np.random.default_rng(0)
        _, _, C = _random_instance(rng, 5, 4)
        alpha = rng.normal(size=5)
        np.testing.assert_allclose(
            c_transform(alpha + 3.0, C), c_transform(alpha, C) - 3.0, atol=1e-12
        )

    def test_wrong_length(self):
        with pytest.raises(DimensionMismatchError):
            c_transform(np.zeros(3), RAMP)


class TestDualValues:
    def test_semi_dual_at_zero(self):
        assert semi_dual_value(np.zeros(2), HALF, HALF, ANTI_DIAG) == 0.0

    def test_semi_dual_reduces_to_column_minima(self):
        rng = np.random.default_rng(1)
        a, b, C = _random_instance(rng, 4, 3)
        expected = float(C.entries.min(axis=0) @ b.weights)
        assert semi_dual_value(np.zeros(4), a, b, C) == pytest.approx(expected)

    def test_semi_dual_shift_invariance(self):
        rng = np.random.default_rng(2)
        a, b, C = _random_instance(rng, 5, 5)
        alpha = rng.normal(size=5)
        assert semi_dual_value(alpha + 1.7, a, b, C) == pytest.approx(
            semi_dual_value(alpha, a, b, C), abs=1e-12
        )

    def test_weak_duality(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a, b, C = _random_instance(rng, 4, 5)
            alpha = rng.normal(size=4)
            beta = c_transform(alpha, C)
            T = np.outer(a.weights, b.weights)
            assert dual_value(alpha, beta, a, b) <= primal_value(T, C) + 1e-12

    def test_marginal_residuals(self):
        r, s = marginal_residuals(np.array([[0.5, 0.0], [0.0, 0.25]]), HALF, HALF)
        np.testing.assert_allclose(r, [0.0, -0.25])
        np.testing.assert_allclose(s, [0.0, -0.25])


# ---------------------------------------------------------------------------
# Error mapping
# ---------------------------------------------------------------------------


class TestExitCodes:
    def test_known(self):
        assert exit_code_for(NegativeCostError()) == 13

    def test_other_exception(self):
        assert exit_code_for(RuntimeError("boom")) == 1

    def test_table_lists_every_code(self):
        table = exit_code_table()
        for code in ("10", "22", "31", "50"):
            assert code in table
