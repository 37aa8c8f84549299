"""smoothot types: pydantic records shared by the solvers, the oracle and the CLI."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import (
    DimensionMismatchError,
    InvalidConfigError,
    NegativeCostError,
    NonFiniteInputError,
    NonPositiveMassError,
    NotNormalizedError,
)

NORMALIZATION_TOL = 1e-12

RegKind = Literal["entropy", "squared_l2", "group_lasso_entropy", "group_lasso_l2"]
SolverName = Literal[
    "quasi_newton", "gradient_descent", "alternating", "accelerated_projected_gradient"
]
Formulation = Literal["dual", "semidual", "relaxed", "semirelaxed"]
GapRounding = Literal["column_simplex_projection", "column_rescaling", "none"]


def frozen_array(value: object, ndim: int, name: str) -> np.ndarray:
    """Copy ``value`` into a read-only float64 array of the given rank."""
    arr = np.array(value, dtype=np.float64)
    if arr.ndim != ndim:
        raise DimensionMismatchError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}.")
    if arr.size == 0:
        raise DimensionMismatchError(f"{name} must not be empty.")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError(f"{name} contains NaN or infinity.")
    arr.setflags(write=False)
    return arr


class _ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class Histogram(_ArrayModel):
    """Strictly positive probability vector."""

    weights: np.ndarray

    @field_validator("weights", mode="before")
    @classmethod
    def _check_weights(cls, value: object) -> np.ndarray:
        w = frozen_array(value, 1, "histogram")
        bad = np.flatnonzero(w <= 0)
        if bad.size:
            raise NonPositiveMassError(details={"index": int(bad[0]), "value": float(w[bad[0]])})
        total = math.fsum(w)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise NotNormalizedError(f"Histogram sums to {total!r}.", details={"sum": total})
        if total != 1.0:
            w = w / total
            w.setflags(write=False)
        return w

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])


class CostMatrix(_ArrayModel):
    """Dense nonnegative ground-cost matrix."""

    entries: np.ndarray

    @field_validator("entries", mode="before")
    @classmethod
    def _check_entries(cls, value: object) -> np.ndarray:
        c = frozen_array(value, 2, "cost matrix")
        if np.any(c < 0):
            i, j = np.argwhere(c < 0)[0]
            raise NegativeCostError(details={"row": int(i), "col": int(j)})
        return c

    @property
    def m(self) -> int:
        return int(self.entries.shape[0])

    @property
    def n(self) -> int:
        return int(self.entries.shape[1])


class TransportPlan(_ArrayModel):
    entries: np.ndarray
    row_residual: float
    col_residual: float

    @field_validator("entries", mode="before")
    @classmethod
    def _check_entries(cls, value: object) -> np.ndarray:
        t = frozen_array(value, 2, "transport plan")
        if np.any(t < 0):
            raise NonPositiveMassError("Transport plan has a negative entry.")
        return t

    @classmethod
    def from_entries(cls, entries: np.ndarray, a: Histogram, b: Histogram) -> TransportPlan:
        """Build a plan and fill its marginal residuals against ``a`` and ``b``."""
        t = np.asarray(entries, dtype=np.float64)
        if t.shape != (a.dim, b.dim):
            raise DimensionMismatchError(
                f"Plan shape {t.shape} does not match histograms ({a.dim}, {b.dim})."
            )
        return cls(
            entries=t,
            row_residual=float(np.max(np.abs(t.sum(axis=1) - a.weights))),
            col_residual=float(np.max(np.abs(t.sum(axis=0) - b.weights))),
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape  # type: ignore[return-value]

    @property
    def sparsity(self) -> float:
        """Fraction of exactly-zero entries."""
        return float(np.count_nonzero(self.entries == 0) / self.entries.size)


class DualPotentials(_ArrayModel):
    alpha: np.ndarray
    beta: np.ndarray | None = None

    @field_validator("alpha", mode="before")
    @classmethod
    def _check_alpha(cls, value: object) -> np.ndarray:
        return frozen_array(value, 1, "alpha")

    @field_validator("beta", mode="before")
    @classmethod
    def _check_beta(cls, value: object) -> np.ndarray | None:
        if value is None:
            return None
        return frozen_array(value, 1, "beta")


class RegParams(BaseModel):
    """Regularizer Omega: kind, strength gamma, group-lasso weight mu and row groups."""

    model_config = ConfigDict(frozen=True)

    kind: RegKind = "squared_l2"
    gamma: float = Field(gt=0)
    mu: float = Field(default=0.0, ge=0)
    groups: tuple[tuple[int, ...], ...] | None = None

    @field_validator("groups")
    @classmethod
    def _check_groups(
        cls, value: tuple[tuple[int, ...], ...] | None
    ) -> tuple[tuple[int, ...], ...] | None:
        if value is None:
            return None
        seen: set[int] = set()
        for group in value:
            if not group:
                raise InvalidConfigError("Groups must be nonempty.")
            for idx in group:
                if idx < 0 or idx in seen:
                    raise InvalidConfigError(f"Row index {idx} is negative or repeated.")
                seen.add(idx)
        return value

    @property
    def is_group_lasso(self) -> bool:
        return self.kind.startswith("group_lasso")

    def resolved_groups(self, m: int) -> list[np.ndarray]:
        """Row groups for an ``m``-row problem; one group spanning all rows when unset."""
        if self.groups is None:
            return [np.arange(m)]
        covered = sorted(i for g in self.groups for i in g)
        if covered != list(range(m)):
            raise InvalidConfigError(
                f"Groups must cover rows 0..{m - 1} exactly once.", details={"m": m}
            )
        return [np.asarray(g, dtype=np.intp) for g in self.groups]


class RelaxationParams(BaseModel):
    """Scale of Phi(x, y) = ||x - y||^2 / (2 gamma)."""

    model_config = ConfigDict(frozen=True)

    gamma: float = Field(gt=0)


class ConjugateValueGrad(_ArrayModel):
    value: float
    grad: np.ndarray
    clamped: int = 0


class SolveOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_iters: int = Field(default=1000, gt=0)
    grad_tol: float = Field(default=1e-6, gt=0)
    solver: SolverName | None = None
    record_trace: bool = True
    memory: int = Field(default=10, gt=0)
    strict: bool = False


class SolveReport(BaseModel):
    formulation: str
    solver: str
    objective: float
    objective_trace: list[float] = []
    iters: int
    converged: bool
    max_iters_exceeded: bool = False
    duality_gap: float | None = None
    gap_rounding: GapRounding = "none"
    plan_sparsity: float = Field(ge=0.0, le=1.0)
    row_residual: float
    col_residual: float
    wall_time: float
    clamp_events: int = 0


class ExactSolution(_ArrayModel):
    plan: TransportPlan
    value: float
    dual: DualPotentials
    a: Histogram
    b: Histogram
    pivots: int = 0


class ValueErrors(BaseModel):
    value_error: float | None
    reg_value_error: float
    marginal_error: float
    plan_error: float | None = None


class BoundReport(BaseModel):
    kind: Literal["entropy", "squared_l2"]
    L: float
    U: float
    L_relaxed: float
    L_semi_relaxed: float
    nu1: float
    nu2: float

    @model_validator(mode="after")
    def _check_order(self) -> BoundReport:
        if self.L > self.U + 1e-12:
            raise ValueError("Lower approximation constant exceeds the upper one.")
        return self


class Palette(_ArrayModel):
    """k-means colour palette of an image."""

    centroids: np.ndarray
    assignments: np.ndarray
    histogram: Histogram

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])


class RGBImage(_ArrayModel):
    """RGB raster with values in [0, 1] and an optional untouched 8-bit alpha plane."""

    rgb: np.ndarray
    alpha: np.ndarray | None = None

    @field_validator("rgb", mode="before")
    @classmethod
    def _check_rgb(cls, value: object) -> np.ndarray:
        arr = frozen_array(value, 3, "image")
        if arr.shape[2] != 3:
            raise DimensionMismatchError(f"Expected 3 colour channels, got {arr.shape[2]}.")
        return arr

    @property
    def pixels(self) -> np.ndarray:
        return self.rgb.reshape(-1, 3)


class RunConfig(BaseModel):
    """Validated command-line invocation."""

    subcommand: Literal["solve", "transfer", "bounds", "exact", "compare"]
    formulation: Formulation = "semidual"
    reg: RegKind = "squared_l2"
    gamma: float = Field(default=1.0, gt=0)
    mu: float = Field(default=0.0, ge=0)
    groups: Path | None = None
    solver: SolverName | None = None
    max_iters: int = Field(default=1000, gt=0)
    grad_tol: float = Field(default=1e-6, gt=0)
    a: Path | None = None
    b: Path | None = None
    cost: Path | None = None
    source: str | None = None
    target: str | None = None
    out: Path | None = None
    report: Path | None = None
    exact: bool = False
    gammas: list[float] = [1e-3, 1e-2, 1e-1, 1.0, 10.0]
    k: int = Field(default=32, gt=0)
    seed: int = 0
    direction: Literal["source_to_target", "target_to_source"] = "source_to_target"

    @model_validator(mode="after")
    def _check_consistency(self) -> RunConfig:
        if self.reg.startswith("group_lasso") and self.formulation != "dual":
            raise InvalidConfigError("Group-lasso regularizers are only available with 'dual'.")
        if self.groups is not None and not self.reg.startswith("group_lasso"):
            raise InvalidConfigError("--groups requires a group-lasso regularizer.")
        if self.solver == "alternating" and self.formulation != "dual":
            raise InvalidConfigError("The alternating solver only applies to 'dual'.")
        if self.subcommand in ("solve", "bounds", "exact", "compare"):
            missing = [name for name in ("a", "b", "cost") if getattr(self, name) is None]
            if missing:
                raise InvalidConfigError(f"Missing inputs: {', '.join(missing)}.")
        if self.subcommand == "transfer" and None in (self.source, self.target, self.out):
            raise InvalidConfigError("transfer needs --source, --target and --out.")
        if any(g <= 0 for g in self.gammas):
            raise InvalidConfigError("--gammas must be positive.")
        return self
