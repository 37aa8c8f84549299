"""A validated OT instance bound to a client."""

from __future__ import annotations

from typing import TYPE_CHECKING

from . import bounds, oracle, solvers
from .bounds import BoundKind
from .types import (
    BoundReport,
    CostMatrix,
    DualPotentials,
    ExactSolution,
    Formulation,
    Histogram,
    RegParams,
    RelaxationParams,
    SolveOptions,
    SolveReport,
    TransportPlan,
)

if TYPE_CHECKING:
    from .client import SmoothOT


class Problem:
    """Instance ``(a, b, C)``; solves run on the client's worker pool."""

    def __init__(self, client: SmoothOT, a: Histogram, b: Histogram, C: CostMatrix):
        self._client = client
        self.a = a
        self.b = b
        self.C = C
        self._exact: ExactSolution | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.C.m, self.C.n

    def solve_dual(
        self, reg: RegParams, opts: SolveOptions | None = None
    ) -> tuple[DualPotentials, TransportPlan, SolveReport]:
        return solvers.solve_dual(
            self.a,
            self.b,
            self.C,
            reg,
            opts,
            executor=self._client._executor,
            workers=self._client.max_workers,
        )

    def solve_semidual(
        self, reg: RegParams, opts: SolveOptions | None = None
    ) -> tuple[DualPotentials, TransportPlan, SolveReport]:
        return solvers.solve_semidual(self.a, self.b, self.C, reg, opts)

    def alternating_minimization(
        self, reg: RegParams, opts: SolveOptions | None = None
    ) -> tuple[DualPotentials, TransportPlan, SolveReport]:
        return solvers.alternating_minimization(self.a, self.b, self.C, reg, opts)

    def solve_relaxed_primal(
        self, rel: RelaxationParams, opts: SolveOptions | None = None
    ) -> tuple[TransportPlan, SolveReport]:
        return solvers.solve_relaxed_primal(self.a, self.b, self.C, rel, opts)

    def solve_semi_relaxed_primal(
        self, rel: RelaxationParams, opts: SolveOptions | None = None
    ) -> tuple[TransportPlan, SolveReport]:
        return solvers.solve_semi_relaxed_primal(self.a, self.b, self.C, rel, opts)

    def solve(
        self,
        formulation: Formulation,
        reg: RegParams | None = None,
        rel: RelaxationParams | None = None,
        opts: SolveOptions | None = None,
    ) -> tuple[DualPotentials | None, TransportPlan, SolveReport]:
        return solvers.solve(
            formulation,
            self.a,
            self.b,
            self.C,
            reg,
            rel,
            opts,
            executor=self._client._executor,
            workers=self._client.max_workers,
        )

    def exact(self) -> ExactSolution:
        """Exact LP solution, computed once per problem."""
        if self._exact is None:
            self._exact = oracle.solve_exact(self.a, self.b, self.C)
        return self._exact

    def bounds(self, kind: BoundKind) -> BoundReport:
        return bounds.bound_report(self.a, self.b, self.C, kind)
