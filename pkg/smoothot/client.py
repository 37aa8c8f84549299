"""SmoothOT client: owns the worker pool and the HTTP client shared by every solve."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import httpx
import numpy as np

from .colortransfer import Direction, TransferResult, transfer_colors
from .config import max_workers as resolve_max_workers
from .core import validate_instance
from .io import read_image
from .problem import Problem
from .types import (
    CostMatrix,
    Formulation,
    Histogram,
    RegParams,
    RelaxationParams,
    RGBImage,
    SolveOptions,
)


class SmoothOT:
    """Entry point for solving regularized OT problems.

    ``max_workers`` caps the column fan-out of the iterative group-lasso
    conjugate; it defaults to ``$SMOOTHOT_MAX_WORKERS`` or 1.
    """

    def __init__(self, max_workers: int | None = None, timeout: float = 30.0):
        self.max_workers = resolve_max_workers(max_workers)
        self._executor = (
            ThreadPoolExecutor(max_workers=self.max_workers, thread_name_prefix="smoothot")
            if self.max_workers > 1
            else None
        )
        self._http = httpx.Client(timeout=timeout, follow_redirects=True)

    def problem(
        self,
        a: Histogram | np.ndarray,
        b: Histogram | np.ndarray,
        C: CostMatrix | np.ndarray,
    ) -> Problem:
        a = a if isinstance(a, Histogram) else Histogram(weights=a)
        b = b if isinstance(b, Histogram) else Histogram(weights=b)
        C = C if isinstance(C, CostMatrix) else CostMatrix(entries=C)
        validate_instance(a, b, C)
        return Problem(self, a, b, C)

    def load_image(self, source: str | Path) -> RGBImage:
        return read_image(source, self._http)

    def transfer(
        self,
        source: RGBImage | str | Path,
        target: RGBImage | str | Path,
        k: int = 32,
        seed: int = 0,
        formulation: Formulation = "semidual",
        reg: RegParams | None = None,
        rel: RelaxationParams | None = None,
        opts: SolveOptions | None = None,
        direction: Direction = "source_to_target",
    ) -> TransferResult:
        src = source if isinstance(source, RGBImage) else self.load_image(source)
        tgt = target if isinstance(target, RGBImage) else self.load_image(target)
        return transfer_colors(
            src,
            tgt,
            k=k,
            seed=seed,
            formulation=formulation,
            reg=reg,
            rel=rel,
            opts=opts,
            direction=direction,
            executor=self._executor,
            workers=self.max_workers,
        )

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
        self._http.close()

    def __enter__(self) -> SmoothOT:
        return self

    def __exit__(self, *args: object) -> None:
        self.close()
