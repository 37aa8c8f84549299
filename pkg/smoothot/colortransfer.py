"""Colour transfer: quantize both images, transport palettes, project, recolor."""

from __future__ import annotations

import logging
from concurrent.futures import Executor
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.spatial.distance import cdist
from sklearn.cluster import KMeans

from .errors import DimensionMismatchError, EmptyRowError, TooFewColorsError
from .solvers import solve
from .types import (
    CostMatrix,
    Formulation,
    Histogram,
    Palette,
    RegParams,
    RelaxationParams,
    RGBImage,
    SolveOptions,
    SolveReport,
    TransportPlan,
)

logger = logging.getLogger(__name__)

Direction = Literal["source_to_target", "target_to_source"]

EMPTY_ROW_MASS = 1e-15
KMEANS_MAX_ITERS = 300
KMEANS_TOL = 1e-6


def _fit_kmeans(colors: np.ndarray, counts: np.ndarray, k: int, init, seed: int) -> KMeans:
    return KMeans(
        n_clusters=k,
        init=init,
        n_init=1,
        max_iter=KMEANS_MAX_ITERS,
        tol=KMEANS_TOL,
        random_state=seed,
        algorithm="lloyd",
    ).fit(colors, sample_weight=counts)


def reseed_empty(
    colors: np.ndarray, labels: np.ndarray, centers: np.ndarray, empty: np.ndarray
) -> np.ndarray:
    """Move each empty centroid onto the colour farthest from its own centroid."""
    centers = np.array(centers, dtype=np.float64)
    far = np.sum((colors - centers[labels]) ** 2, axis=1)
    # stable, so ties go to the lowest colour index
    order = np.argsort(-far, kind="stable")
    for cluster, color in zip(empty, order, strict=False):
        centers[cluster] = colors[color]
    return centers


def quantize(image: RGBImage, k: int, seed: int = 0) -> Palette:
    """k-means palette of ``image`` (k-means++ seeding, Lloyd iterations).

    Clustering runs on the distinct colours weighted by their pixel counts,
    which gives the same centroids as clustering every pixel. A cluster left
    empty is re-seeded at the colour farthest from its centroid and Lloyd is
    rerun from the repaired centroids.

    The stop rule is scikit-learn's: ``tol`` is scaled by the mean per-channel
    variance of the colours and compared with the summed squared centroid
    shift, so it is not an absolute 1e-6 movement threshold.
    """
    colors, inverse, counts = np.unique(
        image.pixels, axis=0, return_inverse=True, return_counts=True
    )
    inverse = inverse.reshape(-1)
    if k > colors.shape[0]:
        raise TooFewColorsError(
            f"Image has {colors.shape[0]} distinct colours, fewer than k={k}.",
            details={"distinct": int(colors.shape[0]), "k": k},
        )
    km = _fit_kmeans(colors, counts, k, "k-means++", seed)
    for _ in range(k):
        empty = np.flatnonzero(np.bincount(km.labels_, minlength=k) == 0)
        if not empty.size:
            break
        logger.debug("re-seeding %d empty clusters", empty.size)
        init = reseed_empty(colors, km.labels_, km.cluster_centers_, empty)
        km = _fit_kmeans(colors, counts, k, init, seed)
    labels = km.labels_
    sizes = np.bincount(labels, weights=counts, minlength=k)
    centroids = np.clip(km.cluster_centers_, 0.0, 1.0)
    used = sizes > 0
    if not used.all():
        logger.warning("dropping %d clusters still empty after re-seeding", int((~used).sum()))
        remap = np.cumsum(used) - 1
        labels, centroids, sizes = remap[labels], centroids[used], sizes[used]
    total = float(counts.sum())
    return Palette(
        centroids=centroids,
        assignments=labels[inverse],
        histogram=Histogram(weights=sizes / total),
    )


def build_cost(p: Palette, q: Palette) -> CostMatrix:
    """C_ij = ||x_i - y_j||^2 in RGB."""
    return CostMatrix(entries=cdist(p.centroids, q.centroids, "sqeuclidean"))


def barycentric_project(
    T: TransportPlan | np.ndarray,
    q_centroids: np.ndarray,
    p_centroids: np.ndarray | None = None,
) -> tuple[np.ndarray, list[int]]:
    """x_i = sum_j T_ij y_j / sum_j T_ij, clamped to [0, 1].

    Rows carrying less than 1e-15 mass keep their ``p_centroids`` colour and
    are returned as flagged; without ``p_centroids`` they raise EmptyRowError.
    """
    t = T.entries if isinstance(T, TransportPlan) else np.asarray(T, dtype=np.float64)
    y = np.asarray(q_centroids, dtype=np.float64)
    mass = t.sum(axis=1)
    empty = np.flatnonzero(mass < EMPTY_ROW_MASS)
    if empty.size and p_centroids is None:
        raise EmptyRowError(details={"rows": empty.tolist()})
    safe = np.where(mass < EMPTY_ROW_MASS, 1.0, mass)
    projected = (t @ y) / safe[:, None]
    if empty.size:
        logger.warning("%d palette rows received no mass; keeping their colour", empty.size)
        projected[empty] = np.asarray(p_centroids, dtype=np.float64)[empty]
    return np.clip(projected, 0.0, 1.0), empty.tolist()


def recolor(image: RGBImage, palette: Palette, new_centroids: np.ndarray) -> RGBImage:
    """Replace every pixel by the new colour of its cluster; alpha is left as is."""
    new_centroids = np.asarray(new_centroids, dtype=np.float64)
    if new_centroids.shape != palette.centroids.shape:
        raise DimensionMismatchError(
            f"Expected {palette.centroids.shape} centroids, got {new_centroids.shape}."
        )
    rgb = new_centroids[palette.assignments].reshape(image.rgb.shape)
    return RGBImage(rgb=rgb, alpha=image.alpha)


class TransferResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    image: RGBImage
    plan: TransportPlan
    report: SolveReport
    source_palette: Palette
    target_palette: Palette
    empty_rows: list[int] = []


def transfer_colors(
    source: RGBImage,
    target: RGBImage,
    k: int = 32,
    seed: int = 0,
    formulation: Formulation = "semidual",
    reg: RegParams | None = None,
    rel: RelaxationParams | None = None,
    opts: SolveOptions | None = None,
    direction: Direction = "source_to_target",
    executor: Executor | None = None,
    workers: int = 1,
) -> TransferResult:
    """Recolor ``source`` with the palette of ``target`` (or the reverse).

    The plan always has source colours as rows; ``target_to_source`` projects
    target colours through the transposed plan onto source centroids.
    """
    if reg is None and formulation in ("dual", "semidual"):
        reg = RegParams(kind="squared_l2", gamma=1.0)
    if rel is None and formulation in ("relaxed", "semirelaxed"):
        rel = RelaxationParams(gamma=1.0)
    p = quantize(source, k, seed)
    q = quantize(target, k, seed)
    C = build_cost(p, q)
    _, plan, report = solve(
        formulation, p.histogram, q.histogram, C, reg, rel, opts, executor, workers
    )
    if direction == "source_to_target":
        centroids, empty = barycentric_project(plan, q.centroids, p.centroids)
        image = recolor(source, p, centroids)
    else:
        centroids, empty = barycentric_project(plan.entries.T, p.centroids, q.centroids)
        image = recolor(target, q, centroids)
    logger.info(
        "colour transfer %s: k=%d/%d sparsity=%.3f", direction, p.k, q.k, plan.sparsity
    )
    return TransferResult(
        image=image,
        plan=plan,
        report=report,
        source_palette=p,
        target_palette=q,
        empty_rows=empty,
    )
