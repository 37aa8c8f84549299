"""Tests for palette quantization, barycentric projection and colour transfer."""

import numpy as np
import pytest

from smoothot import (
    DimensionMismatchError,
    EmptyRowError,
    RegParams,
    RelaxationParams,
    RGBImage,
    TooFewColorsError,
    barycentric_project,
    build_cost,
    quantize,
    recolor,
    solve_exact,
    solve_semidual,
    transfer_colors,
)
from smoothot.colortransfer import reseed_empty
from smoothot.io import decode_image, encode_png

# ---------------------------------------------------------------------------
# Fixtures / helpers
# ---------------------------------------------------------------------------

FOUR_COLORS = np.array(
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]]
)


def _random_image(seed: int, size: int = 64) -> RGBImage:
    rng = np.random.default_rng(seed)
    return RGBImage(rgb=rng.integers(0, 256, size=(size, size, 3)) / 255.0)


def _block_image() -> RGBImage:
    """2x4 image holding the four colours 3, 2, 1 and 2 times."""
    rows = [0, 0, 1, 2, 0, 1, 3, 3]
    return RGBImage(rgb=FOUR_COLORS[rows].reshape(2, 4, 3))


# ---------------------------------------------------------------------------
# quantize / build_cost
# ---------------------------------------------------------------------------


class TestQuantize:
    def test_too_few_colours(self):
        with pytest.raises(TooFewColorsError) as exc_info:
            quantize(_block_image(), k=5)
        assert exc_info.value.details == {"distinct": 4, "k": 5}

    def test_exact_palette(self):
        palette = quantize(_block_image(), k=4, seed=0)
        order = np.lexsort(palette.centroids.T)
        np.testing.assert_allclose(
            palette.centroids[order], FOUR_COLORS[np.lexsort(FOUR_COLORS.T)], atol=1e-12
        )
        assert palette.histogram.weights.sum() == pytest.approx(1.0)
        assert sorted(palette.histogram.weights * 8) == pytest.approx([1, 2, 2, 3])

    def test_assignments_index_centroids(self):
        image = _random_image(0, size=16)
        palette = quantize(image, k=8, seed=0)
        assert palette.assignments.shape == (256,)
        assert palette.assignments.max() < palette.k
        counts = np.bincount(palette.assignments, minlength=palette.k) / 256
        np.testing.assert_allclose(counts, palette.histogram.weights)

    def test_deterministic(self):
        image = _random_image(1, size=16)
        first = quantize(image, k=8, seed=3)
        second = quantize(image, k=8, seed=3)
        np.testing.assert_array_equal(first.centroids, second.centroids)

    def test_keeps_k_clusters(self):
        palette = quantize(_random_image(4, size=32), k=32, seed=0)
        assert palette.k == 32
        assert np.all(palette.histogram.weights > 0)

    def test_reseed_moves_empty_centroid_to_farthest_colour(self):
        colors = np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.9, 0.9, 0.9], [0.2, 0.0, 0.0]])
        labels = np.zeros(4, dtype=np.intp)
        centers = np.array([[0.0, 0.0, 0.0], [0.5, 0.5, 0.5]])
        repaired = reseed_empty(colors, labels, centers, np.array([1]))
        np.testing.assert_array_equal(repaired[1], colors[2])
        np.testing.assert_array_equal(repaired[0], centers[0])


class TestBuildCost:
    def test_squared_distances(self):
        palette = quantize(_block_image(), k=4)
        C = build_cost(palette, palette)
        assert np.all(np.diag(C.entries) == 0.0)
        # red, green, blue and white are pairwise two channels apart
        assert C.entries.max() == pytest.approx(2.0)

    def test_swapping_palettes_transposes(self):
        p = quantize(_random_image(2, size=16), k=6, seed=0)
        q = quantize(_random_image(3, size=16), k=4, seed=0)
        assert build_cost(p, q).entries.shape == (6, 4)
        np.testing.assert_array_equal(build_cost(p, q).entries, build_cost(q, p).entries.T)


# ---------------------------------------------------------------------------
# barycentric_project / recolor
# ---------------------------------------------------------------------------


class TestBarycentricProject:
    def test_diagonal_plan_returns_targets(self):
        y = np.array([[0.1, 0.2, 0.3], [0.9, 0.8, 0.7]])
        centroids, empty = barycentric_project(np.diag([0.5, 0.5]), y)
        np.testing.assert_allclose(centroids, y)
        assert empty == []

    def test_average(self):
        y = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
        centroids, _ = barycentric_project(np.array([[0.25, 0.75]]), y)
        np.testing.assert_allclose(centroids, [[0.75, 0.75, 0.75]])

    def test_empty_row_keeps_colour(self):
        y = np.array([[0.2, 0.2, 0.2]])
        x = np.array([[0.5, 0.6, 0.7], [0.1, 0.1, 0.1]])
        centroids, empty = barycentric_project(np.array([[1.0], [0.0]]), y, x)
        assert empty == [1]
        np.testing.assert_allclose(centroids[1], x[1])

    def test_empty_row_without_fallback(self):
        with pytest.raises(EmptyRowError) as exc_info:
            barycentric_project(np.array([[1.0], [0.0]]), np.array([[0.2, 0.2, 0.2]]))
        assert exc_info.value.details == {"rows": [1]}
        assert exc_info.value.exit_code == 41


class TestRecolor:
    def test_replaces_clusters_and_keeps_alpha(self):
        image = RGBImage(
            rgb=_block_image().rgb, alpha=np.arange(8, dtype=np.uint8).reshape(2, 4)
        )
        palette = quantize(image, k=4)
        out = recolor(image, palette, np.zeros((4, 3)))
        assert np.all(out.rgb == 0.0)
        np.testing.assert_array_equal(out.alpha, image.alpha)

    def test_wrong_centroid_count(self):
        image = _block_image()
        with pytest.raises(DimensionMismatchError):
            recolor(image, quantize(image, k=4), np.zeros((3, 3)))


# ---------------------------------------------------------------------------
# transfer_colors
# ---------------------------------------------------------------------------


class TestTransferColors:
    def test_end_to_end(self):
        source, target = _random_image(10), _random_image(11)
        result = transfer_colors(source, target, k=32, seed=0)
        assert result.image.rgb.shape == source.rgb.shape
        assert result.plan.row_residual <= 1e-4
        assert result.plan.col_residual <= 1e-4
        assert np.all((result.image.rgb >= 0.0) & (result.image.rgb <= 1.0))
        decoded = decode_image(encode_png(result.image))
        assert decoded.rgb.shape == (64, 64, 3)

    def test_bit_identical_reruns(self):
        source, target = _random_image(12), _random_image(13)
        first = transfer_colors(source, target, k=16, seed=5)
        second = transfer_colors(source, target, k=16, seed=5)
        assert encode_png(first.image) == encode_png(second.image)

    def test_sparse_plan(self):
        source, target = _random_image(14, size=32), _random_image(15, size=32)
        result = transfer_colors(source, target, k=16, seed=0)
        assert result.plan.sparsity > 0.0

    def test_reverse_direction_recolors_target(self):
        source, target = _random_image(16, size=32), _random_image(17, size=16)
        result = transfer_colors(source, target, k=8, direction="target_to_source")
        assert result.image.rgb.shape == target.rgb.shape
        assert result.plan.shape == (8, 8)

    def test_relaxed_formulation(self):
        source, target = _random_image(18, size=16), _random_image(19, size=16)
        result = transfer_colors(
            source, target, k=8, formulation="semirelaxed", rel=RelaxationParams(gamma=0.1)
        )
        assert result.report.formulation == "semirelaxed"
        assert result.plan.col_residual <= 1e-12


# ---------------------------------------------------------------------------
# Plan sparsity on palettes
# ---------------------------------------------------------------------------


class TestPaletteSparsity:
    @pytest.fixture(scope="class")
    def palettes(self):
        p = quantize(_random_image(20), k=32, seed=0)
        q = quantize(_random_image(21), k=32, seed=0)
        return p, q, build_cost(p, q)

    def test_entropy_plan_has_no_zeros(self, palettes):
        p, q, C = palettes
        reg = RegParams(kind="entropy", gamma=1.0)
        _, plan, _ = solve_semidual(p.histogram, q.histogram, C, reg)
        assert plan.sparsity == 0.0

    @pytest.mark.slow
    def test_squared_l2_plan_is_sparse(self, palettes):
        p, q, C = palettes
        sparsities = []
        for gamma in (1e-2, 1e-1, 1.0, 10.0):
            reg = RegParams(kind="squared_l2", gamma=gamma)
            sparsities.append(solve_semidual(p.histogram, q.histogram, C, reg)[1].sparsity)
        best = max(sparsities)
        assert best >= 0.8

    def test_exact_plan_is_a_vertex(self, palettes):
        p, q, C = palettes
        plan = solve_exact(p.histogram, q.histogram, C).plan
        assert np.count_nonzero(plan.entries) <= p.k + q.k - 1
        assert plan.sparsity >= 1 - (p.k + q.k - 1) / (p.k * q.k)
