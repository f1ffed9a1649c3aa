"""Proportional distribution inner loop.

Oracle: a scalar brute-force simulation of the pass sequence, independent
of the vectorized implementation.
"""
import numpy as np
import pytest

from ptopt.filters import build_filter
from ptopt.grid import StructuredGrid
from ptopt.optimizers import StagnantInnerLoopError, UnreachableTargetError, distribute


def identity_filter(n_elements: int):
    """rmin = 1 collapses the neighborhood to the element itself."""
    if n_elements == 2:
        return build_filter(StructuredGrid(2, 1), 1.0)
    nelx = n_elements
    return build_filter(StructuredGrid(nelx, 1), 1.0)


def brute_force_distribution(target, weights, exponent, bounds, tol=0.001, max_passes=100000):
    """Oracle: scalar reimplementation of the inner loop without filtering."""
    lo, hi = bounds
    w = [float(x) ** exponent for x in weights]
    total = sum(w)
    proportion = [x / total for x in w]
    x = [0.0] * len(w)
    remaining = float(target)
    passes = 0
    while remaining > tol and passes < max_passes:
        for i in range(len(x)):
            x[i] = min(hi, max(lo, x[i] + remaining * proportion[i]))
        remaining = target - sum(x)
        passes += 1
    return np.array(x), remaining, passes


class TestDistribute:
    def test_uniform_weights_uniform_field(self):
        op = identity_filter(8)
        result = distribute(3.2, np.ones(8), 2.0, op, (0.0, 1.0))
        assert result.density == pytest.approx(np.full(8, 0.4), abs=1e-12)

    def test_two_element_exact(self):
        op = identity_filter(2)
        result = distribute(1.0, np.array([1.0, 2.0]), 2.0, op, (0.0, 1.0))
        assert result.density == pytest.approx([0.2, 0.8], abs=1e-12)
        assert result.passes == 1
        assert abs(result.remaining) <= 1e-12

    def test_two_element_clamped_fixed_point(self):
        op = identity_filter(2)
        result = distribute(1.5, np.array([1.0, 3.0]), 1.0, op, (0.0, 1.0), inner_tolerance=1e-9)
        assert result.density == pytest.approx([0.5, 1.0], abs=1e-6)

    def test_matches_brute_force_oracle(self):
        op = identity_filter(2)
        oracle, oracle_rm, oracle_passes = brute_force_distribution(1.5, [1.0, 3.0], 1.0, (0.0, 1.0))
        result = distribute(1.5, np.array([1.0, 3.0]), 1.0, op, (0.0, 1.0))
        assert result.density == pytest.approx(oracle, abs=1e-12)
        assert result.remaining == pytest.approx(oracle_rm, abs=1e-12)
        assert result.passes == oracle_passes
        # first two passes of the hand-computed trajectory
        assert oracle_passes >= 2

    def test_weight_scaling_invariance(self):
        grid = StructuredGrid(6, 4)
        op = build_filter(grid, 1.5)
        rng = np.random.default_rng(17)
        weights = rng.uniform(0.1, 2.0, grid.n_elements)
        base = distribute(9.0, weights, 2.0, op, (0.0, 1.0))
        for c in (1e-6, 0.5, 7.0, 1e6):
            scaled = distribute(9.0, c * weights, 2.0, op, (0.0, 1.0))
            assert np.abs(scaled.density - base.density).max() <= 1e-12

    def test_randomized_instances_hit_target(self):
        rng = np.random.default_rng(41)
        op = build_filter(StructuredGrid(5, 4), 1.5)
        for _ in range(200):
            target = rng.uniform(0.05, 0.95) * 20
            weights = rng.uniform(0.0, 1.0, 20)
            if weights.max() == 0:
                weights[0] = 1.0
            result = distribute(target, weights, rng.choice([1.0, 2.0]), op, (0.0, 1.0))
            assert result.density.min() >= 0.0 and result.density.max() <= 1.0
            assert abs(target - result.density.sum()) <= 0.001 or result.remaining <= 0.001

    def test_remaining_strictly_decreases_without_saturation(self):
        # targets low enough that no element can clamp at the upper bound
        rng = np.random.default_rng(23)
        op = build_filter(StructuredGrid(4, 3), 1.5)
        for _ in range(50):
            weights = rng.uniform(0.5, 1.5, 12)
            oracle, _, passes = brute_force_distribution(0.3 * 12, weights, 1.0, (0.0, 1.0))
            assert passes == 1  # unclamped distribution lands exactly

    def test_unreachable_target_raises(self):
        op = identity_filter(4)
        with pytest.raises(UnreachableTargetError):
            distribute(5.0, np.ones(4), 1.0, op, (0.0, 1.0))
        with pytest.raises(UnreachableTargetError):
            distribute(-0.5, np.ones(4), 1.0, op, (0.0, 1.0))

    def test_zero_weights_falls_back_to_uniform(self):
        op = identity_filter(5)
        with pytest.warns(RuntimeWarning):
            result = distribute(2.5, np.zeros(5), 2.0, op, (0.0, 1.0))
        assert result.uniform_fallback
        assert result.density == pytest.approx(np.full(5, 0.5), abs=1e-12)

    def test_stagnation_cap_raises(self):
        op = identity_filter(2)
        with pytest.raises(StagnantInnerLoopError):
            distribute(1.5, np.array([1.0, 3.0]), 1.0, op, (0.0, 1.0),
                       inner_tolerance=1e-9, max_passes=3)

    def test_active_mask_pins_passive(self):
        grid = StructuredGrid(4, 1)
        op = build_filter(grid, 1.5)
        active = np.array([True, True, False, True])
        result = distribute(1.2, np.ones(4), 1.0, op, (0.0, 1.0), active_mask=active)
        assert result.density[2] == 0.0
        assert result.density[active].sum() == pytest.approx(1.2, abs=1e-3)

    def test_filtered_distribution_respects_bounds(self):
        grid = StructuredGrid(7, 5)
        op = build_filter(grid, 2.0)
        rng = np.random.default_rng(29)
        weights = rng.uniform(0, 1, grid.n_elements) ** 4
        result = distribute(0.8 * grid.n_elements, weights, 2.0, op, (0.1, 0.9))
        assert result.density.min() >= 0.1 - 1e-15
        assert result.density.max() <= 0.9 + 1e-15
