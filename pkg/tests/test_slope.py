import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slopekit.fields import Quadratic, default_catalog
from slopekit.slope import (check_slope_lip_at_min, discrete_slope,
                            grid_slope_sweep, lip_estimate, local_slope_finite)
from slopekit.spaces import DomainError, EuclideanGrid, GridSpace, PreconditionError

from conftest import random_euclidean_space


def brute_discrete_slope(space, values, i, eps):
    """Independent oracle: plain double loop over the punctured ball."""
    best = 0.0
    for j in range(space.n):
        if j == i or not np.isfinite(values[j]):
            continue
        d = space.dist(i, j)
        if d <= eps + 1e-12:
            best = max(best, max(0.0, values[i] - values[j]) / d)
    return best


def test_exact_slope_is_zero_on_finite_spaces(line_space):
    values = line_space.coords[:, 0] ** 2
    est = local_slope_finite(line_space, values, 3)
    assert est.value == 0.0 and est.resolution == "exact"


def test_discrete_slope_square_example():
    # f = x^2 on the quarter-step line, slope at x = 1 with eps = 0.5
    grid = EuclideanGrid(dim=1, center=(0.0,), radius=2.0, h=0.25).space()
    values = grid.coords[:, 0] ** 2
    i = grid.nearest([1.0])
    est = discrete_slope(grid, values, i, 0.5)
    assert est.value == pytest.approx(1.75)
    assert np.allclose(grid.coords[est.witness], [0.75])


def test_discrete_slope_witness_is_lowest_index():
    # two neighbours achieve the same quotient; the earlier index wins
    grid = GridSpace([[-1.0], [0.0], [1.0]])
    values = np.array([0.0, 1.0, 0.0])
    est = discrete_slope(grid, values, 1, 1.0)
    assert est.value == 1.0 and est.witness == 0


def test_discrete_slope_respects_domain():
    grid = GridSpace([[0.0], [1.0]])
    with pytest.raises(DomainError):
        discrete_slope(grid, [math.inf, 0.0], 0, 1.0)
    # infinite neighbours are skipped, not descended to
    est = discrete_slope(grid, [0.0, math.inf], 0, 1.0)
    assert est.value == 0.0


def test_slope_cap_flags_divergence():
    grid = GridSpace([[0.0], [1e-30]])
    values = np.array([1.0, 0.0])
    est = discrete_slope(grid, values, 0, 1.0)
    assert math.isinf(est.value) and est.witness == 1


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), eps=st.floats(0.1, 10.0))
def test_discrete_slope_matches_brute_force(seed, eps):
    rng = np.random.default_rng(seed)
    sp = random_euclidean_space(rng, n_max=25)
    values = rng.normal(size=sp.n)
    for i in range(0, sp.n, 5):
        est = discrete_slope(sp, values, i, eps)
        assert est.value == pytest.approx(brute_discrete_slope(sp, values, i, eps))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), lam=st.floats(0.1, 5.0))
def test_slope_positive_homogeneity(seed, lam):
    rng = np.random.default_rng(seed)
    sp = random_euclidean_space(rng, n_max=20)
    values = rng.normal(size=sp.n)
    a = discrete_slope(sp, values, 0, 1.0).value
    b = discrete_slope(sp, lam * values, 0, 1.0).value
    assert b == pytest.approx(lam * a, rel=1e-12, abs=1e-12)


def test_grid_sweep_tracks_gradient_norm():
    field = Quadratic(2, a=1.0)  # f = ||x||^2 / 2, |grad| = ||x||
    centers = np.array([[0.3, 0.4], [0.1, -0.2], [0.5, 0.0]])
    h = 1e-2
    got = grid_slope_sweep(field, centers, 4 * h, h)
    want = np.linalg.norm(centers, axis=1)
    assert np.all(np.abs(got - want) <= 5 * (4 * h + h) * (1 + 1.0))


def test_lip_estimate_exact():
    sp = GridSpace([[0.0], [1.0], [3.0]])
    est = lip_estimate(sp, [0.0, 2.0, 2.5], [0, 1, 2])
    assert est.value == pytest.approx(2.0)
    assert lip_estimate(sp, [0.0, 2.0, 2.5], [1]).degenerate


def test_slope_lip_inequality_at_min():
    # f = 2|x| + x^2, g = -2x: x = 0 minimises f + g, slope f <= lip g there
    grid = EuclideanGrid(dim=1, center=(0.0,), radius=1.0, h=0.125).space()
    x = grid.coords[:, 0]
    f = 2.0 * np.abs(x) + x ** 2
    g = -2.0 * x
    report = check_slope_lip_at_min(grid, f, g, grid.nearest([0.0]), 0.5)
    assert report["ok"]
    assert report["slope"] <= report["lip"] + 1e-9


def test_slope_lip_check_rejects_non_minimum():
    grid = EuclideanGrid(dim=1, center=(0.0,), radius=1.0, h=0.25).space()
    x = grid.coords[:, 0]
    with pytest.raises(PreconditionError):
        check_slope_lip_at_min(grid, x, np.zeros_like(x), grid.nearest([0.0]), 0.5)


def test_catalog_slopes_match_min_norm_at_smooth_points(rng):
    from slopekit.subdiff import oracle_for, slope_from_subdifferential
    h = 1e-2
    eps = 4 * h
    for entry in default_catalog().values():
        if entry.dim > 2:
            continue
        oracle = oracle_for(entry)
        centers = rng.uniform(-0.4, 0.4, size=(8, entry.dim))
        got = grid_slope_sweep(entry.field, centers, eps, h)
        curv = entry.field.curvature_bound(np.zeros(entry.dim), 1.0)
        tol = 5 * (eps + h) * (1 + curv)
        for x, s in zip(centers, got):
            want = slope_from_subdifferential(oracle, x)
            assert abs(s - want) <= 10 * tol, (entry.id, x, s, want)
