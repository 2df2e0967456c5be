import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slopekit.ekeland import ekeland_point, slope_perturbed_min, verify_ekeland
from slopekit.spaces import DomainError, FiniteMetricSpace, GridSpace, InputError

from conftest import random_euclidean_space


def test_three_point_example():
    # uniform distances 1, f = (0, 0.4, 1), start at index 2, lambda = 0.5
    D = np.ones((3, 3)) - np.eye(3)
    sp = FiniteMetricSpace(["a", "b", "c"], D)
    res = ekeland_point(sp, [0.0, 0.4, 1.0], 2, 0.5)
    assert res.index == 0
    assert res.decrease == pytest.approx(1.0)
    assert res.strict_min_verified


def test_parameter_validation():
    sp = GridSpace([[0.0], [1.0]])
    with pytest.raises(InputError):
        ekeland_point(sp, [0.0, 1.0], 0, 0.0)
    with pytest.raises(DomainError):
        ekeland_point(sp, [math.inf, math.inf], 0, 1.0)
    with pytest.raises(DomainError):
        ekeland_point(sp, [math.inf, 0.0], 0, 1.0)


def test_verify_flags_planted_violation():
    D = np.ones((3, 3)) - np.eye(3)
    sp = FiniteMetricSpace(["a", "b", "c"], D)
    values = [0.0, 0.4, 1.0]
    # the start itself is not an Ekeland point: both other points improve on it
    bad = verify_ekeland(sp, values, 2, 0.5, 2)
    assert ("strict_min", 0) in bad and ("strict_min", 1) in bad


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000), lam=st.floats(0.05, 5.0),
       start=st.integers(0, 1_000))
def test_random_spaces_pass_exhaustive_verification(seed, lam, start):
    rng = np.random.default_rng(seed)
    sp = random_euclidean_space(rng, n_max=30)
    values = rng.normal(size=sp.n) * rng.uniform(0.5, 3.0)
    # sprinkle a few +inf values but keep the start finite
    mask = rng.random(sp.n) < 0.15
    values[mask] = math.inf
    i0 = start % sp.n
    values[i0] = rng.normal()
    res = ekeland_point(sp, values, i0, lam)
    assert res.strict_min_verified
    assert verify_ekeland(sp, values, i0, lam, res.index) == []
    assert lam * sp.dist(res.index, i0) <= values[i0] - values[res.index] + 1e-12


def test_perturbed_min_controls_slope():
    # f = -x on a fine line, g = |x| + 2x^2; slope f at x_eps <= lip g + eps
    grid = GridSpace(np.linspace(-1.0, 1.0, 201)[:, None])
    x = grid.coords[:, 0]
    f = -x
    g = np.abs(x) + 2.0 * x ** 2

    def slope_fn(i):
        from slopekit.slope import discrete_slope
        return discrete_slope(grid, f, i, 0.1).value

    def lip_fn(i):
        from slopekit.slope import lip_estimate
        return lip_estimate(grid, g, grid.ball(i, 0.1)).value

    x_eps, report = slope_perturbed_min(grid, f, g, 0.25, slope_fn, lip_fn)
    assert report["near_min_ok"]
    assert report["ekeland_verified"]
    assert report["slope_ok"]


def test_perturbed_min_rejects_improper_input():
    grid = GridSpace([[0.0], [1.0]])
    with pytest.raises(DomainError):
        slope_perturbed_min(grid, [0.0, 0.0], [math.inf, 1.0], 0.5)
    with pytest.raises(DomainError):
        slope_perturbed_min(grid, [math.inf, math.inf], [0.0, 0.0], 0.5)
