import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from slopekit.convexsets import (ConvexSet, EmptySubdifferentialError,
                                 min_norm_element)


def brute_min_norm(vertices, radius=0.0, n=200_001):
    """Independent oracle: dense convex-combination search (1-2 vertices exact,
    otherwise refined random search), then radial shrink by the ball radius."""
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    if V.shape[0] == 1:
        best = V[0]
    elif V.shape[0] == 2:
        t = np.linspace(0.0, 1.0, n)[:, None]
        pts = (1 - t) * V[0] + t * V[1]
        best = pts[np.argmin(np.linalg.norm(pts, axis=1))]
    else:
        from scipy.optimize import minimize
        rng = np.random.default_rng(7)
        w = rng.dirichlet(np.ones(V.shape[0]), size=2000)
        pts = w @ V
        w0 = w[np.argmin(np.linalg.norm(pts, axis=1))]
        res = minimize(lambda u: float(np.sum((u @ V) ** 2)), w0, method="SLSQP",
                       bounds=[(0.0, 1.0)] * V.shape[0],
                       constraints=[{"type": "eq", "fun": lambda u: u.sum() - 1.0}],
                       options={"ftol": 1e-14, "maxiter": 300})
        best = (res.x if res.success else w0) @ V
    nb = np.linalg.norm(best)
    if nb <= radius:
        return np.zeros(V.shape[1])
    return best * (1.0 - radius / nb)


def test_segment_min_norm_exact():
    S = ConvexSet.polytope([[-1.0, 1.0], [1.0, 1.0]])
    assert np.allclose(S.min_norm_point(), [0.0, 1.0])


def test_ball_min_norm_exact():
    S = ConvexSet.norm_ball([3.0, 4.0], 1.0)
    assert np.allclose(S.min_norm_point(), [2.4, 3.2])


def test_interval_containing_zero():
    S = ConvexSet.interval(0.0, 1.0)
    assert np.allclose(S.min_norm_point(), [0.0])


def test_minkowski_folds_vertices_and_radius():
    seg = ConvexSet.polytope([[0.0], [1.0]])
    ball = ConvexSet.norm_ball([1.0], 0.5)
    S = seg.minkowski(ball)
    assert S.radius == 0.5
    lo = min(float(v[0]) for v in S.vertices)
    hi = max(float(v[0]) for v in S.vertices)
    assert (lo, hi) == (1.0, 2.0)
    assert S.support(np.array([1.0])) == pytest.approx(2.5)


def test_min_norm_element_raises_on_empty():
    with pytest.raises(EmptySubdifferentialError):
        min_norm_element(None)


@settings(max_examples=80, deadline=None)
@given(V=arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 3)),
                elements=st.floats(-3, 3, allow_nan=False, width=32)),
       r=st.floats(0, 1.5))
def test_min_norm_matches_brute_force(V, r):
    S = ConvexSet.polytope(V).minkowski(ConvexSet.norm_ball(np.zeros(V.shape[1]), r))
    got = np.linalg.norm(S.min_norm_point())
    want = np.linalg.norm(brute_min_norm(V, r))
    # brute force is approximate from above; the exact value cannot exceed it
    assert got <= want + 1e-6
    assert got >= want - 1e-4 * (1.0 + want)


@settings(max_examples=40, deadline=None)
@given(V=arrays(float, st.tuples(st.integers(1, 5), st.integers(1, 3)),
                elements=st.floats(-3, 3, allow_nan=False, width=32)),
       seed=st.integers(0, 100))
def test_min_norm_point_is_member_and_optimal(V, seed):
    S = ConvexSet.polytope(V)
    p = S.min_norm_point()
    assert S.contains(p, tol=1e-7)
    # variational inequality: <p, v - p> >= 0 for every vertex
    for v in S.vertices:
        assert float(np.dot(p, np.asarray(v) - p)) >= -1e-7


def test_support_function_is_sublinear():
    S = ConvexSet.polytope([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])
    h1, h2 = np.array([1.0, 2.0]), np.array([-0.5, 0.3])
    assert S.support(h1 + h2) <= S.support(h1) + S.support(h2) + 1e-12
    assert S.support(2.0 * h1) == pytest.approx(2.0 * S.support(h1))


def test_scaled_and_translated():
    S = ConvexSet.interval(1.0, 2.0)
    assert np.allclose(S.scaled(2.0).min_norm_point(), [2.0])
    assert np.allclose(S.translated([-3.0]).min_norm_point(), [-1.0])


def test_many_vertex_min_norm():
    rng = np.random.default_rng(3)
    # 40 points on a shifted circle: exact answer is radius of closest point
    theta = rng.uniform(0, 2 * np.pi, size=40)
    V = np.stack([np.cos(theta) + 2.0, np.sin(theta)], axis=1)
    S = ConvexSet.polytope(V)
    p = S.min_norm_point()
    # nearest point of the disc hull boundary to the origin
    want = min(np.linalg.norm(V, axis=1).min(), 1.0)
    assert np.linalg.norm(p) <= np.linalg.norm(V, axis=1).min() + 1e-9
    assert np.linalg.norm(p) >= want - 5e-2
