"""Concrete convex sets housing subdifferentials, and the min-norm-point solver.

Every set is normalised to ``conv(vertices) (+) r*B`` -- a polytope thickened
by a Euclidean ball.  Singletons are one-vertex polytopes, norm balls have a
single vertex at the centre, and Minkowski sums fold together (vertex sums,
radius sums).  This keeps the min-norm computation exact: project the origin
on the polytope part, then shrink radially by r.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .spaces import InputError

MIN_NORM_TOL = 1e-9
_WOLFE_TOL = 1e-12
_EXACT_ENUM_MAX = 8  # vertex count up to which exact subset enumeration is used
_HULL_PRUNE_AT = 64


class EmptySubdifferentialError(ValueError):
    """Signals an empty subdifferential, as opposed to a numerical failure."""


def _dedupe_rows(V: np.ndarray) -> np.ndarray:
    order = np.lexsort(V.T[::-1])
    V = V[order]
    keep = np.ones(len(V), dtype=bool)
    keep[1:] = np.any(np.abs(np.diff(V, axis=0)) > 1e-14, axis=1)
    return V[keep]


def _prune_hull(V: np.ndarray) -> np.ndarray:
    """Drop vertices that are not extreme (cheap support-based filter)."""
    if len(V) <= _HULL_PRUNE_AT:
        return V
    d = V.shape[1]
    if d == 1:
        return np.array([[V[:, 0].min()], [V[:, 0].max()]])
    try:
        from scipy.spatial import ConvexHull

        hull = ConvexHull(V)
        return V[np.unique(hull.vertices)]
    except Exception:
        return V


@dataclass(frozen=True)
class ConvexSet:
    """conv(vertices) Minkowski-thickened by a Euclidean ball of radius r."""

    vertices: np.ndarray
    radius: float = 0.0
    kind: str = "polytope"

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if V.size == 0:
            raise InputError("vertex list must be nonempty")
        if self.radius < 0:
            raise InputError("ball radius must be nonnegative")
        object.__setattr__(self, "vertices", V)

    # -- constructors --------------------------------------------------
    @staticmethod
    def singleton(v) -> "ConvexSet":
        return ConvexSet(np.atleast_2d(np.asarray(v, dtype=float)), 0.0, "singleton")

    @staticmethod
    def polytope(V) -> "ConvexSet":
        V = _dedupe_rows(np.atleast_2d(np.asarray(V, dtype=float)))
        kind = "singleton" if len(V) == 1 else "polytope"
        return ConvexSet(V, 0.0, kind)

    @staticmethod
    def norm_ball(center, radius) -> "ConvexSet":
        return ConvexSet(np.atleast_2d(np.asarray(center, dtype=float)), float(radius), "ball")

    @staticmethod
    def interval(lo: float, hi: float) -> "ConvexSet":
        return ConvexSet.polytope([[float(lo)], [float(hi)]])

    def minkowski(self, other: "ConvexSet") -> "ConvexSet":
        if self.dim != other.dim:
            raise InputError("Minkowski sum of sets with different dimensions")
        V = self.vertices[:, None, :] + other.vertices[None, :, :]
        V = _prune_hull(_dedupe_rows(V.reshape(-1, self.dim)))
        r = self.radius + other.radius
        if len(V) == 1:
            kind = "ball" if r > 0 else "singleton"
        else:
            kind = "sum" if r > 0 else "polytope"
        return ConvexSet(V, r, kind)

    def scaled(self, alpha: float) -> "ConvexSet":
        if alpha < 0:
            raise InputError("sets are scaled by nonnegative factors only")
        return ConvexSet(self.vertices * alpha, self.radius * alpha, self.kind)

    def translated(self, v) -> "ConvexSet":
        return ConvexSet(self.vertices + np.asarray(v, dtype=float), self.radius, self.kind)

    # -- queries -------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def support(self, direction) -> float:
        """Support function sup{<d, p> : p in S}."""
        d = np.asarray(direction, dtype=float)
        return float(np.max(self.vertices @ d) + self.radius * np.linalg.norm(d))

    def support_point(self, direction) -> np.ndarray:
        """A point of S attaining the support in the given direction."""
        d = np.asarray(direction, dtype=float)
        v = self.vertices[int(np.argmax(self.vertices @ d))]
        nd = np.linalg.norm(d)
        if self.radius > 0 and nd > 0:
            v = v + self.radius * d / nd
        return v

    def min_norm_point(self) -> np.ndarray:
        p = _min_norm_polytope(self.vertices)
        if self.radius > 0:
            np_ = np.linalg.norm(p)
            p = np.zeros_like(p) if np_ <= self.radius else p * (1.0 - self.radius / np_)
        return p

    def contains(self, p, tol: float = MIN_NORM_TOL) -> bool:
        shifted = _min_norm_polytope(self.vertices - np.asarray(p, dtype=float))
        return bool(np.linalg.norm(shifted) <= self.radius + tol)

    def sample_points(self, rng: np.random.Generator, n_random: int = 8) -> np.ndarray:
        """Test points inside S: vertices, the min-norm point, extreme points of
        the ball layer along an axis fan, and seeded random boundary points."""
        pts = [v for v in self.vertices]
        pts.append(self.min_norm_point())
        d = self.dim
        dirs = []
        if self.radius > 0:
            eye = np.eye(d)
            dirs.extend(eye)
            dirs.extend(-eye)
        for _ in range(n_random):
            u = rng.normal(size=d)
            nu = np.linalg.norm(u)
            if nu == 0:
                continue
            dirs.append(u / nu)
        for u in dirs:
            pts.append(self.support_point(u))
        if len(self.vertices) > 1:
            for _ in range(n_random):
                w = rng.random(len(self.vertices))
                w /= w.sum()
                pts.append(w @ self.vertices)
        return _dedupe_rows(np.asarray(pts))


def min_norm_element(S: ConvexSet | None) -> np.ndarray:
    """Nearest point to the origin in S (tolerance 1e-9).

    ``None`` stands for an empty subdifferential and raises the dedicated
    signal rather than a generic numerical error.
    """
    if S is None:
        raise EmptySubdifferentialError("empty subdifferential has no min-norm element")
    return S.min_norm_point()


# -- polytope projection of the origin ---------------------------------


def _min_norm_polytope(V: np.ndarray) -> np.ndarray:
    V = np.atleast_2d(np.asarray(V, dtype=float))
    m, d = V.shape
    if m == 1:
        return V[0].copy()
    if d == 1:
        lo, hi = float(V.min()), float(V.max())
        return np.array([min(max(0.0, lo), hi)])
    if m <= _EXACT_ENUM_MAX:
        p = _min_norm_enumerate(V)
    else:
        p = _min_norm_wolfe(V)
    return p


def _affine_min_norm(V: np.ndarray):
    """Min-norm point of the affine hull of rows of V, with its coefficients."""
    m = V.shape[0]
    G = V @ V.T
    A = np.zeros((m + 1, m + 1))
    A[:m, :m] = G
    A[:m, m] = 1.0
    A[m, :m] = 1.0
    b = np.zeros(m + 1)
    b[m] = 1.0
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    lam = sol[:m]
    # guard against rank-deficient systems yielding a non-affine combination
    if abs(lam.sum() - 1.0) > 1e-8:
        return None, None
    return lam @ V, lam


def _min_norm_enumerate(V: np.ndarray) -> np.ndarray:
    m = V.shape[0]
    best, best_norm = None, math.inf
    for size in range(1, m + 1):
        for idx in itertools.combinations(range(m), size):
            sub = V[list(idx)]
            p, lam = _affine_min_norm(sub)
            if p is None or np.any(lam < -1e-10):
                continue
            nrm = np.linalg.norm(p)
            if nrm < best_norm - 1e-15:
                best, best_norm = p, nrm
    if best is None:  # cannot happen for a nonempty vertex list
        best = V[int(np.argmin(np.linalg.norm(V, axis=1)))]
    _assert_projection(V, best)
    return best


def _min_norm_wolfe(V: np.ndarray, max_iter: int = 10000) -> np.ndarray:
    """Wolfe's min-norm-point iteration over the convex hull of rows of V."""
    m, d = V.shape
    i0 = int(np.argmin(np.linalg.norm(V, axis=1)))
    corral = [i0]
    lam = np.array([1.0])
    x = V[i0].astype(float)
    for _ in range(max_iter):
        j = int(np.argmin(V @ x))
        if x @ x <= x @ V[j] + _WOLFE_TOL * (1.0 + x @ x):
            break
        if j not in corral:
            corral.append(j)
            lam = np.append(lam, 0.0)
        # minor cycle: project onto affine hull of corral, restore feasibility
        while True:
            sub = V[corral]
            y, mu = _affine_min_norm(sub)
            if y is None:
                # degenerate corral; drop the smallest-weight member
                k = int(np.argmin(lam))
                corral.pop(k)
                lam = np.delete(lam, k)
                lam /= lam.sum()
                continue
            if np.all(mu >= -1e-12):
                x, lam = y, np.maximum(mu, 0.0)
                lam /= lam.sum()
                break
            neg = mu < lam
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(neg, lam / (lam - mu), math.inf)
            theta = min(1.0, float(np.min(ratios)))
            lam = (1 - theta) * lam + theta * mu
            keep = lam > 1e-14
            if keep.all():
                keep[int(np.argmin(lam))] = False
            corral = [c for c, k in zip(corral, keep) if k]
            lam = lam[keep]
            s = lam.sum()
            lam = lam / s if s > 0 else np.full(len(corral), 1.0 / len(corral))
            x = lam @ V[corral]
    _assert_projection(V, x)
    return x


def _assert_projection(V: np.ndarray, p: np.ndarray) -> None:
    """Variational characterisation <p, v - p> >= 0 for every vertex v."""
    slack = V @ p - p @ p
    worst = float(slack.min())
    scale = 1.0 + float(np.max(np.abs(V)))
    if worst < -MIN_NORM_TOL * scale:
        raise ArithmeticError(f"min-norm solver failed optimality check: slack {worst}")
