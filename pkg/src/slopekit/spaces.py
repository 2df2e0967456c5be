"""Ambient spaces: exact finite metric spaces and grid samples of Euclidean balls.

Both space kinds expose the same minimal protocol used by the descent
machinery: ``n``, ``label(i)``, ``dist_from(i)`` and ``ball(i, r)``.
Finite spaces carry an explicit distance matrix; grid spaces store point
coordinates and compute Euclidean distances on demand (a full matrix for a
fine grid would not fit in memory).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

TRIANGLE_TOL = 1e-12

INF = math.inf


class InputError(ValueError):
    """Bad user-supplied data (unknown point, malformed file, bad parameter)."""


class DomainError(ValueError):
    """Operation requested at a point outside the function's domain."""


class PreconditionError(ValueError):
    """A stated precondition fails; the message carries a witness."""


class FiniteMetricSpace:
    """Explicit point list plus a symmetric distance matrix.

    The matrix is validated at construction: zero diagonal, symmetry,
    positivity off the diagonal and the triangle inequality (within
    ``TRIANGLE_TOL``).
    """

    def __init__(self, labels, dist):
        dist = np.asarray(dist, dtype=float)
        n = len(labels)
        if len(set(map(str, labels))) != n:
            raise InputError("point labels must be unique")
        if dist.shape != (n, n):
            raise InputError(f"distance matrix must be {n}x{n}, got {dist.shape}")
        if not np.all(np.isfinite(dist)):
            raise InputError("distance matrix must be finite")
        if np.any(np.abs(np.diagonal(dist)) > 0):
            raise InputError("distance matrix must have zero diagonal")
        if np.any(np.abs(dist - dist.T) > TRIANGLE_TOL):
            raise InputError("distance matrix must be symmetric")
        off = dist + np.eye(n)
        if np.any(off <= 0):
            i, j = np.argwhere(off <= 0)[0]
            raise InputError(f"distance between distinct points {labels[i]}, {labels[j]} must be positive")
        # d[i,k] <= d[i,j] + d[j,k]: check via per-j broadcast to avoid n^3 memory
        for j in range(n):
            slack = dist[:, None, j] + dist[None, j, :] - dist
            if np.any(slack < -TRIANGLE_TOL):
                i, k = np.argwhere(slack < -TRIANGLE_TOL)[0]
                raise InputError(
                    f"triangle inequality violated: d({labels[i]},{labels[k]}) > "
                    f"d({labels[i]},{labels[j]}) + d({labels[j]},{labels[k]})"
                )
        self.labels = [str(x) for x in labels]
        self.D = dist
        self._index = {lab: i for i, lab in enumerate(self.labels)}

    @property
    def n(self) -> int:
        return len(self.labels)

    def label(self, i: int) -> str:
        return self.labels[i]

    def index_of(self, label) -> int:
        key = str(label)
        if key not in self._index:
            raise InputError(f"unknown point id {label!r}")
        return self._index[key]

    def dist(self, i: int, j: int) -> float:
        return float(self.D[i, j])

    def dist_from(self, i: int) -> np.ndarray:
        return self.D[i]

    def ball(self, i: int, r: float, open_: bool = False) -> np.ndarray:
        """Indices of the closed (or open) ball around point ``i``."""
        if r < 0:
            raise InputError("ball radius must be nonnegative")
        d = self.D[i]
        mask = d < r if open_ else d <= r + TRIANGLE_TOL
        return np.flatnonzero(mask)

    def min_positive_distance(self) -> float:
        off = self.D.copy()
        np.fill_diagonal(off, INF)
        return float(off.min())

    def restrict(self, indices) -> "FiniteMetricSpace":
        indices = np.asarray(indices, dtype=int)
        sub = FiniteMetricSpace.__new__(FiniteMetricSpace)
        sub.labels = [self.labels[i] for i in indices]
        sub.D = self.D[np.ix_(indices, indices)]
        sub._index = {lab: i for i, lab in enumerate(sub.labels)}
        return sub


class GridSpace:
    """A finite set of points in R^dim with the Euclidean metric."""

    def __init__(self, coords):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        if coords.ndim != 2 or coords.shape[0] == 0:
            raise InputError("grid space needs a nonempty (n, dim) coordinate array")
        self.coords = coords

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def label(self, i: int) -> str:
        return "(" + ",".join(repr(float(v)) for v in self.coords[i]) + ")"

    def point(self, i: int) -> np.ndarray:
        return self.coords[i]

    def dist(self, i: int, j: int) -> float:
        return float(np.linalg.norm(self.coords[i] - self.coords[j]))

    def dist_from(self, i: int) -> np.ndarray:
        return np.linalg.norm(self.coords - self.coords[i], axis=1)

    def ball(self, i: int, r: float, open_: bool = False) -> np.ndarray:
        if r < 0:
            raise InputError("ball radius must be nonnegative")
        d = self.dist_from(i)
        mask = d < r if open_ else d <= r + TRIANGLE_TOL
        return np.flatnonzero(mask)

    def nearest(self, x) -> int:
        x = np.asarray(x, dtype=float)
        return int(np.argmin(np.linalg.norm(self.coords - x, axis=1)))

    def restrict(self, indices) -> "GridSpace":
        return GridSpace(self.coords[np.asarray(indices, dtype=int)])

    def as_finite_space(self) -> FiniteMetricSpace:
        D = np.linalg.norm(self.coords[:, None, :] - self.coords[None, :, :], axis=2)
        labels = [self.label(i) for i in range(self.n)]
        return FiniteMetricSpace(labels, D)


@dataclass(frozen=True)
class EuclideanGrid:
    """Axis-aligned lattice of spacing ``h`` clipped to the ball B(center; radius)."""

    dim: int
    center: tuple
    radius: float
    h: float
    open_ball: bool = False

    def __post_init__(self):
        if not 1 <= self.dim <= 4:
            raise InputError("grid dimension must be between 1 and 4")
        if len(self.center) != self.dim:
            raise InputError("grid center has wrong dimension")
        if self.radius <= 0:
            raise InputError("grid radius must be positive")
        if not 0 < self.h <= self.radius:
            raise InputError("grid spacing must satisfy 0 < h <= radius")

    def points(self) -> np.ndarray:
        k = int(math.floor(self.radius / self.h + TRIANGLE_TOL))
        axis = np.arange(-k, k + 1) * self.h
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1) + np.asarray(self.center)
        r = np.linalg.norm(pts - np.asarray(self.center), axis=1)
        keep = r < self.radius if self.open_ball else r <= self.radius + TRIANGLE_TOL
        return pts[keep]

    def space(self) -> GridSpace:
        return GridSpace(self.points())


def ball(space, i: int, r: float, open_: bool = False) -> np.ndarray:
    """Indices of points within distance r of point i (open variant excludes d = r)."""
    return space.ball(i, r, open_=open_)


def is_proper(values) -> bool:
    values = np.asarray(values, dtype=float)
    return bool(np.any(np.isfinite(values)))


def sublevel_restrict(space, values, i0: int):
    """Restrict ``space`` and ``values`` to the sublevel set {x : f(x) <= f(x0)}.

    Returns ``(subspace, subvalues, indices)`` where ``indices`` maps the
    subspace points back into the parent space.
    """
    values = np.asarray(values, dtype=float)
    if not np.isfinite(values[i0]):
        raise InputError("sublevel center must have a finite value")
    indices = np.flatnonzero(values <= values[i0])
    return space.restrict(indices), values[indices], indices


_SPACE_KEYS = {"points", "dist", "fields"}
_GRID_KEYS = {"dim", "center", "radius", "h"}


def _reject_unknown(obj: dict, allowed: set, what: str) -> None:
    extra = set(obj) - allowed
    if extra:
        raise InputError(f"unknown keys in {what}: {sorted(extra)}")


def _parse_values(raw):
    out = []
    for v in raw:
        if v in ("inf", "+inf", "Infinity"):
            out.append(INF)
        else:
            out.append(float(v))
    return np.asarray(out, dtype=float)


def space_from_dict(doc: dict):
    """Build a space from a parsed JSON document (strict: unknown keys rejected).

    Returns ``(space, fields)`` where ``fields`` maps names to value arrays
    (finite spaces only; empty for grids).
    """
    if not isinstance(doc, dict):
        raise InputError("space document must be a JSON object")
    if "grid" in doc:
        _reject_unknown(doc, {"grid"}, "space file")
        grid = doc["grid"]
        _reject_unknown(grid, _GRID_KEYS, "grid spec")
        missing = _GRID_KEYS - set(grid)
        if missing:
            raise InputError(f"grid spec missing keys: {sorted(missing)}")
        g = EuclideanGrid(
            dim=int(grid["dim"]),
            center=tuple(float(c) for c in grid["center"]),
            radius=float(grid["radius"]),
            h=float(grid["h"]),
        )
        return g.space(), {}
    _reject_unknown(doc, _SPACE_KEYS, "space file")
    if "points" not in doc or "dist" not in doc:
        raise InputError("space file needs 'points' and 'dist' (or 'grid')")
    labels = doc["points"]
    n = len(labels)
    dist = doc["dist"]
    flat = np.asarray(dist, dtype=float)
    if flat.ndim == 1:  # row-major flattened matrix
        if flat.size != n * n:
            raise InputError("flat 'dist' must have n*n entries")
        flat = flat.reshape(n, n)
    space = FiniteMetricSpace(labels, flat)
    fields = {}
    for name, raw in doc.get("fields", {}).items():
        vals = _parse_values(raw)
        if vals.size != n:
            raise InputError(f"field {name!r} must have one value per point")
        if not is_proper(vals):
            raise InputError(f"field {name!r} is improper (no finite value)")
        fields[str(name)] = vals
    return space, fields


def load_space(path: str):
    with open(path) as fh:
        doc = json.load(fh)
    return space_from_dict(doc)
