"""Local slopes and Lipschitz moduli.

On finite spaces every point is isolated, so the limsup defining the local
slope degenerates to zero; the working quantity is the fixed-resolution
discrete slope: the best descent quotient over a punctured ball.  On grids
the pair (eps, h) plays the role of the vanishing neighbourhood; refinement
sweeps fix eps = 4h so a single knob drives both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spaces import DomainError, PreconditionError, ball

SLOPE_CAP = 1e12  # quotients beyond this are flagged as divergent, not capped


@dataclass(frozen=True)
class SlopeEstimate:
    value: float
    resolution: float | str  # "exact" on finite spaces, else the eps used
    witness: int | None = None  # index of the point achieving the sup

    @property
    def divergent(self) -> bool:
        return math.isinf(self.value)


@dataclass(frozen=True)
class LipEstimate:
    value: float
    region: str
    degenerate: bool = False  # fewer than two points in the region


def local_slope_finite(space, values, i: int) -> SlopeEstimate:
    """Exact local slope on a finite space.

    Every point of a finite space is isolated, so the infimum over shrinking
    punctured balls is attained on the empty set and the slope is zero.
    """
    values = np.asarray(values, dtype=float)
    if not np.isfinite(values[i]):
        raise DomainError(f"slope undefined at {space.label(i)}: value is not finite")
    return SlopeEstimate(0.0, "exact", None)


def discrete_slope(space, values, i: int, eps: float) -> SlopeEstimate:
    """max over y in B(x, eps)\\{x} with f(y) finite of [f(x) - f(y)]^+ / d(x, y)."""
    if eps <= 0:
        raise DomainError("discrete slope needs eps > 0")
    values = np.asarray(values, dtype=float)
    if not np.isfinite(values[i]):
        raise DomainError(f"slope undefined at {space.label(i)}: value is not finite")
    idx = ball(space, i, eps)
    d = space.dist_from(i)[idx]
    mask = (idx != i) & np.isfinite(values[idx])
    idx, d = idx[mask], d[mask]
    if idx.size == 0:
        return SlopeEstimate(0.0, eps, None)
    quot = np.maximum(0.0, values[i] - values[idx]) / d
    # idx is ascending, so the first maximum is the lowest-index witness
    j = int(np.argmax(quot))
    value = float(quot[j])
    if value > SLOPE_CAP:
        return SlopeEstimate(math.inf, eps, int(idx[j]))
    return SlopeEstimate(value, eps, int(idx[j]) if value > 0 else None)


def _lattice_offsets(dim: int, eps: float, h: float) -> np.ndarray:
    k = int(math.floor(eps / h + 1e-12))
    axis = np.arange(-k, k + 1) * h
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    offs = np.stack([m.ravel() for m in mesh], axis=1)
    r = np.linalg.norm(offs, axis=1)
    return offs[(r > 0) & (r <= eps + 1e-12)]


def grid_slope_sweep(field, centers, eps: float, h: float) -> np.ndarray:
    """Discrete slope of an analytic field at many centers on the h-lattice.

    Vectorised over both centers and punctured-ball neighbours; the lattice is
    not clipped, so centers should stay clear of any intended boundary.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    offs = _lattice_offsets(centers.shape[1], eps, h)
    d = np.linalg.norm(offs, axis=1)
    fx = field.value(centers)
    fy = field.value(centers[:, None, :] + offs[None, :, :])
    quot = np.maximum(0.0, fx[:, None] - fy) / d[None, :]
    return quot.max(axis=1)


def lip_estimate(space, values, region_indices) -> LipEstimate:
    """Exact max of pairwise difference quotients over the given region."""
    idx = np.asarray(region_indices, dtype=int)
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values[idx])):
        raise DomainError("lip estimate needs finite values on the region")
    if idx.size < 2:
        return LipEstimate(0.0, f"{idx.size} point(s)", degenerate=True)
    best = 0.0
    for a, i in enumerate(idx[:-1]):
        rest = idx[a + 1:]
        d = space.dist_from(i)[rest]
        q = np.abs(values[rest] - values[i]) / d
        best = max(best, float(q.max()))
    return LipEstimate(best, f"{idx.size} points")


def check_slope_lip_at_min(space, f_values, g_values, i0: int, eps: float,
                           slack: float = 1e-9) -> dict:
    """Check |slope f|(x0) <= lip g(x0) at a verified local minimum of f + g.

    The minimum is verified on the eps-ball; slope and lip are both taken as
    the best value over a family of shrinking radii, mirroring the infimum in
    their definitions.
    """
    f_values = np.asarray(f_values, dtype=float)
    g_values = np.asarray(g_values, dtype=float)
    total = f_values + g_values
    nb = ball(space, i0, eps)
    worse = nb[total[nb] < total[i0] - 1e-12]
    if worse.size:
        w = int(worse[np.argmin(total[worse])])
        raise PreconditionError(
            f"{space.label(i0)} is not a local minimum of f+g: "
            f"f+g({space.label(w)}) = {total[w]} < {total[i0]}"
        )
    radii = [eps, eps / 2.0, eps / 4.0]
    slopes, lips = [], []
    for r in radii:
        slopes.append(discrete_slope(space, f_values, i0, r).value)
        region = ball(space, i0, r)
        lips.append(lip_estimate(space, g_values, region).value)
    slope_val = min(slopes)
    lip_val = min(lips)
    return {
        "slope": slope_val,
        "lip": lip_val,
        "radii": radii,
        "slack": slack,
        "ok": slope_val <= lip_val + slack,
    }
