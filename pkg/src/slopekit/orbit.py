"""Multivalued maps and descent orbits on finite spaces.

The orbit selection rule follows the long-orbit construction: among the
members of S(x) take one whose distance from x beats min{1, nu/2} with
nu the attained sup of distances.  On a finite space the argmax itself is
such a point, and breaking ties by lowest index makes orbits reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .spaces import PreconditionError


@dataclass(frozen=True)
class MultiMap:
    rule: Callable[[int], np.ndarray]  # index -> sorted array of member indices
    diagnostics: Callable[[int], dict] | None = None
    name: str = "multimap"

    def __call__(self, i: int) -> np.ndarray:
        return np.asarray(self.rule(i), dtype=int)


@dataclass(frozen=True)
class Orbit:
    points: list
    steps: list
    termination: str  # empty_set | max_iter
    diagnostics: list = dc_field(default_factory=list)

    @property
    def length(self) -> float:
        return float(sum(self.steps))

    @property
    def start(self) -> int:
        return self.points[0]

    @property
    def end(self) -> int:
        return self.points[-1]


def check_star_property(space, mm: MultiMap) -> dict:
    """Exhaustive irreflexivity check: x not in S(x) for every x.

    The second clause of the property (persistence along convergent infinite
    orbits) is vacuous on a finite space: steps are bounded below by the
    minimum positive distance, so any infinite orbit has infinite length.
    """
    witnesses = []
    for i in range(space.n):
        members = mm(i)
        if np.any(members == i):
            witnesses.append(i)
    return {
        "irreflexive": not witnesses,
        "witnesses": [space.label(i) for i in witnesses],
        "infinite_orbit_clause": "vacuous on a finite space",
    }


def run_orbit(space, mm: MultiMap, i0: int, max_iter: int | None = None) -> Orbit:
    """Iterate x_{n+1} = argmax{d(y, x_n) : y in S(x_n)} until S is empty.

    The argmax attains the sup nu_n, hence strictly beats min{1, nu_n/2};
    ties go to the lowest index.  Exhausting max_iter is flagged in the
    termination reason, not raised.
    """
    if max_iter is None:
        max_iter = 10 * space.n
    points = [i0]
    steps = []
    diags = []
    current = i0
    termination = "max_iter"
    for _ in range(max_iter):
        members = mm(current)
        if mm.diagnostics is not None:
            diags.append(mm.diagnostics(current))
        if members.size == 0:
            termination = "empty_set"
            break
        d = space.dist_from(current)[members]
        nxt = int(members[np.argmax(d)])
        steps.append(float(space.dist_from(current)[nxt]))
        points.append(nxt)
        current = nxt
    else:
        members = mm(current)
        if members.size == 0:
            termination = "empty_set"
    return Orbit(points=points, steps=steps, termination=termination, diagnostics=diags)


def verify_orbit(space, mm: MultiMap, orbit: Orbit) -> list:
    """Post-hoc consecutive-membership check; returns offending step indices."""
    bad = []
    for k in range(len(orbit.points) - 1):
        if orbit.points[k + 1] not in set(int(v) for v in mm(orbit.points[k])):
            bad.append(k)
    return bad


def build_determination_map(space, f_values, g_values, slope_f, slope_g,
                            eps: float, c: float, i_bar: int) -> MultiMap:
    """The descent map S = S1 /\\ S2 /\\ S3 driving the determination argument.

    S1 strictly decreases f - g, S2 forces an eps-sharp decrease of f per unit
    step, S3 caps the slope growth.  Requires the sharp-minimum gap: the slope
    of f exceeds eps away from the distinguished point.
    """
    f_values = np.asarray(f_values, dtype=float)
    g_values = np.asarray(g_values, dtype=float)
    slope_f = np.asarray(slope_f, dtype=float)
    slope_g = None if slope_g is None else np.asarray(slope_g, dtype=float)
    dom = np.isfinite(slope_f) & np.isfinite(f_values) & np.isfinite(g_values)
    gap_bad = np.flatnonzero(dom & (slope_f <= eps))
    gap_bad = gap_bad[gap_bad != i_bar]
    if gap_bad.size:
        w = int(gap_bad[0])
        raise PreconditionError(
            f"sharp-minimum gap violated at {space.label(w)}: slope {slope_f[w]} <= {eps}"
        )
    fg = f_values - g_values

    def components(i: int):
        if i == i_bar or not dom[i]:
            empty = np.zeros(space.n, dtype=bool)
            return empty, empty, empty
        d = space.dist_from(i)
        s1 = dom & (fg < fg[i])
        s2 = dom & (f_values < f_values[i] - eps * d)
        s3 = dom & (slope_f < slope_f[i] + 2.0 * c * (2.0 + slope_f[i]) * d)
        return s1, s2, s3

    def rule(i: int) -> np.ndarray:
        s1, s2, s3 = components(i)
        return np.flatnonzero(s1 & s2 & s3)

    def diagnostics(i: int) -> dict:
        s1, s2, s3 = components(i)
        joint = s1 & s2 & s3
        return {
            "point": space.label(i),
            "s1": int(s1.sum()),
            "s2": int(s2.sum()),
            "s3": int(s3.sum()),
            "joint": int(joint.sum()),
        }

    return MultiMap(rule=rule, diagnostics=diagnostics, name="determination")


def orbit_length_bound(orbit: Orbit, f_values, eps: float, tol: float = 1e-9) -> dict:
    """Check the telescoped length bound |orbit| <= f(x0)/eps for S2-orbits.

    Also re-checks the per-step sharp decrease, so a planted orbit violating
    the S2 inequality is flagged at the offending step.
    """
    f_values = np.asarray(f_values, dtype=float)
    bad_steps = []
    for k in range(len(orbit.points) - 1):
        i, j = orbit.points[k], orbit.points[k + 1]
        if not f_values[j] < f_values[i] - eps * orbit.steps[k] + tol:
            bad_steps.append(k)
    bound = float(f_values[orbit.start]) / eps
    return {
        "length": orbit.length,
        "bound": bound,
        "within_bound": bool(orbit.length <= bound + tol),
        "insufficient_decrease_steps": bad_steps,
        "telescoped_decrease": float(f_values[orbit.start] - f_values[orbit.end]),
    }
