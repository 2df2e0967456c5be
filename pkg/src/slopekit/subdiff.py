"""Subdifferential oracles, the slope characterisation, and directional probes.

The slope of an F-regular function equals the norm of the least-norm
subgradient, which makes the analytic oracle the reference slope source for
grid experiments.  The only numerical estimation done here is of directional
derivatives of Lipschitz fields (Clarke's reduced formula); set recovery is
ill-posed and never attempted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .convexsets import ConvexSet, EmptySubdifferentialError, min_norm_element
from .fields import CatalogEntry, Field
from .spaces import InputError

__all__ = [
    "SubdifferentialOracle",
    "min_norm_element",
    "EmptySubdifferentialError",
    "oracle_for",
    "slope_from_subdifferential",
    "sum_oracle",
    "clarke_slope_probe",
]


@dataclass(frozen=True)
class SubdifferentialOracle:
    rule: Callable[[np.ndarray], ConvexSet | None]
    provenance: str
    dim: int

    def __call__(self, x) -> ConvexSet | None:
        return self.rule(np.asarray(x, dtype=float))


def oracle_for(entry: CatalogEntry | Field, provenance: str | None = None) -> SubdifferentialOracle:
    if isinstance(entry, CatalogEntry):
        return SubdifferentialOracle(entry.field.subdiff, provenance or entry.id, entry.dim)
    return SubdifferentialOracle(entry.subdiff, provenance or type(entry).__name__, entry.dim)


def slope_from_subdifferential(oracle: SubdifferentialOracle, x) -> float:
    """|slope f|(x) = min{||p|| : p in subdiff f(x)}; +inf when the set is empty."""
    S = oracle(x)
    if S is None:
        return math.inf
    return float(np.linalg.norm(S.min_norm_point()))


def sum_oracle(f_oracle: SubdifferentialOracle, h_oracle: SubdifferentialOracle,
               h_entry: CatalogEntry | None = None) -> SubdifferentialOracle:
    """Pointwise Minkowski sum of two oracles (sum rule for F-regular + Lipschitz)."""
    if f_oracle.dim != h_oracle.dim:
        raise InputError("sum oracle needs oracles of equal dimension")
    if h_entry is not None and not (h_entry.lipschitz_flag and h_entry.f_regular_flag):
        raise InputError("sum rule requires the added entry to be Lipschitz and F-regular")

    def rule(x):
        a = f_oracle(x)
        if a is None:
            return None
        b = h_oracle(x)
        if b is None:
            return None
        return a.minkowski(b)

    return SubdifferentialOracle(rule, f"{f_oracle.provenance}+{h_oracle.provenance}", f_oracle.dim)


def clarke_slope_probe(field_entry: CatalogEntry, x, directions, t_min: float = 1e-6,
                       n_base: int = 24, seed: int = 0) -> dict:
    """Sampled estimate of the Clarke directional derivative over a direction fan.

    For each direction h the quotient (f(y + t*h) - f(y)) / t is maximised
    over base points y near x and steps t decreasing to t_min; the analytic
    oracle's support function must dominate the estimate up to slack.
    """
    if not field_entry.lipschitz_flag:
        return {"supported": False, "reason": "entry is not flagged locally Lipschitz"}
    f = field_entry.field
    x = np.asarray(x, dtype=float)
    S = f.subdiff(x)
    rng = np.random.default_rng(seed)
    rho = np.geomspace(t_min, 1e-2, 8)
    ts = np.geomspace(t_min, 1e-2, 10)
    # base points: x itself plus shells of seeded offsets at each radius
    offsets = [np.zeros(f.dim)]
    for r in rho:
        for _ in range(n_base // 8):
            u = rng.normal(size=f.dim)
            u /= np.linalg.norm(u)
            offsets.append(r * u)
        for k in range(f.dim):
            e = np.zeros(f.dim)
            e[k] = 1.0
            offsets.extend([r * e, -r * e])
    Y = x + np.asarray(offsets)
    fy = f.value(Y)
    results = []
    for hdir in np.atleast_2d(np.asarray(directions, dtype=float)):
        est = -math.inf
        for t in ts:
            q = (f.value(Y + t * hdir) - fy) / t
            est = max(est, float(q.max()))
        reach = float(np.max(rho)) + float(np.max(ts)) * float(np.linalg.norm(hdir))
        lip = f.lip_bound(x, reach)
        curv = f.curvature_bound(x, reach)
        slack = 2.0 * curv * (float(np.max(ts)) + float(np.max(rho))) + 1e-9
        support = S.support(hdir) if S is not None else math.inf
        results.append({
            "direction": [float(v) for v in hdir],
            "estimate": est,
            "support": support,
            "dominated": bool(support >= est - slack),
            "slack": slack,
            "lip_bound": lip,
        })
    return {
        "supported": True,
        "point": [float(v) for v in x],
        "t_min": t_min,
        "probes": results,
        "all_dominated": all(r["dominated"] for r in results),
    }
