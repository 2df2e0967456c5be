"""Primal-lower-regularity certificates and the transforms that preserve them.

A certificate is a sampled, witness-carrying verification of the one-sided
quadratic lower estimate; nothing is assumed, even where the algebra
guarantees the outcome (the scaling and convex-addition transforms re-certify).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .convexsets import min_norm_element
from .fields import Field, Linear, Norm, Scaled, Sum
from .spaces import DomainError, InputError, PreconditionError
from .subdiff import SubdifferentialOracle, oracle_for

FULL_PAIRS_MAX = 2000  # full pair enumeration up to this many sample points
_MAX_WITNESSES = 10


@dataclass(frozen=True)
class SamplingSpec:
    """Sample points for certificate sweeps, with a fixed seed for stratified pairs."""

    points: np.ndarray
    seed: int = 0
    n_random_subgradients: int = 8

    @property
    def n(self) -> int:
        return self.points.shape[0]


def ball_sample(center, delta: float, h: float, seed: int = 0) -> SamplingSpec:
    """Lattice sample of the open ball B(center; delta), anchored at the center."""
    if delta <= 0 or h <= 0:
        raise InputError("ball sample needs positive delta and h")
    center = np.atleast_1d(np.asarray(center, dtype=float))
    k = int(math.floor(delta / h))
    axis = np.arange(-k, k + 1) * h
    mesh = np.meshgrid(*([axis] * center.size), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1) + center
    r = np.linalg.norm(pts - center, axis=1)
    return SamplingSpec(points=pts[r < delta], seed=seed)


@dataclass(frozen=True)
class PlrCertificate:
    center: np.ndarray
    c: float
    delta: float
    passed: bool
    violations: list
    n_points: int
    n_checked: int
    tol: float
    # retained so transforms can re-certify with the same setup
    _field: Field = dc_field(repr=False, compare=False, default=None)
    _oracle: SubdifferentialOracle = dc_field(repr=False, compare=False, default=None)
    _sampling: SamplingSpec = dc_field(repr=False, compare=False, default=None)

    def to_dict(self) -> dict:
        return {
            "center": [float(v) for v in np.atleast_1d(self.center)],
            "c": self.c,
            "delta": self.delta,
            "passed": self.passed,
            "n_points": self.n_points,
            "n_checked": self.n_checked,
            "tolerance": self.tol,
            "violations": self.violations[:_MAX_WITNESSES],
        }


@dataclass(frozen=True)
class RegularSlopeCertificate:
    c: float
    passed: bool
    violations: list
    n_checked: int
    tol: float

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "passed": self.passed,
            "n_checked": self.n_checked,
            "tolerance": self.tol,
            "violations": self.violations[:_MAX_WITNESSES],
        }


def _pair_targets(n: int, i: int, rng: np.random.Generator) -> np.ndarray:
    if n <= FULL_PAIRS_MAX:
        return np.arange(n)
    m = max(64, (FULL_PAIRS_MAX * FULL_PAIRS_MAX) // n)
    return rng.choice(n, size=min(n, m), replace=False)


def certify_plr(field: Field, oracle: SubdifferentialOracle, xbar, c: float,
                delta: float, sampling: SamplingSpec, tol: float = 1e-9) -> PlrCertificate:
    """Check f(y) >= f(x) + <p, y-x> - c(1+||p||)||y-x||^2 over the sample.

    Subgradient selections per point: all vertices, the min-norm point, and
    seeded boundary points (the coefficient is nonlinear in p, so vertex
    checks alone do not suffice for thickened sets).
    """
    if c <= 0 or delta <= 0:
        raise InputError("PLR certificate needs c > 0 and delta > 0")
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    pts = np.atleast_2d(sampling.points)
    r = np.linalg.norm(pts - xbar, axis=1)
    pts = pts[r < delta]
    if pts.shape[0] == 0:
        raise InputError("sampling contains no points of the open ball")
    fvals = field.value(pts)
    rng = np.random.default_rng(sampling.seed)
    n = pts.shape[0]
    violations = []
    n_checked = 0
    for i in range(n):
        if not np.isfinite(fvals[i]):
            continue
        S = oracle(pts[i])
        if S is None:
            raise DomainError(
                f"oracle undefined at {pts[i].tolist()} inside the certification ball"
            )
        targets = _pair_targets(n, i, rng)
        Y = pts[targets]
        fy = fvals[targets]
        diff = Y - pts[i]
        sq = np.sum(diff * diff, axis=1)
        for p in S.sample_points(rng, sampling.n_random_subgradients):
            rhs = fvals[i] + diff @ p - c * (1.0 + np.linalg.norm(p)) * sq
            margin = fy - rhs
            n_checked += margin.size
            bad = np.flatnonzero(margin < -tol)
            for j in bad:
                violations.append({
                    "x": pts[i].tolist(),
                    "y": Y[j].tolist(),
                    "p": [float(v) for v in p],
                    "margin": float(margin[j]),
                })
    violations.sort(key=lambda v: v["margin"])
    return PlrCertificate(
        center=xbar, c=c, delta=delta, passed=not violations,
        violations=violations[:_MAX_WITNESSES], n_points=n, n_checked=n_checked,
        tol=tol, _field=field, _oracle=oracle, _sampling=sampling,
    )


def certify_regular_slope(field: Field, slope_source, c: float,
                          sampling: SamplingSpec, tol: float = 1e-9) -> RegularSlopeCertificate:
    """Check f(y) >= f(x) - s(x) d - c(1+s(x)) d^2 with s the supplied slope rule.

    Points with infinite slope are skipped: the inequality is only quantified
    over the slope's domain.
    """
    if c <= 0:
        raise InputError("coefficient c must be positive")
    pts = np.atleast_2d(sampling.points)
    fvals = field.value(pts)
    slopes = np.array([slope_source(x) for x in pts], dtype=float)
    rng = np.random.default_rng(sampling.seed)
    n = pts.shape[0]
    violations = []
    n_checked = 0
    for i in range(n):
        if not (np.isfinite(fvals[i]) and np.isfinite(slopes[i])):
            continue
        targets = _pair_targets(n, i, rng)
        d = np.linalg.norm(pts[targets] - pts[i], axis=1)
        rhs = fvals[i] - slopes[i] * d - c * (1.0 + slopes[i]) * d * d
        margin = fvals[targets] - rhs
        n_checked += margin.size
        for j in np.flatnonzero(margin < -tol):
            violations.append({
                "x": pts[i].tolist(),
                "y": pts[targets[j]].tolist(),
                "slope_x": float(slopes[i]),
                "margin": float(margin[j]),
            })
    violations.sort(key=lambda v: v["margin"])
    return RegularSlopeCertificate(
        c=c, passed=not violations, violations=violations[:_MAX_WITNESSES],
        n_checked=n_checked, tol=tol,
    )


def scale_plr(cert: PlrCertificate, alpha: float) -> PlrCertificate:
    """Re-certify alpha*f with the same (c, delta): scaling by alpha in (0, 1)
    preserves the estimate, but the claim is tested rather than assumed."""
    if not 0 < alpha < 1:
        raise InputError("scaling factor must lie in (0, 1)")
    if cert._field is None:
        raise InputError("certificate does not carry its field; re-run certify_plr")
    scaled = Scaled(cert._field, alpha)
    return certify_plr(scaled, oracle_for(scaled), cert.center, cert.c, cert.delta,
                       cert._sampling, cert.tol)


def add_convex_plr(cert: PlrCertificate, h_field: Field) -> PlrCertificate:
    """Certify f + h at coefficient c(L+1), L the Lipschitz bound of h on the ball."""
    if not h_field.convex:
        raise InputError("added field must be convex")
    if cert._field is None:
        raise InputError("certificate does not carry its field; re-run certify_plr")
    L = h_field.lip_bound(cert.center, cert.delta)
    total = Sum([cert._field, h_field])
    return certify_plr(total, oracle_for(total), cert.center, cert.c * (L + 1.0),
                       cert.delta, cert._sampling, cert.tol)


def sharp_min_transform(field: Field, oracle: SubdifferentialOracle, xbar, c: float,
                        delta: float, p, sampling: SamplingSpec | None = None,
                        slope_tol: float = 1e-6):
    """Tilt-and-cone transform f1 = f - <p, .> + 4||. - xbar|| with its constants.

    Returns (f1, c', delta', report); the report verifies that xbar minimises
    f1 on the delta'-ball sample and that the min-norm slope of f1 is >= 1 on
    the punctured sample.
    """
    if c <= 0 or delta <= 0:
        raise InputError("transform needs c > 0 and delta > 0")
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if np.linalg.norm(p) >= 1.0:
        raise PreconditionError(f"||p|| = {np.linalg.norm(p)} must be < 1")
    c_prime = 6.0 * c
    delta_prime = min(delta, 1.0 / (9.0 * c))
    f1 = Sum([field, Linear(-p), Norm(field.dim, 4.0, xbar)])
    if sampling is None:
        sampling = ball_sample(xbar, delta_prime, delta_prime / 12.0)
    pts = np.atleast_2d(sampling.points)
    r = np.linalg.norm(pts - xbar, axis=1)
    pts = pts[r < delta_prime]
    f1_oracle = oracle_for(f1)
    slopes = []
    worst = None
    for x in pts:
        if np.linalg.norm(x - xbar) <= 1e-14:
            continue
        s = float(np.linalg.norm(min_norm_element(f1_oracle(x))))
        slopes.append(s)
        if worst is None or s < worst[0]:
            worst = (s, x.tolist())
    f1_vals = f1.value(pts)
    f1_center = f1.at(xbar)
    report = {
        "c_prime": c_prime,
        "delta_prime": delta_prime,
        "n_sampled": int(pts.shape[0]),
        "min_slope": min(slopes) if slopes else math.inf,
        "worst_slope_point": worst[1] if worst else None,
        "slope_ok": bool(not slopes or min(slopes) >= 1.0 - slope_tol),
        "center_value": f1_center,
        "min_sampled_value": float(np.min(f1_vals)),
        "center_is_min": bool(f1_center <= float(np.min(f1_vals)) + 1e-12),
    }
    return f1, c_prime, delta_prime, report


def verify_series_bound(a, b, c: float) -> dict:
    """Check the slope-growth series hypotheses and the explicit bound.

    Hypotheses: b_{n+1} - b_n < 2c(2 + b_n) a_n index by index.  If they hold,
    every b_n must stay below B = (b + 2c(2+b)s) e^{6cs} with b = max{b_0, 1}
    and s the sum of the a_n.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if c <= 0:
        raise InputError("series coefficient c must be positive")
    if np.any(a < 0):
        raise InputError("a_n must be nonnegative")
    if np.any(b <= 0):
        raise InputError("b_n must be positive")
    if a.size < b.size - 1:
        raise InputError("need a_n for every consecutive b-pair")
    first_violation = None
    for n in range(b.size - 1):
        if not b[n + 1] - b[n] < 2.0 * c * (2.0 + b[n]) * a[n]:
            first_violation = n
            break
    s = float(a.sum())
    base = max(float(b[0]), 1.0)
    bound = (base + 2.0 * c * (2.0 + base) * s) * math.exp(6.0 * c * s)
    report = {
        "hypothesis_ok": first_violation is None,
        "first_violation_index": first_violation,
        "s": s,
        "bound": bound,
        "max_b": float(b.max()),
    }
    if first_violation is None:
        report["bound_ok"] = bool(b.max() <= bound + 1e-12)
    return report


def representation_sequence(field: Field, slope_source, xbar, c: float, n_max: int,
                            grid=None, h: float | None = None,
                            radius: float | None = None) -> dict:
    """Construct the slope-representing sequence x_n by perturbed minimisation.

    For each usable n the penalty g_n = (r - 1/n) d + c(r+2) d^2 is added to
    the normalised field on a lattice around xbar and an Ekeland point of the
    sum is taken; the reported inequalities are the quotient lower bound, the
    1/(cn) distance bound, and the slope-gap estimate.
    """
    from .ekeland import ekeland_point
    from .spaces import GridSpace

    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    r = float(slope_source(xbar))
    if not (0.0 < r < math.inf):
        raise PreconditionError(f"slope at the base point is {r}; need it in (0, inf)")
    if c <= 0:
        raise InputError("coefficient c must be positive")
    n_lo = int(math.floor(1.0 / r)) + 1
    if grid is None:
        radius = radius if radius is not None else 1.2 / (c * n_lo)
        h = h if h is not None else min(radius / 50.0, 1.0 / (30.0 * c * n_max))
        sample = ball_sample(xbar, radius * (1.0 + 1e-12), h)
        grid = GridSpace(sample.points)
    dvals = np.linalg.norm(grid.coords - xbar, axis=1)
    fvals = field.value(grid.coords) - field.at(xbar)
    entries = []
    for n in range(1, n_max + 1):
        rn = r - 1.0 / n
        if rn <= 0:
            entries.append({"n": n, "skipped": True, "reason": "n <= 1/slope"})
            continue
        gn = rn * dvals + c * (r + 2.0) * dvals * dvals
        total = fvals + gn
        inf_total = float(np.min(total))
        if inf_total >= 0.0:
            entries.append({"n": n, "skipped": True,
                            "reason": "grid too coarse: inf(f+g_n) >= 0"})
            continue
        eps_n = min(1.0 / (2.0 * n), -inf_total / 2.0)
        start = int(np.argmin(total))
        res = ekeland_point(grid, total, start, eps_n)
        xi = res.index
        d_n = float(dvals[xi])
        quotient = float(-fvals[xi] / d_n)
        slope_xn = float(slope_source(grid.coords[xi]))
        gap_bound = 2.0 * c * (r + 2.0) * d_n
        entries.append({
            "n": n,
            "skipped": False,
            "eps_n": eps_n,
            "x_n": grid.coords[xi].tolist(),
            "d_n": d_n,
            "r_n": rn,
            "quotient": quotient,
            "quotient_ok": bool(quotient > rn),
            "dist_bound": 1.0 / (c * n),
            "dist_ok": bool(d_n < 1.0 / (c * n)),
            "slope_x_n": slope_xn,
            "slope_gap": slope_xn - r,
            "gap_bound": gap_bound,
            "gap_ok": bool(slope_xn - r < gap_bound),
            "ekeland_verified": res.strict_min_verified,
        })
    return {
        "slope_at_base": r,
        "c": c,
        "n_grid": grid.n,
        "entries": entries,
        "all_ok": all(e.get("skipped") or (e["quotient_ok"] and e["dist_ok"] and e["gap_ok"])
                      for e in entries),
    }
