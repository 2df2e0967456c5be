"""End-to-end determination experiments.

Two functions that are primal lower regular at a common point and share
subdifferentials on a ball must differ locally by the constant a = f - g at
the point.  The harness replays the proof on concrete instances: a gate
checks the subdifferential equality, the tilt-and-cone transform builds a
sharp minimum, the ball is discretised into a finite space, and descent
orbits of the three-way intersection map transport the comparison to the
distinguished point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convexsets import min_norm_element
from .fields import (AbsSum, AddConst, Field, Linear, MaxZero, Norm,
                     Quadratic, Scaled, Sum, Translated, field_from_dict)
from .orbit import build_determination_map, orbit_length_bound, run_orbit
from .plr import SamplingSpec, ball_sample, certify_plr
from .spaces import GridSpace, InputError
from .subdiff import oracle_for, slope_from_subdifferential

DILATIONS = (0.5, 0.1, 0.01)
SUPPORT_TOL = 1e-9


@dataclass(frozen=True)
class DeterminationInstance:
    id: str
    f: Field
    g: Field
    xbar: np.ndarray
    c: float
    delta: float
    expected: dict

    @property
    def dim(self) -> int:
        return self.f.dim

    def constants(self) -> dict:
        """The exact derived radii and coefficient for this instance."""
        return derived_constants(self.c, self.delta)


def derived_constants(c: float, delta: float) -> dict:
    if c <= 0 or delta <= 0:
        raise InputError("need c > 0 and delta > 0")
    delta_prime = min(delta, 1.0 / (9.0 * c))
    return {
        "c_prime": 6.0 * c,
        "delta_prime": delta_prime,
        "delta_hat": min(delta / 2.0, 1.0 / (18.0 * c)),
    }


def builtin_instances() -> dict[str, DeterminationInstance]:
    """Six positive pairs (a in {0, 1, 2.5, -3}) and three negative controls."""
    zero1, zero2 = np.zeros(1), np.zeros(2)
    negsq1 = Quadratic(1, a=-2.0)
    negsq2 = Quadratic(2, a=-2.0)
    bowl2 = Quadratic(2, a=1.0)
    abs1 = AbsSum(1)
    comp2 = Sum([MaxZero(Quadratic(2, a=2.0, const=-1.0)), Quadratic(2, a=2.0)])
    tilted1 = Quadratic(1, a=-2.0, b=[0.3])
    instances = [
        DeterminationInstance(
            "ident_negsq_1d", negsq1, negsq1, zero1, 1.0, 1.0,
            {"equal_up_to_constant": True, "a": 0.0}),
        DeterminationInstance(
            "shift1_negsq_2d", AddConst(negsq2, 1.0), negsq2, zero2, 1.0, 1.0,
            {"equal_up_to_constant": True, "a": 1.0}),
        DeterminationInstance(
            "shift_2p5", AddConst(bowl2, 2.5), bowl2, zero2, 1.0, 1.0,
            {"equal_up_to_constant": True, "a": 2.5}),
        DeterminationInstance(
            "shiftm3_abs_1d", AddConst(abs1, -3.0), abs1, zero1, 1.0, 1.0,
            {"equal_up_to_constant": True, "a": -3.0}),
        DeterminationInstance(
            "shift1_composite_2d", AddConst(comp2, 1.0), comp2, zero2, 1.0, 1.0,
            {"equal_up_to_constant": True, "a": 1.0}),
        DeterminationInstance(
            "shift2p5_tilted_1d", AddConst(tilted1, 2.5), tilted1, zero1, 1.0, 1.0,
            {"equal_up_to_constant": True, "a": 2.5}),
        DeterminationInstance(
            "neg_scaled", bowl2, Scaled(bowl2, 2.0), zero2, 1.0, 1.0,
            {"equal_up_to_constant": False, "reason": "scaled"}),
        DeterminationInstance(
            "neg_kink", abs1, Sum([abs1, Quadratic(1, a=2.0)]), zero1, 1.0, 1.0,
            {"equal_up_to_constant": False, "reason": "perturbed-kink"}),
        DeterminationInstance(
            "neg_shifted", bowl2, Translated(bowl2, [0.2, 0.0]), zero2, 1.0, 1.0,
            {"equal_up_to_constant": False, "reason": "shifted-argument"}),
    ]
    return {inst.id: inst for inst in instances}


_INSTANCE_KEYS = {"id", "f", "g", "xbar", "c", "delta", "expected"}
_EXPECTED_KEYS = {"equal_up_to_constant", "a", "reason"}


def instance_from_dict(doc: dict) -> DeterminationInstance:
    if not isinstance(doc, dict):
        raise InputError("instance file must be a JSON object")
    extra = set(doc) - _INSTANCE_KEYS
    if extra:
        raise InputError(f"unknown keys in instance file: {sorted(extra)}")
    missing = _INSTANCE_KEYS - set(doc)
    if missing:
        raise InputError(f"instance file missing keys: {sorted(missing)}")
    expected = doc["expected"]
    bad = set(expected) - _EXPECTED_KEYS
    if bad:
        raise InputError(f"unknown keys in 'expected': {sorted(bad)}")
    return DeterminationInstance(
        id=str(doc["id"]),
        f=field_from_dict(doc["f"]),
        g=field_from_dict(doc["g"]),
        xbar=np.atleast_1d(np.asarray(doc["xbar"], dtype=float)),
        c=float(doc["c"]),
        delta=float(doc["delta"]),
        expected=dict(expected),
    )


# -- subdifferential-equality gate --------------------------------------


def _direction_fan(dim: int, n_random: int, rng: np.random.Generator) -> np.ndarray:
    eye = np.eye(dim)
    dirs = [eye, -eye]
    u = rng.normal(size=(n_random, dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    dirs.append(u)
    return np.concatenate(dirs)


def verify_subdifferential_equality(instance: DeterminationInstance,
                                    sampling: SamplingSpec | None = None,
                                    n_directions: int = 32, seed: int = 0,
                                    tol: float = SUPPORT_TOL):
    """Set equality of the two subdifferentials at sampled ball points.

    Equality of compact convex sets is equivalent to equality of support
    functions, checked over an axis-plus-random direction fan.
    """
    if sampling is None:
        sampling = ball_sample(instance.xbar, instance.delta, instance.delta / 6.0, seed=seed)
    rng = np.random.default_rng(seed)
    fan = _direction_fan(instance.dim, n_directions, rng)
    witnesses = []
    for x in np.atleast_2d(sampling.points):
        Sf = instance.f.subdiff(x)
        Sg = instance.g.subdiff(x)
        if Sf is None or Sg is None:
            if (Sf is None) != (Sg is None):
                witnesses.append({"point": x.tolist(), "gap": math.inf,
                                  "direction": None})
            continue
        for h in fan:
            gap = abs(Sf.support(h) - Sg.support(h))
            if gap > tol:
                witnesses.append({"point": x.tolist(), "direction": h.tolist(),
                                  "gap": float(gap)})
                break
    witnesses.sort(key=lambda w: -w["gap"])
    return not witnesses, witnesses[:10]


# -- the one-sided proof pipeline ---------------------------------------


def _analytic_slope(field: Field):
    oracle = oracle_for(field)

    def slope(x) -> float:
        return slope_from_subdifferential(oracle, x)

    return slope


def _choose_alpha(slope_at_center: float, f_inf: float, f_x0: float, nu: float,
                  cap: float) -> float | None:
    """Largest-ish alpha in (0,1) meeting the three tilt conditions, by
    halving then bisecting against the (monotone) feasibility predicate."""

    def feasible(al: float) -> bool:
        return (al * slope_at_center < cap * (1.0 - 1e-9)
                and al * f_inf > -nu
                and al * f_x0 < nu)

    hi = 1.0
    lo = 0.95
    for _ in range(200):
        if feasible(lo):
            break
        hi = lo
        lo *= 0.5
    else:
        return None
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if mid >= 1.0:
            break
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def slope_determination_core(y_space: GridSpace, f1_vals, g1_vals, slope_f1,
                             slope_g1, c: float, i_bar: int, eps: float,
                             dilations=DILATIONS, starts=None, tol: float = 1e-9) -> dict:
    """Orbit machinery of the slope comparison argument on a discretised
    sublevel space: checks both hypotheses, then runs the dilation family and
    asserts the transported conclusion pointwise at the sampled starts."""
    f1_vals = np.asarray(f1_vals, dtype=float)
    g1_vals = np.asarray(g1_vals, dtype=float)
    slope_f1 = np.asarray(slope_f1, dtype=float)
    slope_g1 = np.asarray(slope_g1, dtype=float)
    n = y_space.n
    # hypothesis 1: |slope g1| <= |slope f1| on Y
    excess = slope_g1 - slope_f1
    h1_bad = int(np.argmax(excess))
    hyp_slopes_ok = bool(excess[h1_bad] <= tol)
    # hypothesis 2: the mixed quadratic lower estimate for g1 driven by slope f1
    hyp_mixed_ok = True
    mixed_witness = None
    for i in range(n):
        if not np.isfinite(slope_f1[i]):
            continue
        d = y_space.dist_from(i)
        rhs = g1_vals[i] - slope_f1[i] * d - c * (slope_f1[i] + 1.0) * d * d
        margin = g1_vals - rhs
        j = int(np.argmin(margin))
        if margin[j] < -tol:
            hyp_mixed_ok = False
            mixed_witness = {"x": y_space.label(i), "y": y_space.label(j),
                             "margin": float(margin[j])}
            break
    if starts is None:
        starts = list(range(n))
    f1_bar, g1_bar = f1_vals[i_bar], g1_vals[i_bar]
    runs = []
    all_ok = hyp_slopes_ok and hyp_mixed_ok
    for dil in dilations:
        fd = (1.0 + dil) * (f1_vals - f1_bar)
        gd = g1_vals - g1_bar
        sfd = (1.0 + dil) * slope_f1
        mm = build_determination_map(y_space, fd, gd, sfd, slope_g1, eps, c, i_bar)
        worst_margin = math.inf
        ends_ok = True
        lengths_ok = True
        max_len = 0.0
        for s in starts:
            orb = run_orbit(y_space, mm, int(s))
            lb = orbit_length_bound(orb, fd, eps)
            ends_ok &= orb.end == i_bar or orb.start == i_bar
            lengths_ok &= lb["within_bound"] and not lb["insufficient_decrease_steps"]
            max_len = max(max_len, orb.length)
            margin = (fd[s] - gd[s]) - (fd[orb.end] - gd[orb.end])
            worst_margin = min(worst_margin, float(margin))
        conclusion = float(np.min((fd - gd) - (fd[i_bar] - gd[i_bar])))
        runs.append({
            "dilation": dil,
            "ends_at_center": bool(ends_ok),
            "length_bounds_ok": bool(lengths_ok),
            "max_orbit_length": max_len,
            "worst_transport_margin": worst_margin,
            "pointwise_conclusion_min": conclusion,
            "ok": bool(ends_ok and lengths_ok and worst_margin >= -tol
                       and conclusion >= -tol),
        })
        all_ok &= runs[-1]["ok"]
    return {
        "hyp_slopes_ok": hyp_slopes_ok,
        "hyp_slopes_excess": float(excess[h1_bad]),
        "hyp_mixed_ok": hyp_mixed_ok,
        "mixed_witness": mixed_witness,
        "eps": eps,
        "runs": runs,
        "ok": bool(all_ok),
    }


def run_one_sided(instance: DeterminationInstance, x0, grid_h: float | None = None,
                  dilations=DILATIONS, seed: int = 0) -> dict:
    """Numerical replay of the one-sided comparison: from the subdifferential
    inclusion to f(x0) >= g(x0) + (f(xbar) - g(xbar)) up to a reported slack.

    The pipeline chooses the tilt scale alpha, builds the sharp-minimum
    transform, restricts to the discretised sublevel set and transports the
    comparison along determination orbits.
    """
    f, g = instance.f, instance.g
    xbar = instance.xbar
    consts = instance.constants()
    delta_prime = consts["delta_prime"]
    if grid_h is None:
        grid_h = delta_prime / 22.0
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if np.linalg.norm(x0 - xbar) >= delta_prime:
        raise InputError("x0 must lie in the open delta'-ball")
    f0, g0 = f.at(xbar), g.at(xbar)
    a = f0 - g0

    sampling = ball_sample(xbar, delta_prime, grid_h, seed=seed)
    pts = sampling.points
    grid = GridSpace(pts)
    i0 = grid.nearest(x0)
    x0s = pts[i0]
    snap_dist = float(np.linalg.norm(x0s - x0))
    i_center = grid.nearest(xbar)

    F_vals = f.value(pts) - f0
    nu = min(0.45 * (delta_prime - np.linalg.norm(x0s - xbar)), 0.9)
    if nu <= 0:
        raise InputError("snapped x0 leaves no room inside the ball")
    cap = min(1.0, nu / delta_prime)
    slope_center = float(np.linalg.norm(min_norm_element(f.subdiff(xbar))))
    alpha = _choose_alpha(slope_center, float(F_vals.min()), float(F_vals[i0]), nu, cap)
    if alpha is None:
        return {"ok": False, "failure": "hypothesis-scale mismatch: no feasible alpha"}
    p = alpha * min_norm_element(f.subdiff(xbar))
    assert np.linalg.norm(p) < cap

    tilt = [Linear(-p), Norm(instance.dim, 4.0, xbar)]
    f1 = Sum([AddConst(Scaled(f, alpha), -alpha * f0)] + tilt)
    g1 = Sum([AddConst(Scaled(g, alpha), -alpha * g0)] + tilt)
    f1_vals = f1.value(pts)
    keep = np.flatnonzero(f1_vals <= f1_vals[i0] + 1e-12)
    y_space = GridSpace(pts[keep])
    f1_Y = f1_vals[keep]
    g1_Y = g1.value(pts[keep])
    pos = {int(k): idx for idx, k in enumerate(keep)}
    i0_Y = pos[int(i0)]
    if int(i_center) not in pos:
        return {"ok": False, "failure": "center fell outside the sublevel set"}
    ibar_Y = pos[int(i_center)]

    slope_f1_fn = _analytic_slope(f1)
    slope_g1_fn = _analytic_slope(g1)
    slope_f1_Y = np.array([slope_f1_fn(x) for x in y_space.coords])
    slope_g1_Y = np.array([slope_g1_fn(x) for x in y_space.coords])
    away = np.ones(y_space.n, dtype=bool)
    away[ibar_Y] = False
    min_slope = float(slope_f1_Y[away].min()) if away.any() else math.inf
    eps = min(1.0, 0.5 * min_slope)
    if eps <= 0:
        return {"ok": False, "failure": "sharp-minimum gap collapsed on the grid"}

    # run orbits from a seeded subset plus x0 when Y is large
    if y_space.n > 400:
        rng = np.random.default_rng(seed)
        starts = sorted(set(rng.choice(y_space.n, size=64, replace=False).tolist())
                        | {i0_Y, ibar_Y})
    else:
        starts = None
    core = slope_determination_core(
        y_space, f1_Y, g1_Y, slope_f1_Y, slope_g1_Y, instance.c, ibar_Y, eps,
        dilations=dilations, starts=starts)

    dil_min = min(dilations)
    slack = dil_min * float(f1_Y[i0_Y] - f1_Y[ibar_Y]) / alpha
    margin_direct = float((f.at(x0s) - g.at(x0s)) - a)
    report = {
        "ok": bool(core["ok"] and margin_direct >= -(slack + 1e-9)),
        "x0": x0.tolist(),
        "x0_snapped": x0s.tolist(),
        "snap_distance": snap_dist,
        "grid_h": grid_h,
        "nu": nu,
        "alpha": alpha,
        "p": [float(v) for v in p],
        "delta_prime": delta_prime,
        "c_prime": consts["c_prime"],
        "n_grid": grid.n,
        "n_sublevel": y_space.n,
        "eps_gap": eps,
        "min_f1_slope_away": min_slope,
        "slack": slack,
        "margin": margin_direct,
        "core": core,
    }
    return report


def run_determination(instance: DeterminationInstance, grid_h: float | None = None,
                      seed: int = 0, n_centers: int = 3, n_sample: int = 200,
                      dilations=DILATIONS) -> dict:
    """Full two-directional harness for one instance.

    Gate order: PLR certificates for both functions, then subdifferential
    equality on the delta-ball; a rejected gate stops the experiment (that is
    the expected outcome for negative controls).  The deviation |f - g - a| is
    evaluated through the grid: off-lattice sample points are snapped and the
    transport error is charged via the Lipschitz bounds, so the reported
    deviation is first order in the lattice spacing.
    """
    xbar, c, delta = instance.xbar, instance.c, instance.delta
    consts = instance.constants()
    delta_prime, delta_hat = consts["delta_prime"], consts["delta_hat"]
    if grid_h is None:
        grid_h = delta_prime / 22.0

    cert_sampling = ball_sample(xbar, delta, delta / 6.0, seed=seed)
    cert_f = certify_plr(instance.f, oracle_for(instance.f), xbar, c, delta, cert_sampling)
    cert_g = certify_plr(instance.g, oracle_for(instance.g), xbar, c, delta, cert_sampling)
    equal, witnesses = verify_subdifferential_equality(instance, seed=seed)
    report = {
        "instance": instance.id,
        "c": c,
        "delta": delta,
        "c_prime": consts["c_prime"],
        "delta_prime": delta_prime,
        "delta_hat": delta_hat,
        "grid_h": grid_h,
        "plr_f_passed": cert_f.passed,
        "plr_g_passed": cert_g.passed,
        "subdifferential_equality": equal,
        "gate_witnesses": witnesses,
        "expected": instance.expected,
    }
    if not (cert_f.passed and cert_g.passed):
        report.update({"status": "rejected", "reject_stage": "plr-certificate"})
        return report
    if not equal:
        report.update({"status": "rejected", "reject_stage": "subdifferential-equality"})
        return report

    a = instance.f.at(xbar) - instance.g.at(xbar)
    L_f = instance.f.lip_bound(xbar, delta_hat)
    L_g = instance.g.lip_bound(xbar, delta_hat)
    tolerance = 10.0 * (4.0 * grid_h + grid_h) * (1.0 + L_f)

    rng = np.random.default_rng(seed)
    u = rng.normal(size=(n_sample, instance.dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    radii = delta_hat * rng.random(n_sample) ** (1.0 / instance.dim)
    sample = xbar + radii[:, None] * u
    snapped = xbar + np.round((sample - xbar) / grid_h) * grid_h
    snap_d = np.linalg.norm(sample - snapped, axis=1)
    dev_grid = np.abs(instance.f.value(snapped) - instance.g.value(snapped) - a)
    dev = dev_grid + (L_f + L_g) * snap_d
    max_deviation = float(dev.max())

    order = np.argsort(radii)
    centers = [sample[order[int(q * (n_sample - 1))]]
               for q in np.linspace(0.15, 0.85, n_centers)]
    swapped = DeterminationInstance(
        instance.id + ":swap", instance.g, instance.f, xbar, c, delta, instance.expected)
    center_reports = []
    pipelines_ok = True
    for x0 in centers:
        fwd = run_one_sided(instance, x0, grid_h=grid_h, dilations=dilations, seed=seed)
        bwd = run_one_sided(swapped, x0, grid_h=grid_h, dilations=dilations, seed=seed)
        ok = fwd.get("ok", False) and bwd.get("ok", False)
        two_sided = None
        if "margin" in fwd and "margin" in bwd:
            two_sided = fwd["margin"] + bwd["margin"]  # = 0 exactly for true pairs
        pipelines_ok &= ok
        center_reports.append({
            "x0": [float(v) for v in x0],
            "forward": fwd,
            "backward": bwd,
            "two_sided_margin_sum": two_sided,
            "ok": bool(ok),
        })

    curve_r = np.linspace(delta_hat / 10.0, delta_hat, 10)
    curve = [(float(r), float(dev[radii <= r].max()) if np.any(radii <= r) else 0.0)
             for r in curve_r]

    report.update({
        "status": "completed",
        "a": a,
        "max_deviation": max_deviation,
        "max_deviation_on_lattice": float(dev_grid.max()),
        "tolerance": tolerance,
        "within_tolerance": bool(max_deviation <= tolerance),
        "pipelines_ok": bool(pipelines_ok),
        "centers": center_reports,
        "radius_curve": curve,
        "passed": bool(pipelines_ok and max_deviation <= tolerance),
    })
    return report


def csv_rows(instance: DeterminationInstance, grid_h: float | None = None) -> list:
    """Tabular dump over the delta-hat lattice: point, f, g, f-g-a, slopes."""
    consts = instance.constants()
    if grid_h is None:
        grid_h = consts["delta_prime"] / 22.0
    a = instance.f.at(instance.xbar) - instance.g.at(instance.xbar)
    pts = ball_sample(instance.xbar, consts["delta_hat"], grid_h).points
    slope_f = _analytic_slope(instance.f)
    slope_g = _analytic_slope(instance.g)
    rows = []
    for x in pts:
        fv, gv = instance.f.at(x), instance.g.at(x)
        rows.append({
            "point": " ".join(repr(float(v)) for v in x),
            "f": fv,
            "g": gv,
            "f_minus_g_minus_a": fv - gv - a,
            "slope_f": slope_f(x),
            "slope_g": slope_g(x),
        })
    rows.sort(key=lambda r: r["point"])
    return rows
