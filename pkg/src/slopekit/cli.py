"""Command-line front end.

Exit codes: 0 on pass (a negative control rejected at its gate counts as a
pass), 1 on a verified failure, 2 on input errors (malformed JSON is reported
with line and column).  Reports are canonical JSON (sorted keys) and
byte-stable for a fixed seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import determination as det
from .ekeland import ekeland_point
from .fields import default_catalog
from .orbit import build_determination_map, orbit_length_bound, run_orbit, verify_orbit
from .plr import (ball_sample, certify_plr, sharp_min_transform,
                  verify_series_bound)
from .slope import discrete_slope, local_slope_finite
from .spaces import (DomainError, FiniteMetricSpace, GridSpace, InputError,
                     PreconditionError, load_space)
from .subdiff import oracle_for

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _jsonable(obj):
    """Canonical, strictly-valid JSON payload: numpy collapses to scalars and
    lists, non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def emit(report: dict, path: str | None = None) -> None:
    text = json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def constants_block(c: float, delta: float) -> dict:
    return det.derived_constants(c, delta)


def _parse_point(raw: str) -> np.ndarray:
    try:
        return np.asarray([float(v) for v in raw.replace(",", " ").split()])
    except ValueError as e:
        raise InputError(f"cannot parse point {raw!r}: {e}") from None


def _locate(space, fields: dict, raw: str) -> int:
    """A point argument is a label for listed spaces, coordinates for grids."""
    if isinstance(space, FiniteMetricSpace):
        return space.index_of(raw)
    x = _parse_point(raw)
    if x.size != space.dim:
        raise InputError(f"point has dimension {x.size}, space has {space.dim}")
    i = space.nearest(x)
    if np.linalg.norm(space.coords[i] - x) > 1e-9:
        raise InputError(f"{raw!r} is not a grid point (nearest: {space.label(i)})")
    return i


def _field_values(space, fields: dict, name: str) -> np.ndarray:
    if name in fields:
        return fields[name]
    catalog = default_catalog()
    if name in catalog:
        if not isinstance(space, GridSpace):
            raise InputError(
                f"catalog field {name!r} needs a grid space; "
                "listed spaces must carry the field in the file")
        entry = catalog[name]
        if entry.dim != space.dim:
            raise InputError(
                f"catalog field {name!r} has dimension {entry.dim}, space has {space.dim}")
        return entry.field.value(space.coords)
    raise InputError(f"unknown field {name!r} (not in the file, not in the catalog)")


def _catalog_entry(name: str):
    catalog = default_catalog()
    if name not in catalog:
        raise InputError(f"unknown catalog entry {name!r}; see catalog-list")
    return catalog[name]


# -- subcommands --------------------------------------------------------


def cmd_slope(args) -> int:
    space, fields = load_space(args.space)
    values = _field_values(space, fields, args.field)
    i = _locate(space, fields, args.point)
    if args.eps is None:
        est = local_slope_finite(space, values, i)
    else:
        est = discrete_slope(space, values, i, args.eps)
    emit({
        "command": "slope",
        "point": space.label(i),
        "value": est.value,
        "witness": None if est.witness is None else space.label(est.witness),
        "resolution": est.resolution,
        "seed": args.seed,
    }, args.report)
    return EXIT_PASS


def cmd_ekeland(args) -> int:
    space, fields = load_space(args.space)
    values = _field_values(space, fields, args.field)
    i0 = _locate(space, fields, args.start)
    res = ekeland_point(space, values, i0, args.lam)
    d = space.dist_from(res.index)
    decrease_margin = res.decrease - args.lam * d[i0]
    others = [j for j in range(space.n) if j != res.index and np.isfinite(values[j])]
    strict_margin = min(
        (values[j] + args.lam * d[j] - values[res.index] for j in others),
        default=math.inf)
    emit({
        "command": "ekeland",
        "start": space.label(i0),
        "lambda": args.lam,
        "point": space.label(res.index),
        "decrease": res.decrease,
        "decrease_margin": decrease_margin,
        "strict_min_margin": strict_margin,
        "verified": res.strict_min_verified,
        "iterations": res.iterations,
        "seed": args.seed,
    }, args.report)
    return EXIT_PASS if res.strict_min_verified else EXIT_FAIL


def cmd_orbit(args) -> int:
    if args.map != "determination":
        raise InputError(f"unknown map {args.map!r}; available: determination")
    space, fields = load_space(args.space)
    required = ("f", "g", "slope_f", "slope_g")
    vals = {name: _field_values(space, fields, name) for name in required[:2]}
    for name in required[2:]:
        if name not in fields:
            raise InputError(f"space file must carry field {name!r} for the orbit map")
        vals[name] = fields[name]
    i0 = _locate(space, fields, args.start)
    i_bar = _locate(space, fields, args.center)
    mm = build_determination_map(space, vals["f"], vals["g"], vals["slope_f"],
                                 vals["slope_g"], args.eps, args.c, i_bar)
    orbit = run_orbit(space, mm, i0)
    bad = verify_orbit(space, mm, orbit)
    lb = orbit_length_bound(orbit, vals["f"], args.eps)
    ok = orbit.termination == "empty_set" and not bad
    emit({
        "command": "orbit",
        "start": space.label(i0),
        "center": space.label(i_bar),
        "eps": args.eps,
        "c": args.c,
        "points": [space.label(i) for i in orbit.points],
        "steps": orbit.steps,
        "termination": orbit.termination,
        "diagnostics": orbit.diagnostics,
        "length": orbit.length,
        "length_bound": lb,
        "membership_violations": bad,
        "seed": args.seed,
        "ok": ok,
    }, args.report)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_plr_check(args) -> int:
    if args.c <= 0 or args.delta <= 0:
        raise InputError("need c > 0 and delta > 0")
    entry = _catalog_entry(args.catalog)
    xbar = _parse_point(args.center)
    if xbar.size != entry.dim:
        raise InputError(f"center has dimension {xbar.size}, entry has {entry.dim}")
    h = args.h if args.h is not None else args.delta / 12.0
    sampling = ball_sample(xbar, args.delta, h, seed=args.seed)
    cert = certify_plr(entry.field, oracle_for(entry), xbar, args.c, args.delta, sampling)
    report = {"command": "plr-check", "entry": entry.id, "seed": args.seed,
              "constants": constants_block(args.c, args.delta)}
    report.update(cert.to_dict())
    emit(report, args.report)
    return EXIT_PASS if cert.passed else EXIT_FAIL


def cmd_series_check(args) -> int:
    if args.c <= 0:
        raise InputError("need c > 0")
    with open(args.file) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or set(doc) - {"a", "b"}:
        raise InputError("series file must be an object with keys 'a' and 'b' only")
    if "a" not in doc or "b" not in doc:
        raise InputError("series file needs both 'a' and 'b'")
    report = verify_series_bound(doc["a"], doc["b"], args.c)
    report.update({"command": "series-check", "c": args.c,
                   "c_prime": 6.0 * args.c, "seed": args.seed})
    emit(report, args.report)
    ok = report["hypothesis_ok"] and report.get("bound_ok", False)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_sharp_min(args) -> int:
    if args.c <= 0 or args.delta <= 0:
        raise InputError("need c > 0 and delta > 0")
    entry = _catalog_entry(args.catalog)
    xbar = _parse_point(args.center)
    if xbar.size != entry.dim:
        raise InputError(f"center has dimension {xbar.size}, entry has {entry.dim}")
    p = np.zeros(entry.dim) if args.p is None else _parse_point(args.p)
    sampling = None
    if args.h is not None:
        delta_prime = min(args.delta, 1.0 / (9.0 * args.c))
        sampling = ball_sample(xbar, delta_prime, args.h, seed=args.seed)
    _, c_prime, delta_prime, report = sharp_min_transform(
        entry.field, oracle_for(entry), xbar, args.c, args.delta, p, sampling)
    report.update({"command": "sharp-min", "entry": entry.id, "p": p.tolist(),
                   "seed": args.seed,
                   "constants": constants_block(args.c, args.delta)})
    emit(report, args.report)
    return EXIT_PASS if report["slope_ok"] and report["center_is_min"] else EXIT_FAIL


def _load_instance(raw: str) -> det.DeterminationInstance:
    builtin = det.builtin_instances()
    if raw in builtin:
        return builtin[raw]
    with open(raw) as fh:
        doc = json.load(fh)
    return det.instance_from_dict(doc)


def _write_csv(instance, path: str, grid_h: float | None) -> None:
    rows = det.csv_rows(instance, grid_h)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["point", "f", "g", "f_minus_g_minus_a", "slope_f", "slope_g"])
        writer.writeheader()
        writer.writerows(rows)


def _write_plot_data(curve, path: str) -> None:
    with open(path, "w") as fh:
        for r, dev in curve:
            fh.write(f"{r!r} {dev!r}\n")


def _render_plot(report: dict, refine, path: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n_panels = 2 if refine else 1
    fig, axes = plt.subplots(1, n_panels, figsize=(5 * n_panels, 4))
    axes = np.atleast_1d(axes)
    rs = [r for r, _ in report["radius_curve"]]
    ds = [d for _, d in report["radius_curve"]]
    axes[0].plot(rs, ds, "o-")
    axes[0].set_xlabel("sample radius")
    axes[0].set_ylabel("max |f - g - a|")
    axes[0].set_title(report["instance"])
    if refine:
        hs = [h for h, _ in refine]
        devs = [d for _, d in refine]
        axes[1].loglog(hs, devs, "s-")
        axes[1].set_xlabel("lattice spacing h")
        axes[1].set_ylabel("max |f - g - a|")
        axes[1].set_title("refinement")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def cmd_determine(args) -> int:
    instance = _load_instance(args.instance)
    report = det.run_determination(instance, grid_h=args.h, seed=args.seed,
                                   n_centers=args.n_centers)
    refine = None
    if report["status"] == "completed" and args.refine:
        h = report["grid_h"]
        refine = [(h, report["max_deviation"])]
        for _ in range(args.refine):
            h /= 2.0
            finer = det.run_determination(instance, grid_h=h, seed=args.seed,
                                          n_centers=1)
            refine.append((h, finer["max_deviation"]))
        report["refinement"] = refine
    emit(report, args.report)
    if args.csv:
        _write_csv(instance, args.csv, args.h)
    if args.plot_data and report["status"] == "completed":
        _write_plot_data(report["radius_curve"], args.plot_data)
    if args.plot and report["status"] == "completed":
        _render_plot(report, refine, args.plot)
    if report["status"] == "rejected":
        expected = not instance.expected.get("equal_up_to_constant", True)
        return EXIT_PASS if expected else EXIT_FAIL
    return EXIT_PASS if report["passed"] else EXIT_FAIL


def cmd_catalog_list(args) -> int:
    entries = [{
        "id": e.id,
        "kind": e.kind,
        "dim": e.dim,
        "lipschitz": e.lipschitz_flag,
        "f_regular": e.f_regular_flag,
    } for e in default_catalog().values()]
    instances = [{
        "id": inst.id,
        "dim": inst.dim,
        "expected": inst.expected,
    } for inst in det.builtin_instances().values()]
    emit({"command": "catalog-list", "fields": entries, "instances": instances},
         args.report)
    return EXIT_PASS


# -- parser -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slopekit",
        description="Slopes, Ekeland selections, PLR certificates and "
                    "determination experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0, help="RNG seed (64-bit)")
        p.add_argument("--threads", type=int, default=1,
                       help="parallelism hint (execution is sequential)")
        p.add_argument("--report", help="also write the JSON report here")

    p = sub.add_parser("slope", help="slope of a field at a point")
    p.add_argument("--space", required=True)
    p.add_argument("--field", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--eps", type=float, default=None,
                   help="resolution for the discrete slope (omit for exact)")
    common(p)
    p.set_defaults(func=cmd_slope)

    p = sub.add_parser("ekeland", help="Ekeland point selection")
    p.add_argument("--space", required=True)
    p.add_argument("--field", required=True)
    p.add_argument("--start", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    common(p)
    p.set_defaults(func=cmd_ekeland)

    p = sub.add_parser("orbit", help="descent orbit of the determination map")
    p.add_argument("--space", required=True)
    p.add_argument("--map", default="determination")
    p.add_argument("--start", required=True)
    p.add_argument("--center", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    common(p)
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("plr-check", help="quadratic lower-estimate certificate")
    p.add_argument("--catalog", required=True)
    p.add_argument("--center", required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--h", type=float, default=None)
    common(p)
    p.set_defaults(func=cmd_plr_check)

    p = sub.add_parser("series-check", help="slope-growth series bound")
    p.add_argument("--file", required=True)
    p.add_argument("--c", type=float, required=True)
    common(p)
    p.set_defaults(func=cmd_series_check)

    p = sub.add_parser("sharp-min", help="tilt-and-cone sharp-minimum transform")
    p.add_argument("--catalog", required=True)
    p.add_argument("--center", required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--p", default=None, help="tilt vector (default 0)")
    p.add_argument("--h", type=float, default=None)
    common(p)
    p.set_defaults(func=cmd_sharp_min)

    p = sub.add_parser("determine", help="end-to-end determination experiment")
    p.add_argument("--instance", required=True,
                   help="builtin instance id or JSON file")
    p.add_argument("--csv", help="write the lattice table here")
    p.add_argument("--plot-data", dest="plot_data",
                   help="write (radius, max deviation) pairs here")
    p.add_argument("--plot", help="render the deviation curves to this image")
    p.add_argument("--h", type=float, default=None, help="lattice spacing")
    p.add_argument("--refine", type=int, default=0,
                   help="number of lattice halvings for the refinement curve")
    p.add_argument("--n-centers", dest="n_centers", type=int, default=3)
    common(p)
    p.set_defaults(func=cmd_determine)

    p = sub.add_parser("catalog-list", help="list fields and instances")
    common(p)
    p.set_defaults(func=cmd_catalog_list)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except json.JSONDecodeError as e:
        print(f"input error: malformed JSON at line {e.lineno} column {e.colno}: "
              f"{e.msg}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, DomainError, FileNotFoundError, KeyError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except PreconditionError as e:
        print(f"verified failure: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
