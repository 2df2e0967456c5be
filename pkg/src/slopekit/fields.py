"""Analytic scalar fields over R^dim with exact subdifferential rules.

The numerical side of the toolkit only ever *probes* directional behaviour;
set-valued subdifferentials are never reconstructed numerically.  Every
catalog entry therefore pairs a vectorised evaluation rule with an analytic
per-point convex set (singleton gradient, polytope, ball or Minkowski sum).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convexsets import ConvexSet
from .spaces import InputError

KINK_TOL = 1e-12


class Field:
    """Base class: a proper function R^dim -> R with a subdifferential rule."""

    dim: int
    convex: bool = False

    def value(self, x) -> np.ndarray:
        raise NotImplementedError

    def subdiff(self, x) -> ConvexSet | None:
        raise NotImplementedError

    def lip_bound(self, center, radius: float) -> float:
        """Upper bound on the Lipschitz constant over B(center; radius)."""
        raise NotImplementedError

    def curvature_bound(self, center, radius: float) -> float:
        """Gradient-Lipschitz bound where smooth; kinks contribute zero
        (piecewise-linear parts) or their smooth branch curvature."""
        raise NotImplementedError

    # sugar ------------------------------------------------------------
    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))

    def at(self, x) -> float:
        return float(self.value(np.asarray(x, dtype=float)))

    def __add__(self, other):
        if isinstance(other, Field):
            return Sum([self, other])
        return AddConst(self, float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Field):
            raise TypeError("subtract fields via explicit scaling of smooth terms")
        return AddConst(self, -float(other))

    def __mul__(self, alpha):
        return Scaled(self, float(alpha))

    __rmul__ = __mul__

    def translated(self, shift) -> "Translated":
        return Translated(self, shift)


class Quadratic(Field):
    """f(x) = (a/2) * ||x||^2 + <b, x> + const."""

    def __init__(self, dim: int, a: float = 0.0, b=None, const: float = 0.0):
        self.dim = int(dim)
        self.a = float(a)
        self.b = np.zeros(self.dim) if b is None else np.asarray(b, dtype=float)
        if self.b.shape != (self.dim,):
            raise InputError("linear coefficient has wrong dimension")
        self.const = float(const)
        self.convex = self.a >= 0

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.a * np.sum(x * x, axis=-1) + x @ self.b + self.const

    def gradient(self, x) -> np.ndarray:
        return self.a * np.asarray(x, dtype=float) + self.b

    def subdiff(self, x):
        return ConvexSet.singleton(self.gradient(x))

    def lip_bound(self, center, radius):
        c = np.asarray(center, dtype=float)
        return abs(self.a) * (np.linalg.norm(c) + radius) + float(np.linalg.norm(self.b))

    def curvature_bound(self, center, radius):
        return abs(self.a)


class Linear(Quadratic):
    def __init__(self, b, const: float = 0.0):
        b = np.atleast_1d(np.asarray(b, dtype=float))
        super().__init__(len(b), 0.0, b, const)


class NormPower(Field):
    """f(x) = coeff * ||x||^power, power >= 2 (C^1, smooth away from 0)."""

    def __init__(self, dim: int, coeff: float, power: float):
        if power < 2:
            raise InputError("norm power must be >= 2 for a C^1 field")
        self.dim = int(dim)
        self.coeff = float(coeff)
        self.power = float(power)
        self.convex = self.coeff >= 0

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.coeff * np.linalg.norm(x, axis=-1) ** self.power

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        if r == 0:
            return np.zeros(self.dim)
        return self.coeff * self.power * r ** (self.power - 2.0) * x

    def subdiff(self, x):
        return ConvexSet.singleton(self.gradient(x))

    def lip_bound(self, center, radius):
        R = float(np.linalg.norm(np.asarray(center, dtype=float))) + radius
        return abs(self.coeff) * self.power * R ** (self.power - 1.0)

    def curvature_bound(self, center, radius):
        R = float(np.linalg.norm(np.asarray(center, dtype=float))) + radius
        if self.power == 2.0:
            return 2.0 * abs(self.coeff)
        return abs(self.coeff) * self.power * (self.power - 1.0) * R ** (self.power - 2.0)


class Norm(Field):
    """f(x) = weight * ||x - anchor|| (convex; ball subdifferential at the anchor)."""

    def __init__(self, dim: int, weight: float = 1.0, anchor=None):
        if weight <= 0:
            raise InputError("norm weight must be positive")
        self.dim = int(dim)
        self.weight = float(weight)
        self.anchor = np.zeros(self.dim) if anchor is None else np.asarray(anchor, dtype=float)
        self.convex = True

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.weight * np.linalg.norm(x - self.anchor, axis=-1)

    def subdiff(self, x):
        v = np.asarray(x, dtype=float) - self.anchor
        r = np.linalg.norm(v)
        if r <= KINK_TOL:
            return ConvexSet.norm_ball(np.zeros(self.dim), self.weight)
        return ConvexSet.singleton(self.weight * v / r)

    def lip_bound(self, center, radius):
        return self.weight

    def curvature_bound(self, center, radius):
        # Hessian norm of weight*||x - a|| is weight / ||x - a||
        gap = float(np.linalg.norm(np.atleast_1d(center) - self.anchor)) - radius
        if gap <= 0:
            return math.inf
        return self.weight / gap


class AbsSum(Field):
    """f(x) = weight * sum_i |x_i| (the l1 norm; box subdifferential at kinks)."""

    def __init__(self, dim: int, weight: float = 1.0):
        if weight <= 0:
            raise InputError("l1 weight must be positive")
        self.dim = int(dim)
        self.weight = float(weight)
        self.convex = True

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.weight * np.sum(np.abs(x), axis=-1)

    def subdiff(self, x):
        x = np.asarray(x, dtype=float)
        per_coord = []
        for xi in x:
            if xi > KINK_TOL:
                per_coord.append([self.weight])
            elif xi < -KINK_TOL:
                per_coord.append([-self.weight])
            else:
                per_coord.append([-self.weight, self.weight])
        mesh = np.meshgrid(*per_coord, indexing="ij")
        V = np.stack([m.ravel() for m in mesh], axis=1)
        return ConvexSet.polytope(V)

    def lip_bound(self, center, radius):
        return self.weight * math.sqrt(self.dim)

    def curvature_bound(self, center, radius):
        return 0.0


class MaxZero(Field):
    """f(x) = max(0, inner(x)) for a smooth inner field (convex-composite)."""

    def __init__(self, inner: Field):
        if not hasattr(inner, "gradient"):
            raise InputError("max-zero composition needs a smooth inner field")
        self.inner = inner
        self.dim = inner.dim
        self.convex = inner.convex

    def value(self, x):
        return np.maximum(0.0, self.inner.value(x))

    def subdiff(self, x):
        v = self.inner.at(x)
        g = self.inner.gradient(np.asarray(x, dtype=float))
        if v < -KINK_TOL:
            return ConvexSet.singleton(np.zeros(self.dim))
        if v > KINK_TOL:
            return ConvexSet.singleton(g)
        return ConvexSet.polytope(np.stack([np.zeros(self.dim), g]))

    def lip_bound(self, center, radius):
        return self.inner.lip_bound(center, radius)

    def curvature_bound(self, center, radius):
        # across the switching surface the gradient jumps by ||grad inner||
        return self.inner.curvature_bound(center, radius)


class Sum(Field):
    def __init__(self, terms):
        terms = list(terms)
        if not terms:
            raise InputError("sum field needs at least one term")
        dims = {t.dim for t in terms}
        if len(dims) != 1:
            raise InputError("sum of fields with incompatible dimensions")
        self.terms = terms
        self.dim = terms[0].dim
        self.convex = all(t.convex for t in terms)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = self.terms[0].value(x)
        for t in self.terms[1:]:
            out = out + t.value(x)
        return out

    def subdiff(self, x):
        acc = None
        for t in self.terms:
            s = t.subdiff(x)
            if s is None:
                return None
            acc = s if acc is None else acc.minkowski(s)
        return acc

    def lip_bound(self, center, radius):
        return sum(t.lip_bound(center, radius) for t in self.terms)

    def curvature_bound(self, center, radius):
        return sum(t.curvature_bound(center, radius) for t in self.terms)


class Scaled(Field):
    def __init__(self, inner: Field, alpha: float):
        if alpha <= 0:
            raise InputError("fields are scaled by positive factors only")
        self.inner = inner
        self.alpha = float(alpha)
        self.dim = inner.dim
        self.convex = inner.convex

    def value(self, x):
        return self.alpha * self.inner.value(x)

    def subdiff(self, x):
        s = self.inner.subdiff(x)
        return None if s is None else s.scaled(self.alpha)

    def lip_bound(self, center, radius):
        return self.alpha * self.inner.lip_bound(center, radius)

    def curvature_bound(self, center, radius):
        return self.alpha * self.inner.curvature_bound(center, radius)


class AddConst(Field):
    def __init__(self, inner: Field, const: float):
        self.inner = inner
        self.const = float(const)
        self.dim = inner.dim
        self.convex = inner.convex

    def value(self, x):
        return self.inner.value(x) + self.const

    def subdiff(self, x):
        return self.inner.subdiff(x)

    def lip_bound(self, center, radius):
        return self.inner.lip_bound(center, radius)

    def curvature_bound(self, center, radius):
        return self.inner.curvature_bound(center, radius)


class Translated(Field):
    """f(x) = inner(x - shift)."""

    def __init__(self, inner: Field, shift):
        self.inner = inner
        self.shift = np.asarray(shift, dtype=float)
        if self.shift.shape != (inner.dim,):
            raise InputError("translation vector has wrong dimension")
        self.dim = inner.dim
        self.convex = inner.convex

    def value(self, x):
        return self.inner.value(np.asarray(x, dtype=float) - self.shift)

    def subdiff(self, x):
        return self.inner.subdiff(np.asarray(x, dtype=float) - self.shift)

    def lip_bound(self, center, radius):
        return self.inner.lip_bound(np.asarray(center, dtype=float) - self.shift, radius)

    def curvature_bound(self, center, radius):
        return self.inner.curvature_bound(np.asarray(center, dtype=float) - self.shift, radius)


# -- catalog ------------------------------------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    kind: str  # smooth | convex | composite | sum
    field: Field
    lipschitz_flag: bool = True
    f_regular_flag: bool = True

    @property
    def dim(self) -> int:
        return self.field.dim


def default_catalog() -> dict[str, CatalogEntry]:
    """The shipped function catalog (all entries locally Lipschitz, F-regular)."""
    entries = [
        CatalogEntry("quad_bowl_1d", "convex", Quadratic(1, a=1.0)),
        CatalogEntry("quad_bowl_2d", "convex", Quadratic(2, a=1.0)),
        CatalogEntry("tilted_quad_1d", "convex", Quadratic(1, a=1.0, b=[0.3])),
        CatalogEntry("linear_2d", "convex", Linear([0.3, 0.4])),
        CatalogEntry("neg_square_1d", "smooth", Quadratic(1, a=-2.0)),
        CatalogEntry("neg_square_2d", "smooth", Quadratic(2, a=-2.0)),
        CatalogEntry("tilted_neg_square_1d", "smooth", Quadratic(1, a=-2.0, b=[0.3])),
        CatalogEntry("neg_cube_2d", "smooth", NormPower(2, coeff=-1.0, power=3.0)),
        CatalogEntry("abs_1d", "convex", AbsSum(1)),
        CatalogEntry("l1_2d", "convex", AbsSum(2)),
        CatalogEntry("norm_2d", "convex", Norm(2)),
        CatalogEntry(
            "composite_2d",
            "composite",
            Sum([MaxZero(Quadratic(2, a=2.0, const=-1.0)), Quadratic(2, a=2.0)]),
        ),
        CatalogEntry(
            "kink_tilt_1d",
            "sum",
            Sum([AbsSum(1), Linear([-2.0])]),
        ),
    ]
    return {e.id: e for e in entries}


_FORM_KEYS = {
    "quadratic": {"form", "dim", "a", "b", "const"},
    "linear": {"form", "b", "const"},
    "norm_power": {"form", "dim", "coeff", "power"},
    "norm": {"form", "dim", "weight", "anchor"},
    "abs_sum": {"form", "dim", "weight"},
    "max_zero": {"form", "inner"},
    "sum": {"form", "terms"},
    "scaled": {"form", "alpha", "inner"},
    "add_const": {"form", "const", "inner"},
    "translated": {"form", "shift", "inner"},
}


def field_from_dict(doc: dict) -> Field:
    """Strict recursive field parser for catalog and instance files."""
    if not isinstance(doc, dict) or "form" not in doc:
        raise InputError("field spec must be an object with a 'form' key")
    form = doc["form"]
    if form not in _FORM_KEYS:
        raise InputError(f"unknown field form {form!r}")
    extra = set(doc) - _FORM_KEYS[form]
    if extra:
        raise InputError(f"unknown keys in {form} field spec: {sorted(extra)}")
    if form == "quadratic":
        b = doc.get("b")
        dim = doc.get("dim", len(b) if b is not None else None)
        if dim is None:
            raise InputError("quadratic field needs 'dim' or 'b'")
        return Quadratic(int(dim), float(doc.get("a", 0.0)), b, float(doc.get("const", 0.0)))
    if form == "linear":
        return Linear(doc["b"], float(doc.get("const", 0.0)))
    if form == "norm_power":
        return NormPower(int(doc["dim"]), float(doc["coeff"]), float(doc["power"]))
    if form == "norm":
        return Norm(int(doc["dim"]), float(doc.get("weight", 1.0)), doc.get("anchor"))
    if form == "abs_sum":
        return AbsSum(int(doc["dim"]), float(doc.get("weight", 1.0)))
    if form == "max_zero":
        return MaxZero(field_from_dict(doc["inner"]))
    if form == "sum":
        return Sum([field_from_dict(t) for t in doc["terms"]])
    if form == "scaled":
        return Scaled(field_from_dict(doc["inner"]), float(doc["alpha"]))
    if form == "add_const":
        return AddConst(field_from_dict(doc["inner"]), float(doc["const"]))
    return Translated(field_from_dict(doc["inner"]), doc["shift"])


_ENTRY_KEYS = {"id", "kind", "params", "lipschitz_flag", "f_regular_flag"}
_ENTRY_KINDS = {"smooth", "convex", "composite", "sum"}


def entry_from_dict(doc: dict) -> CatalogEntry:
    if not isinstance(doc, dict):
        raise InputError("catalog entry must be a JSON object")
    extra = set(doc) - _ENTRY_KEYS
    if extra:
        raise InputError(f"unknown keys in catalog entry: {sorted(extra)}")
    kind = doc.get("kind")
    if kind not in _ENTRY_KINDS:
        raise InputError(f"catalog entry kind must be one of {sorted(_ENTRY_KINDS)}")
    field = field_from_dict(doc["params"])
    if kind == "convex" and not field.convex:
        raise InputError("entry declared convex but the field is not")
    return CatalogEntry(
        id=str(doc["id"]),
        kind=kind,
        field=field,
        lipschitz_flag=bool(doc.get("lipschitz_flag", True)),
        f_regular_flag=bool(doc.get("f_regular_flag", True)),
    )
