"""Symbolic fractal measures and their Fourier transforms.

A measure is an immutable expression tree.  Leaves are
:class:`SelfSimilarMeasure1D` and :class:`AtomicMeasure`; internal nodes are
:class:`Product`, :class:`ConvPower`, :class:`Mixture`, :class:`AffineImage`
and :class:`Projected`.  Every node evaluates its Fourier transform

    mu_hat(z) = integral of exp(-2 pi i z.x) d mu(x)

at arbitrary frequencies with a guaranteed absolute error.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels

MAX_DEPTH = 10_000
MAX_ATOMS = 1 << 24
DEFAULT_TAIL_TOL = 1e-9
_MERGE_DECIMALS = 12


class TruncationError(ArithmeticError):
    """The infinite product cannot meet the requested tolerance within MAX_DEPTH factors."""


class LevelOverflowError(ValueError):
    """A discretization would produce more than MAX_ATOMS atoms."""


def parse_number(value) -> float:
    """Accept numbers or strings such as ``"1/3"``; fractions are parsed exactly first."""
    if isinstance(value, str):
        return float(Fraction(value.strip()))
    return float(value)


def _as_points(z, d):
    """Reshape frequencies to ``(n, d)``; return the array and the output shape."""
    z = np.asarray(z, dtype=np.float64)
    if d == 1 and (z.ndim == 0 or z.shape[-1] != 1):
        shape = z.shape
        pts = z.reshape(-1, 1)
    else:
        if z.shape[-1] != d:
            raise ValueError(f"frequency has dimension {z.shape[-1]}, measure has {d}")
        shape = z.shape[:-1]
        pts = z.reshape(-1, d)
    if not np.all(np.isfinite(pts)):
        raise ValueError("frequencies must be finite")
    return pts, shape


class MeasureExpr:
    """Base class of the measure expression tree."""

    dim: int
    sub_probability: bool = False

    def mass(self) -> float:
        raise NotImplementedError

    def _ft(self, z: np.ndarray, tol: float) -> np.ndarray:
        """Transform at frequencies ``z`` of shape (n, dim), absolute error <= tol."""
        raise NotImplementedError

    def discretize(self, level: int) -> "AtomicMeasure":
        raise NotImplementedError

    def support_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned box containing the support."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def atom_count(self, level: int) -> int:
        raise NotImplementedError

    def diameter(self) -> float:
        lo, hi = self.support_box()
        return float(np.linalg.norm(hi - lo))

    def ft(self, z, tail_tol: float = DEFAULT_TAIL_TOL):
        return ft_eval(self, z, tail_tol)


# ----------------------------------------------------------------------------
# leaves
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SelfSimilarMeasure1D(MeasureExpr):
    """Stationary measure of the maps ``x -> ratio*x + t_j`` chosen with probabilities ``p_j``.

    ``osc`` records the open set condition.  When left as None it is decided
    with the convex-hull test: the first-level images of the hull may only
    touch at endpoints.
    """

    ratio: float
    translations: np.ndarray
    weights: np.ndarray
    osc: bool | None = None
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        r = parse_number(self.ratio)
        t = np.array([parse_number(x) for x in np.atleast_1d(self.translations)], dtype=np.float64)
        p = np.array([parse_number(x) for x in np.atleast_1d(self.weights)], dtype=np.float64)
        if not 0.0 < r < 1.0:
            raise ValueError(f"ratio must lie in (0, 1), got {r}")
        if t.shape != p.shape or t.size == 0:
            raise ValueError("translations and weights must be non-empty and of equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(p))):
            raise ValueError("translations and weights must be finite")
        if np.any(p < 0):
            raise ValueError("weights must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 (got {p.sum()!r})")
        if np.unique(t).size != t.size:
            raise ValueError("translations must be pairwise distinct")
        object.__setattr__(self, "ratio", r)
        object.__setattr__(self, "translations", t)
        object.__setattr__(self, "weights", p)
        if self.osc is None:
            object.__setattr__(self, "osc", _hull_osc(r, t))

    def hull(self) -> tuple[float, float]:
        r = self.ratio
        return float(self.translations.min() / (1 - r)), float(self.translations.max() / (1 - r))

    def support_box(self):
        a, b = self.hull()
        return np.array([a]), np.array([b])

    def mass(self):
        return 1.0

    def generator(self, eta):
        """The one-step factor ``g(eta) = sum_j p_j exp(-2 pi i t_j eta)``."""
        eta = np.asarray(eta, dtype=np.float64)
        return np.exp(-2j * np.pi * np.multiply.outer(eta, self.translations)) @ self.weights

    def truncation_depth(self, xi, tol):
        """Number of product factors needed so the neglected tail is within ``tol``.

        Uses ``|g(eta) - 1| <= 2 pi |eta| sum_j p_j |t_j|``; the tail product then
        differs from 1 by at most ``exp(2 pi c |xi| r^M / (1 - r)) - 1``.
        """
        xi = np.abs(np.asarray(xi, dtype=np.float64))
        c = float(np.dot(self.weights, np.abs(self.translations)))
        r = self.ratio
        depth = np.zeros(xi.shape, dtype=np.int64)
        if c == 0.0:
            return depth
        budget = math.log1p(tol) * (1 - r) / (2 * math.pi * c)
        big = xi > budget
        with np.errstate(divide="ignore"):
            m = np.ceil(np.log(budget / xi[big]) / math.log(r))
        depth[big] = m.astype(np.int64)
        if depth.size and depth.max() > MAX_DEPTH:
            raise TruncationError(
                f"tolerance {tol:g} needs {int(depth.max())} factors at |xi|={xi.max():g} (cap {MAX_DEPTH})"
            )
        return depth

    def _ft(self, z, tol):
        xi = z[:, 0]
        depth = self.truncation_depth(xi, tol)
        return _kernels.selfsimilar_ft(xi, self.ratio, self.translations, self.weights, depth)

    def atom_count(self, level):
        return self.translations.size ** level

    def discretize(self, level):
        _check_level(self, level)
        pos = np.zeros(1)
        w = np.ones(1)
        scale = 1.0
        for _ in range(level):
            pos = (pos[:, None] + scale * self.translations[None, :]).ravel()
            w = (w[:, None] * self.weights[None, :]).ravel()
            scale *= self.ratio
        pos = pos + scale * self.hull()[0]
        return AtomicMeasure(pos[:, None], w, sub_probability=True)

    def to_dict(self):
        return {
            "type": "selfsimilar1d",
            "ratio": self.ratio,
            "translations": self.translations.tolist(),
            "weights": self.weights.tolist(),
        }


def _hull_osc(r, t):
    ts = np.sort(t)
    a, b = ts[0] / (1 - r), ts[-1] / (1 - r)
    gaps = np.diff(ts)
    return bool(np.all(gaps >= r * (b - a) * (1 - 1e-12)))


@dataclass(frozen=True, eq=False)
class AtomicMeasure(MeasureExpr):
    """Finite weighted point set in R^d.

    Weights are rescaled to total mass 1 unless ``sub_probability`` is set, in
    which case they are kept and must total at most 1.
    """

    points: np.ndarray
    weights: np.ndarray
    sub_probability: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if pts.ndim != 2 or pts.shape[0] != w.size or w.size == 0:
            raise ValueError("points must be (m, d) with one weight per point")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise ValueError("atoms must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        total = w.sum()
        if self.sub_probability:
            if total > 1 + 1e-12:
                raise ValueError(f"total mass {total!r} exceeds 1")
        elif abs(total - 1.0) > 1e-12:
            if total <= 0:
                raise ValueError("total mass must be positive")
            w = w / total
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self):
        return self.points.shape[1]

    def mass(self):
        return float(self.weights.sum())

    def support_box(self):
        return self.points.min(axis=0), self.points.max(axis=0)

    def _ft(self, z, tol):
        return _kernels.atomic_ft(z, self.points, self.weights)

    def atom_count(self, level):
        return self.weights.size

    def discretize(self, level):
        return self

    def merged(self, decimals: int = _MERGE_DECIMALS) -> "AtomicMeasure":
        """Combine atoms whose coordinates agree after rounding."""
        key = np.round(self.points, decimals) + 0.0
        if key.shape[1] == 1:
            uniq, inv = np.unique(key[:, 0], return_inverse=True)
            uniq = uniq[:, None]
        else:
            uniq, inv = np.unique(key, axis=0, return_inverse=True)
        w = np.bincount(inv.ravel(), weights=self.weights, minlength=uniq.shape[0])
        return AtomicMeasure(uniq, w, sub_probability=True)

    def to_dict(self):
        return {
            "type": "atomic",
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
            "sub_probability": self.sub_probability,
        }


# ----------------------------------------------------------------------------
# internal nodes
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Product(MeasureExpr):
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValueError("product needs at least one factor")

    @property
    def dim(self):
        return sum(f.dim for f in self.factors)

    @property
    def sub_probability(self):
        return any(f.sub_probability for f in self.factors)

    def mass(self):
        return float(np.prod([f.mass() for f in self.factors]))

    def support_box(self):
        boxes = [f.support_box() for f in self.factors]
        return np.concatenate([b[0] for b in boxes]), np.concatenate([b[1] for b in boxes])

    def _ft(self, z, tol):
        # |prod a_i - prod b_i| <= sum |a_i - b_i| when all moduli are <= 1
        sub_tol = tol / len(self.factors)
        out = np.ones(z.shape[0], dtype=np.complex128)
        start = 0
        for f in self.factors:
            out *= f._ft(z[:, start:start + f.dim], sub_tol)
            start += f.dim
        return out

    def atom_count(self, level):
        return math.prod(f.atom_count(level) for f in self.factors)

    def discretize(self, level):
        _check_level(self, level)
        parts = [f.discretize(level) for f in self.factors]
        pts = parts[0].points
        w = parts[0].weights
        for q in parts[1:]:
            n, m = w.size, q.weights.size
            pts = np.hstack([np.repeat(pts, m, axis=0), np.tile(q.points, (n, 1))])
            w = np.outer(w, q.weights).ravel()
        return AtomicMeasure(pts, w, sub_probability=True)

    def to_dict(self):
        return {"type": "product", "factors": [f.to_dict() for f in self.factors]}


@dataclass(frozen=True, eq=False)
class ConvPower(MeasureExpr):
    """n-fold self-convolution of ``base``."""

    base: MeasureExpr
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("convolution power must be a positive integer")
        object.__setattr__(self, "n", int(self.n))

    @property
    def dim(self):
        return self.base.dim

    @property
    def sub_probability(self):
        return self.base.sub_probability

    def mass(self):
        return self.base.mass() ** self.n

    def support_box(self):
        lo, hi = self.base.support_box()
        return self.n * lo, self.n * hi

    def _ft(self, z, tol):
        return self.base._ft(z, tol / self.n) ** self.n

    def atom_count(self, level):
        return self.base.atom_count(level) ** self.n

    def discretize(self, level):
        _check_level(self, level)
        one = self.base.discretize(level)
        acc = one
        for _ in range(self.n - 1):
            pts = (acc.points[:, None, :] + one.points[None, :, :]).reshape(-1, self.dim)
            w = np.outer(acc.weights, one.weights).ravel()
            acc = AtomicMeasure(pts, w, sub_probability=True).merged()
        return acc

    def to_dict(self):
        return {"type": "convpower", "n": self.n, "base": self.base.to_dict()}


@dataclass(frozen=True, eq=False)
class Mixture(MeasureExpr):
    """Convex combination ``sum_i c_i mu_i``."""

    components: tuple
    coefficients: np.ndarray
    sub_probability: bool = False

    def __post_init__(self):
        comps = tuple(self.components)
        c = np.asarray([parse_number(x) for x in self.coefficients], dtype=np.float64)
        if not comps or c.size != len(comps):
            raise ValueError("one coefficient per component is required")
        if len({m.dim for m in comps}) != 1:
            raise ValueError("mixture components must share the ambient dimension")
        if np.any(c < 0):
            raise ValueError("coefficients must be nonnegative")
        if not self.sub_probability and abs(c.sum() - 1.0) > 1e-12:
            c = c / c.sum()
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "coefficients", c)
        if self.mass() > 1 + 1e-12:
            raise ValueError("mixture mass exceeds 1")

    @property
    def dim(self):
        return self.components[0].dim

    def mass(self):
        return float(sum(c * m.mass() for c, m in zip(self.coefficients, self.components)))

    def support_box(self):
        boxes = [m.support_box() for m in self.components]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)

    def _ft(self, z, tol):
        out = np.zeros(z.shape[0], dtype=np.complex128)
        for c, m in zip(self.coefficients, self.components):
            out += c * m._ft(z, tol)
        return out

    def atom_count(self, level):
        return sum(m.atom_count(level) for m in self.components)

    def discretize(self, level):
        _check_level(self, level)
        parts = [m.discretize(level) for m in self.components]
        pts = np.vstack([q.points for q in parts])
        w = np.concatenate([c * q.weights for c, q in zip(self.coefficients, parts)])
        return AtomicMeasure(pts, w, sub_probability=True)

    def to_dict(self):
        return {
            "type": "mixture",
            "weights": self.coefficients.tolist(),
            "components": [m.to_dict() for m in self.components],
        }


@dataclass(frozen=True, eq=False)
class AffineImage(MeasureExpr):
    """Push-forward under ``x -> scale * x + shift`` (coordinatewise)."""

    base: MeasureExpr
    scale: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        d = self.base.dim
        s = np.broadcast_to(np.asarray([parse_number(x) for x in np.atleast_1d(self.scale)]), (d,)).copy()
        b = np.broadcast_to(np.asarray([parse_number(x) for x in np.atleast_1d(self.shift)]), (d,)).copy()
        object.__setattr__(self, "scale", s)
        object.__setattr__(self, "shift", b)

    @property
    def dim(self):
        return self.base.dim

    @property
    def sub_probability(self):
        return self.base.sub_probability

    def mass(self):
        return self.base.mass()

    def support_box(self):
        lo, hi = self.base.support_box()
        a, b = self.scale * lo + self.shift, self.scale * hi + self.shift
        return np.minimum(a, b), np.maximum(a, b)

    def _ft(self, z, tol):
        phase = np.exp(-2j * np.pi * (z @ self.shift))
        return phase * self.base._ft(z * self.scale, tol)

    def atom_count(self, level):
        return self.base.atom_count(level)

    def discretize(self, level):
        q = self.base.discretize(level)
        return AtomicMeasure(q.points * self.scale + self.shift, q.weights, sub_probability=True)

    def to_dict(self):
        return {
            "type": "affine",
            "scale": self.scale.tolist(),
            "shift": self.shift.tolist(),
            "base": self.base.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class Projected(MeasureExpr):
    """Push-forward of ``base`` under the orthogonal projection onto a k-plane.

    ``frame`` is any object with ``basis`` (k x d, orthonormal rows); the
    transform is ``mu_V_hat(y) = mu_hat(y_V)`` with ``y_V = y @ basis``.
    """

    base: MeasureExpr
    frame: object

    def __post_init__(self):
        basis = np.asarray(self.frame.basis)
        if basis.shape[1] != self.base.dim:
            raise ValueError(f"frame lives in R^{basis.shape[1]}, measure in R^{self.base.dim}")

    @property
    def dim(self):
        return np.asarray(self.frame.basis).shape[0]

    @property
    def sub_probability(self):
        return self.base.sub_probability

    def mass(self):
        return self.base.mass()

    def support_box(self):
        lo, hi = self.base.support_box()
        basis = np.asarray(self.frame.basis)
        centre = basis @ ((lo + hi) / 2)
        rad = np.linalg.norm(hi - lo) / 2
        return centre - rad, centre + rad

    def _ft(self, z, tol):
        return self.base._ft(z @ np.asarray(self.frame.basis), tol)

    def atom_count(self, level):
        return self.base.atom_count(level)

    def discretize(self, level):
        raise ValueError("discretize the base measure and project the atoms instead")

    def to_dict(self):
        return {
            "type": "projected",
            "frame": np.asarray(self.frame.basis).tolist(),
            "base": self.base.to_dict(),
        }


def _check_level(measure, level):
    if int(level) != level or level < 0:
        raise ValueError("level must be a nonnegative integer")
    count = measure.atom_count(level)
    if count > MAX_ATOMS:
        raise LevelOverflowError(f"level {level} would create {count} atoms (cap {MAX_ATOMS})")


# ----------------------------------------------------------------------------
# operations
# ----------------------------------------------------------------------------

def ft_eval(measure: MeasureExpr, z, tail_tol: float = DEFAULT_TAIL_TOL):
    """Fourier transform of ``measure`` at ``z`` with absolute error at most ``tail_tol``.

    ``z`` is a point or an array of points with trailing axis ``dim`` (for
    d = 1 plain scalars / 1-d arrays are accepted too).
    """
    if not 0.0 < tail_tol <= 1e-3:
        raise ValueError("tail_tol must lie in (0, 1e-3]")
    pts, shape = _as_points(z, measure.dim)
    out = measure._ft(pts, tail_tol).reshape(shape)
    return out[()] if out.ndim == 0 else out


def discretize(measure: MeasureExpr, level: int) -> AtomicMeasure:
    """Level-``level`` cylinder representatives (left endpoints / corners) with exact weights."""
    return measure.discretize(level)


def mass(measure: MeasureExpr) -> float:
    return measure.mass()


def dirac(point: Sequence[float] | float = 0.0) -> AtomicMeasure:
    return AtomicMeasure(np.atleast_1d(np.asarray(point, dtype=float))[None, :], [1.0])


def lebesgue_unit() -> SelfSimilarMeasure1D:
    """Lebesgue measure on [0, 1] as the self-similar measure of the two halving maps."""
    return SelfSimilarMeasure1D(0.5, [0.0, 0.5], [0.5, 0.5])


def convolve_selfsimilar(measure: SelfSimilarMeasure1D, n: int = 2) -> SelfSimilarMeasure1D:
    """The n-fold self-convolution written again as a self-similar measure.

    Equal contraction ratios make ``mu^{*n}`` self-similar with translation set
    the n-fold sumset of the translations and convolved weights.
    """
    t = np.zeros(1)
    p = np.ones(1)
    for _ in range(n):
        t = np.add.outer(t, measure.translations).ravel()
        p = np.outer(p, measure.weights).ravel()
    key = np.round(t, _MERGE_DECIMALS)
    uniq, inv = np.unique(key, return_inverse=True)
    w = np.bincount(inv, weights=p)
    return SelfSimilarMeasure1D(measure.ratio, uniq, w / w.sum())


# ----------------------------------------------------------------------------
# JSON description format
# ----------------------------------------------------------------------------

def from_dict(desc: dict) -> MeasureExpr:
    kind = desc.get("type")
    if kind == "selfsimilar1d":
        return SelfSimilarMeasure1D(desc["ratio"], desc["translations"], desc["weights"], desc.get("osc"))
    if kind == "atomic":
        return AtomicMeasure(desc["points"], desc["weights"], bool(desc.get("sub_probability", False)))
    if kind == "product":
        return Product(tuple(from_dict(f) for f in desc["factors"]))
    if kind == "convpower":
        return ConvPower(from_dict(desc["base"]), int(desc["n"]))
    if kind == "mixture":
        return Mixture(tuple(from_dict(c) for c in desc["components"]), desc["weights"],
                       bool(desc.get("sub_probability", False)))
    if kind == "affine":
        return AffineImage(from_dict(desc["base"]), desc["scale"], desc["shift"])
    if kind == "projected":
        from .projection import Frame

        return Projected(from_dict(desc["base"]), Frame.from_rows(desc["frame"]))
    if kind == "cantor":
        a = parse_number(desc["alpha"])
        return SelfSimilarMeasure1D(a, [0.0, 1.0 - a], [0.5, 0.5])
    if kind == "lebesgue":
        return lebesgue_unit()
    raise ValueError(f"unknown measure type {kind!r}")


def to_dict(measure: MeasureExpr) -> dict:
    return measure.to_dict()


def load_measure(path) -> MeasureExpr:
    with open(path) as fh:
        return from_dict(json.load(fh))


def dumps_measure(measure: MeasureExpr) -> str:
    return json.dumps(measure.to_dict(), indent=2)
