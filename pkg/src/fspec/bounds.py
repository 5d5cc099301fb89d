"""Exceptional-set bounds for orthogonal projections.

Every calculator works on a :class:`SetProfile` (ambient dimension, Hausdorff
and Fourier dimensions, and the Fourier spectrum ``theta -> dim_F^theta``) and
returns upper bounds for

    dim_H { V in G(d, k) : dim_H P_V(X) < u },

clamped to ``[0, k(d-k)]``, the dimension of the Grassmannian.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .measures import parse_number

DEFAULT_THETA_GRID = np.round(np.arange(0, 101) / 100, 2)
MARGIN = 1e-9
_TOL = 1e-9

CLASSICAL = ("kaufman", "kaufman_general", "bourgain_oberlin", "ren_wang", "mattila", "peres_schlag", "he")


class Truth(enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNCERTAIN = "uncertain"

    def __bool__(self):
        return self is Truth.HOLDS


# ----------------------------------------------------------------------------
# profiles
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SetProfile:
    """Dimension data of a set X in R^d.

    The spectrum is either one of the closed forms ``salem`` (constant
    ``dim_H``), ``linear`` (``theta * dim_H``) and ``capped_linear``
    (``min(dim_F + slope * theta, dim_H)``), or a ``grid`` of sampled values
    with optional standard errors.  Grids are only evaluated at their own
    nodes unless ``interpolate`` is set.
    """

    d: int
    dim_H: float
    dim_F: float
    kind: str = "grid"
    theta: np.ndarray = field(default_factory=lambda: DEFAULT_THETA_GRID.copy())
    values: np.ndarray | None = None
    stderr: np.ndarray | None = None
    slope: float | None = None
    interpolate: bool = False
    sobolev_conv: dict = field(default_factory=dict)
    tol: float = 1e-6

    def __post_init__(self):
        if self.kind not in ("grid", "salem", "linear", "capped_linear"):
            raise ValueError(f"unknown spectrum type {self.kind!r}")
        th = np.asarray(self.theta, dtype=float)
        order = np.argsort(th)
        th = th[order]
        if th.size == 0 or th[0] < 0 or th[-1] > 1 or np.any(np.diff(th) <= 0):
            raise ValueError("theta grid must be distinct values in [0, 1]")
        object.__setattr__(self, "theta", th)
        if self.kind == "grid":
            if self.values is None:
                raise ValueError("grid spectrum needs values")
            v = np.asarray(self.values, dtype=float)[order]
            se = np.zeros_like(v) if self.stderr is None else np.asarray(self.stderr, dtype=float)[order]
            if v.shape != th.shape or se.shape != th.shape:
                raise ValueError("theta, values and stderr must have equal length")
        else:
            v = self._closed(th)
            se = np.zeros_like(v)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "stderr", se)
        object.__setattr__(self, "sobolev_conv", {int(n): float(x) for n, x in dict(self.sobolev_conv).items()})
        self.validate()

    # constructors ------------------------------------------------------------

    @classmethod
    def salem(cls, d, dim_H, **kw):
        return cls(d, dim_H, dim_H, kind="salem", **kw)

    @classmethod
    def linear(cls, d, dim_H, **kw):
        return cls(d, dim_H, 0.0, kind="linear", **kw)

    @classmethod
    def capped_linear(cls, d, dim_H, dim_F, slope, **kw):
        return cls(d, dim_H, dim_F, kind="capped_linear", slope=slope, **kw)

    @classmethod
    def from_grid(cls, d, dim_H, theta, values, stderr=None, dim_F=None, **kw):
        theta = np.asarray(theta, dtype=float)
        values = np.asarray(values, dtype=float)
        if dim_F is None:
            if not np.any(theta == 0):
                raise ValueError("dim_F must be given when the grid lacks theta = 0")
            dim_F = float(values[theta == 0][0])
        return cls(d, dim_H, dim_F, kind="grid", theta=theta, values=values, stderr=stderr, **kw)

    @classmethod
    def from_estimates(cls, d, dim_H, estimates, **kw):
        """Profile from a list of spectrum estimates (values clamped to ``[0, d]``)."""
        th = [e.theta for e in estimates]
        vals = [min(max(e.s_hat, 0.0), d) for e in estimates]
        se = [e.stderr for e in estimates]
        return cls.from_grid(d, dim_H, th, vals, se, **kw)

    # evaluation ------------------------------------------------------------

    def _closed(self, th):
        th = np.asarray(th, dtype=float)
        if self.kind == "salem":
            return np.full(th.shape, float(self.dim_H))
        if self.kind == "linear":
            return th * self.dim_H
        return np.minimum(self.dim_F + self.slope * th, self.dim_H)

    def spectrum(self, theta) -> float:
        theta = float(theta)
        if not 0 <= theta <= 1:
            raise ValueError("theta must lie in [0, 1]")
        if self.kind != "grid":
            return float(self._closed(theta))
        hit = np.flatnonzero(np.abs(self.theta - theta) <= 1e-12)
        if hit.size:
            return float(self.values[hit[0]])
        if self.interpolate and self.theta[0] <= theta <= self.theta[-1]:
            return float(np.interp(theta, self.theta, self.values))
        raise ValueError(f"theta={theta} is not a node of the sampled spectrum")

    def sigma(self, theta) -> float:
        if self.kind != "grid":
            return 0.0
        hit = np.flatnonzero(np.abs(self.theta - float(theta)) <= 1e-12)
        if hit.size:
            return float(self.stderr[hit[0]])
        return float(np.interp(theta, self.theta, self.stderr))

    def grid(self, positive=False):
        """Spectrum nodes ``(theta, value, stderr)``; ``positive`` drops theta = 0."""
        keep = self.theta > 0 if positive else np.ones(self.theta.size, bool)
        return self.theta[keep], self.values[keep], self.stderr[keep]

    def validate(self):
        d, t = self.d, self.tol
        if int(d) != d or d < 1:
            raise ValueError("d must be a positive integer")
        if not -t <= self.dim_H <= d + t:
            raise ValueError("dim_H must lie in [0, d]")
        if not -t <= self.dim_F <= self.dim_H + t:
            raise ValueError("dim_F must lie in [0, dim_H]")
        th, v, se = self.theta, self.values, self.stderr
        slack = t + 2 * se
        if np.any(se < 0):
            raise ValueError("standard errors must be nonnegative")
        if th[0] == 0 and abs(v[0] - self.dim_F) > slack[0]:
            raise ValueError("spectrum(0) must equal dim_F")
        if th[-1] == 1 and v[-1] > self.dim_H + slack[-1]:
            raise ValueError("spectrum(1) must not exceed dim_H")
        if np.any(np.diff(v) < -(slack[1:] + slack[:-1])):
            raise ValueError("spectrum must be non-decreasing in theta")
        if np.any(v > self.dim_F + d * th + slack):
            raise ValueError("spectrum must satisfy spectrum(theta) <= dim_F + d*theta")

    # io ------------------------------------------------------------------

    def to_dict(self) -> dict:
        desc = {"type": self.kind}
        if self.kind == "grid":
            desc.update(theta=self.theta.tolist(), values=self.values.tolist(),
                        stderr=self.stderr.tolist(), interpolate=self.interpolate)
        elif self.kind == "capped_linear":
            desc["slope"] = self.slope
        out = {"d": self.d, "dim_H": self.dim_H, "dim_F": self.dim_F, "spectrum": desc}
        if self.sobolev_conv:
            out["sobolev_conv"] = {str(n): v for n, v in sorted(self.sobolev_conv.items())}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SetProfile":
        desc = data.get("spectrum", {"type": "grid"})
        kind = desc.get("type", "grid")
        common = dict(
            d=int(data["d"]),
            dim_H=parse_number(data["dim_H"]),
            dim_F=parse_number(data.get("dim_F", 0.0)),
            kind=kind,
            sobolev_conv={int(n): parse_number(v) for n, v in data.get("sobolev_conv", {}).items()},
        )
        if kind == "grid":
            common.update(
                theta=[parse_number(x) for x in desc["theta"]],
                values=[parse_number(x) for x in desc["values"]],
                stderr=desc.get("stderr"),
                interpolate=bool(desc.get("interpolate", False)),
            )
        elif kind == "capped_linear":
            common["slope"] = parse_number(desc["slope"])
        return cls(**common)


def load_profile(path) -> SetProfile:
    with open(path) as fh:
        return SetProfile.from_dict(json.load(fh))


# ----------------------------------------------------------------------------
# classical bounds
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundValue:
    value: float
    valid: bool


def _cap(x, k, d):
    return float(min(max(x, 0.0), k * (d - k)))


def _check_k(d, k):
    if int(k) != k or not 1 <= k < d:
        raise ValueError(f"need an integer 1 <= k < d, got k={k}, d={d}")


def _check_u(u, k, measure=False):
    if u < 0 or (not measure and u > k):
        raise ValueError(f"u must lie in [0, k] = [0, {k}]")


def classical_bounds(profile: SetProfile, k: int, u: float) -> dict[str, BoundValue]:
    """The classical exceptional-set bounds at ``u`` with their validity flags."""
    d, s = profile.d, profile.dim_H
    _check_k(d, k)
    _check_u(u, k)
    full = k * (d - k)
    raw = {
        "kaufman": (u, d == 2 and k == 1 and u <= s),
        "kaufman_general": (d - 2 + u, k == 1 and s <= 1 and u <= s),
        "bourgain_oberlin": (0.0, d == 2 and k == 1 and u <= s / 2),
        "ren_wang": (2 * u - s, d == 2 and k == 1 and s / 2 <= u <= min(s, 1)),
        "mattila": (k * (d - k - 1) + u, s <= k and u <= s),
        "peres_schlag": (full + u - s, 0 <= u <= k),
        "he": (full - 1, s < d and u <= k * s / d),
    }
    return {name: BoundValue(_cap(v, k, d), bool(ok)) for name, (v, ok) in raw.items()}


def peres_schlag_figure_variant(profile: SetProfile, k: int, u: float) -> float:
    """``max(0, k + u - dim_H)``, the curve drawn in the published k = 1 panel."""
    return _cap(k + u - profile.dim_H, k, profile.d)


@dataclass(frozen=True)
class MethodCurve:
    name: str
    values: np.ndarray
    valid: np.ndarray


@dataclass(frozen=True)
class BoundProfile:
    """Bound values of every method over a u-grid, with the pointwise minimum of the valid ones."""

    k: int
    d: int
    u: np.ndarray
    methods: tuple
    minimum: np.ndarray
    argmin: tuple

    @property
    def cap(self):
        return self.k * (self.d - self.k)

    def method(self, name) -> MethodCurve:
        for m in self.methods:
            if m.name == name:
                return m
        raise KeyError(name)

    def rows(self):
        """``(u, method, value, valid)`` tuples in u-major order."""
        for i, u in enumerate(self.u):
            for m in self.methods:
                yield float(u), m.name, float(m.values[i]), bool(m.valid[i])


def bound_profile(profile: SetProfile, k: int, u_grid, *, include_spectrum=True) -> BoundProfile:
    """Evaluate all calculators on ``u_grid``; the spectrum bound uses its best theta / n."""
    u_grid = np.asarray(u_grid, dtype=float)
    if u_grid.size == 0 or np.any(np.diff(u_grid) < 0):
        raise ValueError("u grid must be non-empty and sorted")
    names = list(CLASSICAL) + (["fourier_spectrum"] if include_spectrum else [])
    vals = {n: np.empty(u_grid.size) for n in names}
    ok = {n: np.zeros(u_grid.size, bool) for n in names}
    for i, u in enumerate(u_grid):
        for n, b in classical_bounds(profile, k, u).items():
            vals[n][i], ok[n][i] = b.value, b.valid
        if include_spectrum:
            vals["fourier_spectrum"][i] = best_spectrum_bound(profile, k, u).value
            ok["fourier_spectrum"][i] = True
    curves = tuple(MethodCurve(n, vals[n], ok[n]) for n in names)
    table = np.where(np.array([ok[n] for n in names]), np.array([vals[n] for n in names]), np.inf)
    best = table.min(axis=0)
    best = np.where(np.isfinite(best), best, k * (profile.d - k))
    arg = tuple(names[j] if np.isfinite(table[j, i]) else "trivial" for i, j in enumerate(table.argmin(axis=0)))
    return BoundProfile(k, profile.d, u_grid, curves, best, arg)


# ----------------------------------------------------------------------------
# bounds from the Fourier spectrum
# ----------------------------------------------------------------------------

def spectrum_bound(profile: SetProfile, k: int, u: float, theta: float, *, measure: bool = False) -> float:
    """``max{0, k(d-k) + (u - dim_F^theta)/theta}``, capped at ``k(d-k)``.

    Set ``measure=True`` for the statement about measures, which also allows
    ``u > k``.
    """
    d = profile.d
    _check_k(d, k)
    _check_u(u, k, measure)
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    return _cap(k * (d - k) + (u - profile.spectrum(theta)) / theta, k, d)


@dataclass(frozen=True)
class BestBound:
    value: float
    argmin: float
    source: str          # "theta" or "n"
    grid_error: float    # how far the continuum infimum could sit below the grid value


def theta_nodes(profile):
    """Positive theta nodes and spectrum values: the grid itself, or the default grid for closed forms."""
    if profile.kind == "grid":
        th, v, _ = profile.grid(positive=True)
        return th, v
    th = DEFAULT_THETA_GRID[1:]
    return th, profile._closed(th)


def best_spectrum_bound(profile: SetProfile, k: int, u: float, *, measure: bool = False) -> BestBound:
    """Smallest spectrum bound over the theta grid and over convolution powers.

    ``grid_error`` bounds the gap between the grid infimum and the infimum
    over all theta in (0, 1], using that the spectrum is non-decreasing and
    satisfies ``spectrum(theta) <= dim_F + d*theta``.
    """
    d = profile.d
    _check_k(d, k)
    _check_u(u, k, measure)
    full = k * (d - k)
    th, v = theta_nodes(profile)
    if th.size == 0 and not profile.sobolev_conv:
        raise ValueError("profile carries no spectrum data")
    best = (math.inf, math.nan, "theta")
    lower = math.inf
    if th.size:
        f = (u - v) / th
        i = int(np.argmin(f))
        best = (f[i], float(th[i]), "theta")
        # between nodes the spectrum is at most its value at the right node; near
        # theta = 0 it is also at most dim_F + d*theta
        left = np.concatenate([[0.0], th[:-1]])
        with np.errstate(divide="ignore", invalid="ignore"):
            seg = np.where(u - v >= 0, f, (u - v) / left)
        first = (u - profile.dim_F) / th[0] - d if u >= profile.dim_F else -math.inf
        if left[0] == 0:
            seg[0] = max(seg[0], first)
        lower = float(np.min(seg))
    for n, dim_s in sorted(profile.sobolev_conv.items()):
        val = n * u - dim_s
        if val < best[0]:
            best = (val, float(n), "n")
        lower = min(lower, val)
    value = _cap(full + best[0], k, d)
    err = value - _cap(full + lower, k, d)
    return BestBound(value, best[1], best[2], float(err))


@dataclass(frozen=True)
class Threshold:
    value: float
    argmax: float
    grid_error: float


def emptiness_threshold(profile: SetProfile, k: int) -> Threshold:
    """Largest u for which the exceptional set ``{dim_H P_V X < u}`` is provably empty.

    This is ``sup_theta (dim_F^theta - (d - k) theta)``, never below the
    theta = 0 term ``min(k, dim_F)``.
    """
    d = profile.d
    _check_k(d, k)
    if profile.kind == "grid":
        th, v, _ = profile.grid()
    else:
        th = DEFAULT_THETA_GRID
        v = profile._closed(th)
    g = v - (d - k) * th
    i = int(np.argmax(g))
    floor = min(k, profile.dim_F)
    value, arg = (float(g[i]), float(th[i])) if g[i] > floor else (floor, 0.0)
    # on [t_{i-1}, t_i] the spectrum is at most v_i and theta at least t_{i-1}
    left = np.concatenate([[0.0], th[:-1]]) if th[0] > 0 else np.concatenate([[th[0]], th[:-1]])
    upper = float(np.max(v - (d - k) * left))
    return Threshold(value, arg, max(0.0, upper - value))


# ----------------------------------------------------------------------------
# improvement regions
# ----------------------------------------------------------------------------

def improvement_rhs(baseline: str, profile: SetProfile, k: int, u, theta):
    """The spectrum value above which the spectrum bound beats ``baseline`` at (theta, u)."""
    s = profile.dim_H
    u = np.asarray(u, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if baseline == "ren_wang":
        return u * (1 - 2 * theta) + theta * (1 + s)
    if baseline == "mattila":
        return u * (1 - theta) + k * theta
    if baseline == "peres_schlag":
        return u * (1 - theta) + theta * s
    raise ValueError(f"unknown baseline {baseline!r}")


def baseline_u_range(baseline: str, profile: SetProfile, k: int) -> tuple[float, float, bool]:
    """``(lo, hi, lo_open)``: the u-interval on which ``baseline`` is the comparison bound."""
    d, s = profile.d, profile.dim_H
    _check_k(d, k)
    if baseline == "ren_wang":
        if d != 2 or k != 1:
            raise ValueError("the Ren-Wang baseline needs d = 2, k = 1")
        return s / 2, min(s, 1.0), True
    if baseline == "mattila":
        if s > k + _TOL:
            raise ValueError("the Mattila baseline needs dim_H <= k")
        return 0.0, s, True
    if baseline == "peres_schlag":
        return 0.0, float(k), False
    raise ValueError(f"unknown baseline {baseline!r}")


def judge(value, sigma, rhs, *, nsigma=2.0, margin=MARGIN) -> Truth:
    """Three-valued test of ``value > rhs`` given an error bar on ``value``."""
    if value - nsigma * sigma > rhs + margin:
        return Truth.HOLDS
    if value + nsigma * sigma <= rhs + margin:
        return Truth.FAILS
    return Truth.UNCERTAIN


@dataclass(frozen=True)
class RegionCell:
    theta: float
    u: float
    truth: Truth


@dataclass(frozen=True)
class Region:
    baseline: str
    cells: tuple
    boundary_theta: np.ndarray
    boundary_lower: np.ndarray
    boundary_upper: np.ndarray

    def holds(self):
        return [c for c in self.cells if c.truth is Truth.HOLDS]

    def is_empty(self):
        return not any(c.truth is Truth.HOLDS for c in self.cells)


def improvement_region(profile: SetProfile, k: int, baseline: str, u_grid=None, *,
                       nsigma: float = 2.0, margin: float = MARGIN) -> Region:
    """Cells (theta, u) where the spectrum bound strictly improves on ``baseline``.

    The boundary is the shaded region of the (theta, y) plane the spectrum has
    to enter: ``y > min_u rhs(theta, u)`` and ``y <= dim_H``.
    """
    lo, hi, lo_open = baseline_u_range(baseline, profile, k)
    if u_grid is None:
        u_grid = np.linspace(lo, hi, 101)
    u_grid = np.asarray(u_grid, dtype=float)
    keep = (u_grid <= hi + 1e-12) & ((u_grid > lo + 1e-12) if lo_open else (u_grid >= lo - 1e-12))
    us = u_grid[keep]
    th, v = theta_nodes(profile)
    cells = []
    for t, val in zip(th, v):
        sig = profile.sigma(t)
        for u in us:
            rhs = float(improvement_rhs(baseline, profile, k, u, t))
            cells.append(RegionCell(float(t), float(u), judge(val, sig, rhs, nsigma=nsigma, margin=margin)))
    bt = DEFAULT_THETA_GRID[1:]
    if us.size:
        lower = np.min(improvement_rhs(baseline, profile, k, us[None, :], bt[:, None]), axis=1)
    else:
        lower = np.full(bt.shape, np.inf)
    upper = np.full(bt.shape, profile.dim_H)
    return Region(baseline, tuple(cells), bt, lower, upper)


def empty_interior_bound(profile: SetProfile, k: int):
    """Bound for the dimension of planes onto which X projects with empty interior.

    Returns ``k(d-k) + inf_theta (2k - dim_F^theta)/theta`` (clamped at 0)
    when the spectrum exceeds ``2k`` somewhere, else ``"not applicable"``.
    """
    d = profile.d
    _check_k(d, k)
    th, v = theta_nodes(profile)
    if not np.any(v > 2 * k + MARGIN):
        return "not applicable"
    return _cap(k * (d - k) + float(np.min((2 * k - v) / th)), k, d)


# ----------------------------------------------------------------------------
# semi-derivatives at the ends of the spectrum
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SemiDerivative:
    end: int
    value: float
    uncertainty: float
    points: int


def semi_derivative(profile: SetProfile, end: int) -> SemiDerivative:
    """One-sided derivative of the spectrum at theta = 0 or theta = 1.

    At 0 the quotient is ``(spectrum(theta) - dim_F) / theta``; at 1 it is
    ``(dim_H - spectrum(theta)) / (1 - theta)``.  The two quotients nearest the
    end are extrapolated linearly to zero step (one Richardson step).
    """
    if end not in (0, 1):
        raise ValueError("end must be 0 or 1")
    if profile.kind == "grid":
        th, v, se = profile.grid()
    else:
        th = DEFAULT_THETA_GRID
        v = profile._closed(th)
        se = np.zeros_like(v)
    h = np.abs(th - end)
    near = h <= 0.1 + 1e-12
    if near.sum() < 4:
        raise ValueError("need at least 4 spectrum nodes within 0.1 of the end")
    step = h > 0
    idx = np.flatnonzero(near & step)
    idx = idx[np.argsort(h[idx])][:2]
    h1, h2 = h[idx]
    if end == 0:
        q = (v[idx] - profile.dim_F) / h[idx]
    else:
        q = (profile.dim_H - v[idx]) / h[idx]
    q1, q2 = q
    value = (h1 * q2 - h2 * q1) / (h1 - h2)
    noise = math.hypot(*(se[idx] / h[idx])) * (h1 + h2) / abs(h2 - h1)
    return SemiDerivative(end, float(value), float(abs(value - q1) + noise), int(near.sum()))


def continuity_ok(profile: SetProfile, k: int) -> Truth:
    """Continuity of the exceptional dimension at u = dim_F: ``D(0) >= k(d-k)``."""
    _check_k(profile.d, k)
    sd = semi_derivative(profile, 0)
    target = k * (profile.d - k)
    if sd.value - sd.uncertainty >= target - MARGIN:
        return Truth.HOLDS
    if sd.value + sd.uncertainty < target - MARGIN:
        return Truth.FAILS
    return Truth.UNCERTAIN


def rw_improvement_ok(profile: SetProfile) -> Truth:
    """Improvement on Ren-Wang forced by ``D(1) < dim_H - 1`` (needs d = 2 and dim_H > 1)."""
    if profile.d != 2 or profile.dim_H <= 1:
        return Truth.FAILS
    sd = semi_derivative(profile, 1)
    return judge(profile.dim_H - 1, sd.uncertainty / 2, sd.value)


def ps_improvement_ok(profile: SetProfile, k: int, u: float) -> Truth:
    """Improvement on Peres-Schlag at u forced by ``D(1) < dim_H - u`` (needs dim_H > k)."""
    _check_k(profile.d, k)
    _check_u(u, k)
    if profile.dim_H <= k:
        return Truth.FAILS
    sd = semi_derivative(profile, 1)
    return judge(profile.dim_H - u, sd.uncertainty / 2, sd.value)


# ----------------------------------------------------------------------------
# symbolic envelopes
# ----------------------------------------------------------------------------

def sharp_example_exceptional_dim(s: float, u: float) -> float:
    """Exceptional dimension of the product-of-lattices example with ``dim_H = s``: ``max{0, 2u - s}``."""
    return max(0.0, 2 * u - s)


def union_exceptional_envelope(s: float, t: float, u: float) -> tuple[float, float]:
    """Known (lower, upper) exceptional dimension for a set with ``dim_H = s``, ``dim_F = t``.

    Built as a union of a Salem set and the sharp lattice example with
    parameter t; the envelope jumps from 0 to ``2t - s`` at ``u = t``.
    """
    if not (0 < s <= 1 and s / 2 < t < s):
        raise ValueError("need 0 < s <= 1 and s/2 < t < s")
    if u < t:
        return 0.0, 0.0
    return 2 * t - s, max(0.0, 2 * u - s)
