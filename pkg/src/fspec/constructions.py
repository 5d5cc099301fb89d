"""Concrete objects: Cantor measures, a product example with closed-form
dimensions, the exceptional-bound curves built from it, and the lattice-type
sets A, B, C whose products have many exceptional projections."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .bounds import SetProfile
from .measures import ConvPower, Product, SelfSimilarMeasure1D, convolve_selfsimilar, parse_number

LOG_8_3 = math.log(8 / 3)
MAX_GRID = 1 << 26
MAX_STAGES = 6
_MP_DPS = 60


def _fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(x).limit_denominator(10 ** 9)


def cantor_measure(alpha) -> SelfSimilarMeasure1D:
    """Uniform measure on the middle-(1 - 2 alpha) Cantor set: maps ``alpha x`` and ``alpha x + 1 - alpha``."""
    a = parse_number(alpha)
    if not 0 < a < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    return SelfSimilarMeasure1D(a, [0.0, 1.0 - a], [0.5, 0.5], osc=True)


# ----------------------------------------------------------------------------
# product example in R^3
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ExampleX:
    """``X = E_alpha x E_beta x E_gamma`` with its uniform product measure ``mu``."""

    alpha: float
    beta: float
    gamma: float
    dim_H: float
    dim_S_conv: float
    measure: Product
    conv: ConvPower
    conv_selfsimilar: Product
    profile: SetProfile

    @property
    def spectrum_half(self) -> float:
        return self.dim_S_conv / 2


def example_dims(alpha, beta, gamma) -> tuple[float, float]:
    """``(dim_H X, dim_S(mu * mu))`` in closed form."""
    inv = sum(1 / -math.log(parse_number(t)) for t in (alpha, beta, gamma))
    return math.log(2) * inv, LOG_8_3 * inv


def build_example(alpha="1/3", beta="1/4", gamma="1/5") -> ExampleX:
    params = [parse_number(t) for t in (alpha, beta, gamma)]
    if any(not 0 < t <= 1 / 3 + 1e-15 for t in params):
        raise ValueError("alpha, beta, gamma must lie in (0, 1/3]")
    dim_h, dim_s2 = example_dims(*params)
    factors = tuple(cantor_measure(t) for t in params)
    mu = Product(factors)
    profile = SetProfile.from_grid(
        3, dim_h, [0.0, 0.5, 1.0], [0.0, dim_s2 / 2, dim_h],
        sobolev_conv={1: dim_h, 2: dim_s2},
    )
    return ExampleX(*params, dim_h, dim_s2, mu, ConvPower(mu, 2),
                    Product(tuple(convolve_selfsimilar(f, 2) for f in factors)), profile)


FIGURE3_METHODS = ("fourier_spectrum", "peres_schlag", "mattila")


def figure3_rows(alpha="1/3", beta="1/4", gamma="1/5", *, points=201, ps_variant="text"):
    """Rows ``(k, u, method, value)`` of both exceptional-bound panels (k = 1, 2 in R^3).

    u runs over ``[0, min(k, dim_H)]``.  ``ps_variant="figure"`` draws the
    Peres-Schlag curve as ``k + u - dim_H`` instead of ``k(d-k) + u - dim_H``.
    """
    if ps_variant not in ("text", "figure"):
        raise ValueError("ps_variant must be 'text' or 'figure'")
    d = 3
    dim_h, dim_s2 = example_dims(alpha, beta, gamma)
    rows = []
    for k in (1, 2):
        full = k * (d - k)
        us = np.linspace(0.0, min(k, dim_h), points)
        red = np.clip(full + 2 * us - dim_s2, 0, full)
        blue = np.clip((full if ps_variant == "text" else k) + us - dim_h, 0, full)
        green = np.clip(k * (d - k - 1) + us, 0, full)
        for u, r, b, g in zip(us, red, blue, green):
            rows.append((k, float(u), "fourier_spectrum", float(r)))
            rows.append((k, float(u), "peres_schlag", float(b)))
            rows.append((k, float(u), "mattila", float(g)))
    return rows


# ----------------------------------------------------------------------------
# lattice sets A, B, C
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Lemma31Params:
    """``A`` uses exponent u, ``B`` exponent s - u and ``C`` exponent 2u - s.

    Each set is ``{x in [0,1] : d(x, eta_m^{-e} Z) <= 1/eta_m for all m}``.
    """

    s: Fraction
    u: Fraction
    eta: tuple = (8, 64, 4096)
    stages: int = 3

    def __post_init__(self):
        s, u = _fraction(self.s), _fraction(self.u)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "u", u)
        eta = tuple(int(e) for e in self.eta)
        object.__setattr__(self, "eta", eta)
        if not 0 < s <= 1:
            raise ValueError("s must lie in (0, 1]")
        if not s / 2 <= u <= s:
            raise ValueError("u must lie in [s/2, s]")
        if not 1 <= self.stages <= min(len(eta), MAX_STAGES):
            raise ValueError(f"stages must lie in [1, {min(len(eta), MAX_STAGES)}]")
        if eta[0] < 2 or any(b <= a for a, b in zip(eta, eta[1:])):
            raise ValueError("eta must be an increasing integer sequence starting at 2 or more")
        if any(eta[m + 1] < eta[m] ** (m + 1) for m in range(len(eta) - 1)):
            warnings.warn("eta grows slower than eta_{m+1} >= eta_m^m", stacklevel=2)
        if eta[self.stages - 1] > MAX_GRID:
            raise ValueError(f"grid resolution {eta[self.stages - 1]} exceeds {MAX_GRID}")

    @property
    def exponents(self) -> dict:
        return {"A": self.u, "B": self.s - self.u, "C": 2 * self.u - self.s}


def exact_root(eta: int, e: Fraction) -> int | None:
    """``eta**e`` when it is an integer, else None."""
    if e == 0:
        return 1
    num, den = e.numerator, e.denominator
    cand = round(eta ** (num / den))
    for q in (cand - 1, cand, cand + 1):
        if q > 0 and q ** den == eta ** num:
            return q
    return None


def _to_fraction(x: mpmath.mpf) -> Fraction:
    man, exp = mpmath.mpf(x).man_exp
    return Fraction(int(man)) * (Fraction(2) ** exp) if exp >= 0 else Fraction(int(man), 2 ** -exp)


def stage_intervals(eta: int, e: Fraction) -> tuple[list, bool]:
    """Closed intervals ``[z q^-1 - 1/eta, z q^-1 + 1/eta]`` meeting [0, 1], with ``q = eta^e``.

    Returns the intervals (as Fractions) and whether they are exact.  When
    ``eta^e`` is irrational the centres are computed to 60 digits.
    """
    r = Fraction(1, eta)
    q = exact_root(eta, e)
    if q is not None:
        zmax = math.floor((1 + r) * q)
        return [(Fraction(z, q) - r, Fraction(z, q) + r) for z in range(zmax + 1)], True
    with mpmath.workdps(_MP_DPS):
        step = mpmath.power(eta, -mpmath.mpf(e.numerator) / e.denominator)
        zmax = int(mpmath.floor((1 + mpmath.mpf(1) / eta) / step))
        out = []
        for z in range(zmax + 1):
            c = _to_fraction(z * step)
            out.append((c - r, c + r))
    return out, False


def intersect_intervals(a: list, b: list) -> list:
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo, hi = max(a[i][0], b[j][0]), min(a[i][1], b[j][1])
        if lo <= hi:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


def grid_cells(intervals: list, n: int, *, ambiguity: Fraction | None = None) -> list[int]:
    """Indices of the cells ``[i/n, (i+1)/n)`` (the last one closed) meeting the intervals inside [0, 1]."""
    cells = set()
    for lo, hi in intervals:
        lo, hi = max(lo, Fraction(0)), min(hi, Fraction(1))
        if lo > hi:
            continue
        if ambiguity is not None:
            for x in (lo, hi):
                if 0 < x < 1 and 0 < abs(x * n - round(x * n)) < ambiguity:
                    raise ArithmeticError("interval endpoint too close to a cell boundary to decide")
        i0 = max(0, math.floor(lo * n))
        i1 = min(n - 1, math.floor(hi * n))
        cells.update(range(i0, i1 + 1))
    return sorted(cells)


@dataclass(frozen=True)
class LatticeSet:
    name: str
    exponent: Fraction
    cells: tuple             # cells at resolution 1/eta_M meeting the stage-M intersection
    stage_counts: tuple      # cells of width 1/eta_m meeting the intersection up to stage m
    covering_counts: tuple   # cells of width 1/eta_m meeting the stage-m neighbourhood alone
    exact: tuple             # per stage, whether the lattice step is rational
    slope: float             # regression slope of log covering_counts against log eta_m
    intersected_slope: float


def _slope(counts, eta):
    if len(counts) < 2:
        return math.nan
    return float(np.polyfit(np.log(eta), np.log(counts), 1)[0])


def lemma31_sets(params: Lemma31Params) -> dict[str, LatticeSet]:
    """Grid approximations of A, B and C up to stage ``params.stages``."""
    eta = params.eta[:params.stages]
    eps = Fraction(1, 10 ** 40)
    out = {}
    for name, e in params.exponents.items():
        acc = [(Fraction(0), Fraction(1))]
        inter, cover, exact = [], [], []
        for h in eta:
            ivs, ok = stage_intervals(h, e)
            amb = None if ok else eps
            acc = intersect_intervals(acc, ivs)
            inter.append(len(grid_cells(acc, h, ambiguity=amb)))
            cover.append(len(grid_cells(ivs, h, ambiguity=amb)))
            exact.append(ok)
        cells = tuple(grid_cells(acc, eta[-1]))
        out[name] = LatticeSet(name, e, cells, tuple(inter), tuple(cover), tuple(exact),
                               _slope(cover, eta), _slope(inter, eta))
    return out


def exact_stages(params: Lemma31Params) -> list[int]:
    """Stages (1-based) at which all three lattice steps are integers' reciprocals."""
    return [m for m, h in enumerate(params.eta[:params.stages], 1)
            if all(exact_root(h, e) is not None for e in params.exponents.values())]


@dataclass(frozen=True)
class Containment:
    ok: bool
    checked: int
    counterexamples: tuple   # (x, y, slope) with x + slope*y outside eta^{-u} Z


class StageRefused(ArithmeticError):
    """The stage cannot be realised in exact integer arithmetic."""


def verify_projection_containment(params: Lemma31Params, m: int, *, extra_slopes=(),
                                  max_checks: int = 10 ** 7) -> Containment:
    """Check that every point of ``A_m x B_m`` in [0,1]^2 projects along every slope of ``C_m``
    in [0,1] into ``A_m = eta_m^{-u} Z``, exactly.

    ``extra_slopes`` adds further slopes to the check (used as a negative control).
    """
    if not 1 <= m <= len(params.eta):
        raise ValueError("stage out of range")
    h = params.eta[m - 1]
    ex = params.exponents
    qa, qb, qc = (exact_root(h, ex[n]) for n in "ABC")
    if None in (qa, qb, qc):
        raise StageRefused(f"stage {m}: eta={h} has no integer powers for exponents {list(ex.values())}")
    slopes = [Fraction(z, qc) for z in range(qc + 1)] + [_fraction(t) for t in extra_slopes]
    total = (qa + 1) * (qb + 1) * len(slopes)
    if total > max_checks:
        raise StageRefused(f"stage {m}: {total} checks exceed the budget {max_checks}")
    bad = []
    for z1 in range(qa + 1):
        x = Fraction(z1, qa)
        for z2 in range(qb + 1):
            y = Fraction(z2, qb)
            for c in slopes:
                if ((x + c * y) * qa).denominator != 1:
                    bad.append((x, y, c))
    return Containment(not bad, total, tuple(bad))
