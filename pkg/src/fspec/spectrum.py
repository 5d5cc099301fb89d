"""Fourier spectrum estimation by dyadic-shell regression.

For theta in (0, 1] the (s, theta)-energy

    J_{s,theta}(mu)^{1/theta} = integral |mu_hat(z)|^{2/theta} |z|^{s/theta - d} dz

is split over the shells ``A_j = {2^j <= |z| < 2^{j+1}}``.  With the
s-dependence factored out the shell terms are ``2^{js/theta} T_j`` where

    T_j = integral over A_j of |mu_hat(z)|^{2/theta} |z|^{-d} dz,

so the energy is finite roughly when ``s < -theta * slope(log2 T_j)``.  At
theta = 0 the per-shell supremum ``M_j`` of ``|mu_hat|`` replaces ``T_j`` and
the estimate is ``-2 * slope(log2 M_j)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize, special, stats
from scipy.stats import qmc

from .measures import ConvPower, MeasureExpr, SelfSimilarMeasure1D, ft_eval

DEFAULT_SEED = 0x5EED
_FLOOR = 1e-300


class SamplingBudgetError(RuntimeError):
    """A shell could not reach the requested relative accuracy within the point budget."""


class DegenerateRegressionError(ArithmeticError):
    """Shell values vanish (or are not finite), so no log-log slope exists."""


class OSCError(ValueError):
    """The open set condition is not certified for a self-similar measure."""


class LatticeBudgetError(RuntimeError):
    """The lattice sum would visit more points than allowed."""


@dataclass(frozen=True)
class SamplingPlan:
    """How shells are sampled.

    Parameters
    ----------
    seed : int
        Master seed; every shell derives its own stream from ``(seed, j)``.
    mode : {"auto", "dense", "qmc"}
        ``dense`` uses a randomly shifted uniform grid together with its mirror
        image, fine enough to resolve the oscillation of ``mu_hat``
        (one-dimensional measures only).  ``qmc`` uses scrambled Sobol points in log-radius and
        angle.  ``auto`` takes the dense grid whenever it fits in
        ``max_points`` and falls back to ``qmc`` otherwise.
    qmc_base, qmc_per_j2, oversample : int
        Shell ``j`` receives at least ``oversample * max(qmc_base, qmc_per_j2 * j**2)`` points.
    resolution : float
        Dense grid points per unit ``1/diameter`` of frequency.
    max_points : int
        Largest dense grid allowed for a single shell.
    tail_tol : float
        Absolute accuracy requested from the Fourier evaluator.
    rel_tol : float or None
        Optional target for the relative standard error of each ``T_j``.
    refine : int
        Number of sample maxima refined by a bounded line search at theta = 0.
    noisy_stderr : float
        Estimates whose standard error exceeds this are flagged ``noisy``.
    workers : int
        Threads used to evaluate shells; results are reduced in shell order.
    """

    seed: int = DEFAULT_SEED
    mode: str = "auto"
    qmc_base: int = 1024
    qmc_per_j2: int = 64
    oversample: int = 1
    resolution: float = 4.0
    max_points: int = 1 << 21
    tail_tol: float = 1e-9
    rel_tol: float | None = None
    refine: int = 8
    noisy_stderr: float = 0.1
    workers: int = 1

    def __post_init__(self):
        if self.mode not in ("auto", "dense", "qmc"):
            raise ValueError(f"unknown sampling mode {self.mode!r}")
        if self.oversample < 1 or self.qmc_base < 1:
            raise ValueError("sample counts must be positive")

    def min_samples(self, j: int) -> int:
        return self.oversample * max(self.qmc_base, self.qmc_per_j2 * j * j)


@dataclass(frozen=True)
class ShellEstimate:
    """One shell's energy term ``T_j`` (theta > 0) or supremum ``M_j`` (theta = 0)."""

    j: int
    theta: float
    value: float
    stderr: float
    n_samples: int
    seed: int
    mode: str


@dataclass(frozen=True)
class SpectrumEstimate:
    theta: float
    s_hat: float
    slope: float
    slope_stderr: float
    stderr: float
    shells: tuple
    window: tuple
    residuals: tuple
    quality: str

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "s_hat": self.s_hat,
            "slope": self.slope,
            "stderr": self.stderr,
            "window": list(self.window),
            "shells": [
                {"j": s.j, "value": s.value, "stderr": s.stderr, "n_samples": s.n_samples,
                 "seed": s.seed, "mode": s.mode}
                for s in self.shells
            ],
            "quality": self.quality,
        }


def default_j_range(d: int) -> range:
    return range(2, 19) if d == 1 else range(2, 13)


# ----------------------------------------------------------------------------
# shell sampling
# ----------------------------------------------------------------------------

@dataclass
class _Samples:
    j: int
    radius: np.ndarray        # |z| of each sample
    direction: np.ndarray     # unit vectors (n, d)
    amp: np.ndarray           # |mu_hat(z)|
    weight: np.ndarray        # integrand multiplier (|z|^-d Jacobian in the chosen chart)
    factor: float             # chart volume
    mode: str
    spacing: float            # typical radial gap, used by the theta = 0 refinement
    seed: int
    exact: bool = field(default=True)


def _sphere_area(d: int) -> float:
    return 2 * math.pi ** (d / 2) / special.gamma(d / 2)


def _rng(seed: int, j: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, j, tag]))


def _directions(u: np.ndarray, d: int, rng: np.random.Generator) -> np.ndarray:
    """Map points of the unit cube (columns 1..) to the unit sphere S^{d-1}."""
    n = u.shape[0]
    if d == 1:
        return np.ones((n, 1))
    if d == 2:
        phi = 2 * np.pi * u[:, 1]
        return np.column_stack([np.cos(phi), np.sin(phi)])
    if d == 3:
        zc = 1 - 2 * u[:, 1]
        phi = 2 * np.pi * u[:, 2]
        rho = np.sqrt(np.clip(1 - zc * zc, 0, None))
        return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), zc])
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _dense_size(measure: MeasureExpr, j: int, plan: SamplingPlan, bandwidth: float = 1.0) -> int:
    width = 2.0 ** j
    return max(plan.min_samples(j), int(math.ceil(width * plan.resolution * bandwidth * measure.diameter())))


def _sample_shell(measure: MeasureExpr, j: int, plan: SamplingPlan, bandwidth: float = 1.0) -> _Samples:
    d = measure.dim
    lo, hi = 2.0 ** j, 2.0 ** (j + 1)
    mode = plan.mode
    if mode == "dense" and d != 1:
        raise ValueError("dense shell grids are only available for one-dimensional measures")
    if d == 1 and _dense_size(measure, j, plan, bandwidth) > plan.max_points:
        bandwidth = 1.0
    if mode == "auto":
        mode = "dense" if d == 1 and _dense_size(measure, j, plan) <= plan.max_points else "qmc"
    if mode == "dense":
        half = -(-_dense_size(measure, j, plan, bandwidth) // 2)
        shift = _rng(plan.seed, j, 1).random()
        h = (hi - lo) / half
        # a randomly shifted grid and its mirror image: unbiased, and the
        # first-order endpoint error of the two rules cancels
        cells = np.arange(half)
        r = lo + np.concatenate([cells + shift, cells + 1.0 - shift]) * h
        n = r.size
        amp = np.abs(ft_eval(measure, r, plan.tail_tol))
        # both half-lines contribute equally since |mu_hat(-x)| = |mu_hat(x)|
        return _Samples(j, r, np.ones((n, 1)), amp, 1.0 / r, 2.0 * (hi - lo), "dense", h, plan.seed)
    n = plan.min_samples(j)
    rng = _rng(plan.seed, j, 2)
    if d <= 3:
        m = int(math.ceil(math.log2(n)))
        u = qmc.Sobol(d, scramble=True, seed=rng).random_base2(m)
        n = u.shape[0]
        tag = "qmc"
    else:
        u = rng.random((n, d))
        tag = "mc"
    r = lo * np.exp2(u[:, 0])
    omega = _directions(u, d, rng)
    if d == 1:
        omega = np.ones((n, 1))
    amp = np.abs(ft_eval(measure, r[:, None] * omega, plan.tail_tol))
    return _Samples(j, r, omega, amp, np.ones(n), _sphere_area(d) * math.log(2), tag,
                    lo / n, plan.seed)


def _energy(samples: _Samples, theta: float) -> tuple[float, float]:
    vals = samples.weight * samples.amp ** (2.0 / theta)
    n = vals.size
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return samples.factor * mean, samples.factor * se


def _supremum(measure: MeasureExpr, samples: _Samples, plan: SamplingPlan) -> float:
    lo, hi = 2.0 ** samples.j, 2.0 ** (samples.j + 1)
    best = float(samples.amp.max())
    k = min(plan.refine, samples.amp.size)
    if k == 0:
        return best
    top = np.argpartition(samples.amp, -k)[-k:]
    for i in top:
        omega = samples.direction[i]
        r0 = samples.radius[i]
        a, b = max(lo, r0 - samples.spacing), min(hi, r0 + samples.spacing)
        if b <= a:
            continue
        res = optimize.minimize_scalar(
            lambda r: -abs(ft_eval(measure, r * omega, plan.tail_tol)),
            bounds=(a, b), method="bounded", options={"xatol": samples.spacing * 1e-3},
        )
        best = max(best, -float(res.fun))
    return best


def _check_shell(j):
    if int(j) != j or j < 0:
        raise ValueError("shell index must be a nonnegative integer")


def shell_energy(measure: MeasureExpr, theta: float, j: int, plan: SamplingPlan | None = None) -> ShellEstimate:
    """Estimate ``T_j``, the integral of ``|mu_hat|^{2/theta} |z|^{-d}`` over shell ``j``.

    ``|mu_hat|^{2/theta}`` oscillates up to ``1/theta`` times faster than
    ``|mu_hat|^2``, so a dense grid is refined by that factor when it fits in
    ``plan.max_points``.
    """
    plan = plan or SamplingPlan()
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]; use shell_supremum for theta = 0")
    _check_shell(j)
    samples = _sample_shell(measure, int(j), plan, 1.0 / theta)
    value, se = _energy(samples, theta)
    _check_budget(value, se, j, plan)
    return ShellEstimate(int(j), float(theta), value, se, samples.amp.size, plan.seed, samples.mode)


def shell_supremum(measure: MeasureExpr, j: int, plan: SamplingPlan | None = None) -> ShellEstimate:
    """Estimate ``M_j = sup |mu_hat|`` over shell ``j`` (samples plus local refinement)."""
    plan = plan or SamplingPlan()
    _check_shell(j)
    samples = _sample_shell(measure, int(j), plan)
    m = _supremum(measure, samples, plan)
    return ShellEstimate(int(j), 0.0, m, 0.0, samples.amp.size, plan.seed, samples.mode)


def _check_budget(value, se, j, plan):
    if plan.rel_tol is not None and value > 0 and se / value > plan.rel_tol:
        raise SamplingBudgetError(
            f"shell {j}: relative error {se / value:.3g} above target {plan.rel_tol:g}"
        )


# ----------------------------------------------------------------------------
# regression
# ----------------------------------------------------------------------------

def _window(js: Sequence[int]) -> list[int]:
    js = sorted(js)
    if len(js) < 6:
        raise ValueError("the shell range must contain at least 6 shells")
    upper = js[len(js) // 2:]
    return upper if len(upper) >= 6 else js[-6:]


def _regress(shells: list[ShellEstimate], window: list[int]):
    use = [s for s in shells if s.j in window]
    y = np.array([s.value for s in use])
    if not np.all(np.isfinite(y)) or np.any(y <= _FLOOR):
        raise DegenerateRegressionError("shell values vanish or are not finite; no slope")
    x = np.array([s.j for s in use], dtype=float)
    ly = np.log2(y)
    fit = stats.linregress(x, ly)
    resid = ly - (fit.intercept + fit.slope * x)
    # sampling error of each log2 T_j, pushed through the least-squares weights
    sig = np.array([s.stderr / s.value for s in use]) / math.log(2)
    lever = (x - x.mean()) / np.sum((x - x.mean()) ** 2)
    sampling = float(np.sqrt(np.sum((lever * sig) ** 2)))
    # log-periodic residuals bias the slope in a window-dependent way; dropping
    # either end shell exposes that bias where the OLS stderr does not
    shift = max(abs(stats.linregress(x[1:], ly[1:]).slope - fit.slope),
                abs(stats.linregress(x[:-1], ly[:-1]).slope - fit.slope))
    se = float(np.sqrt(fit.stderr ** 2 + sampling ** 2 + shift ** 2))
    return float(fit.slope), se, tuple(float(r) for r in resid)


def _assemble(theta, shells, window, plan):
    slope, slope_se, resid = _regress(shells, window)
    scale = 2.0 if theta == 0 else theta
    s_hat = -scale * slope
    se = scale * slope_se
    in_window = [s for s in shells if s.j in window]
    if any(s.mode != "dense" for s in in_window) and plan.mode == "auto":
        quality = "truncated"
    elif se > plan.noisy_stderr:
        quality = "noisy"
    else:
        quality = "ok"
    return SpectrumEstimate(float(theta), s_hat, slope, slope_se, se, tuple(shells), tuple(window), resid, quality)


def estimate_spectra(
    measure: MeasureExpr,
    thetas: Iterable[float],
    j_range: Iterable[int] | None = None,
    plan: SamplingPlan | None = None,
) -> list[SpectrumEstimate]:
    """Estimate ``dim_F^theta`` for several theta values from one set of shell samples."""
    plan = plan or SamplingPlan()
    thetas = [float(t) for t in thetas]
    if not thetas:
        raise ValueError("no theta values given")
    if any(not 0 <= t <= 1 for t in thetas):
        raise ValueError("theta must lie in [0, 1]")
    js = sorted(int(j) for j in (default_j_range(measure.dim) if j_range is None else j_range))
    for j in js:
        _check_shell(j)
    window = _window(js)

    def one(j):
        samples = _sample_shell(measure, j, plan)
        row = {}
        for t in thetas:
            if t == 0:
                row[t] = ShellEstimate(j, 0.0, _supremum(measure, samples, plan), 0.0,
                                       samples.amp.size, plan.seed, samples.mode)
            else:
                v, se = _energy(samples, t)
                _check_budget(v, se, j, plan)
                row[t] = ShellEstimate(j, t, v, se, samples.amp.size, plan.seed, samples.mode)
        return row

    if plan.workers > 1:
        with ThreadPoolExecutor(plan.workers) as ex:
            rows = list(ex.map(one, js))
    else:
        rows = [one(j) for j in js]
    return [_assemble(t, [row[t] for row in rows], window, plan) for t in thetas]


def estimate_spectrum(
    measure: MeasureExpr,
    theta: float,
    j_range: Iterable[int] | None = None,
    plan: SamplingPlan | None = None,
) -> SpectrumEstimate:
    """Estimate ``dim_F^theta(mu)`` by regressing log2 of shell energies on the shell index.

    The slope is fitted over the upper half of ``j_range`` (at least six
    shells).  The result is not clamped; Sobolev dimensions of measures can
    exceed the ambient dimension.
    """
    return estimate_spectra(measure, [theta], j_range, plan)[0]


def estimate_via_convolution(
    measure: MeasureExpr,
    n: int,
    plan: SamplingPlan | None = None,
    j_range: Iterable[int] | None = None,
) -> float:
    """Estimate ``dim_F^{1/n}(mu)`` as ``dim_S(mu^{*n}) / n``."""
    return convolution_estimate(measure, n, plan, j_range).s_hat / n


def convolution_estimate(measure, n, plan=None, j_range=None) -> SpectrumEstimate:
    """The Sobolev-dimension estimate of ``mu^{*n}`` behind :func:`estimate_via_convolution`."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    target = measure if n == 1 else ConvPower(measure, int(n))
    return estimate_spectrum(target, 1.0, j_range, plan)


# ----------------------------------------------------------------------------
# closed forms and lattice sums
# ----------------------------------------------------------------------------

def l2_dimension_self_similar(weights, ratio=None, *, osc: bool | None = None) -> float:
    """L2 dimension ``log(sum p_j^2) / log(ratio)`` of a self-similar measure.

    The formula needs the open set condition; pass ``osc=True`` to assert it,
    or pass a :class:`SelfSimilarMeasure1D` as ``weights`` to use its flag.
    """
    if isinstance(weights, SelfSimilarMeasure1D):
        m = weights
        weights, ratio, osc = m.weights, m.ratio, m.osc
    if osc is not True:
        raise OSCError("open set condition not certified; the L2 formula does not apply")
    p = np.asarray(weights, dtype=float)
    if abs(p.sum() - 1) > 1e-12 or np.any(p < 0):
        raise ValueError("weights must be a probability vector")
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    return float(math.log(np.sum(p * p)) / math.log(ratio)) + 0.0


def lattice_energy(measure: MeasureExpr, theta: float, s: float, alpha: float, radius: float,
                   *, tail_tol: float = 1e-9, max_points: int = 1 << 24) -> float:
    """Truncated lattice energy ``1 + sum |mu_hat(z)|^{2/theta} |z|^{s/theta - d}``.

    The sum runs over ``z`` in ``alpha Z^d`` with ``0 < |z| <= radius``.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    if radius < 1:
        raise ValueError("radius must be at least 1")
    diam = measure.diameter()
    if not 0 < alpha or (diam > 0 and alpha >= 1 / diam):
        raise ValueError(f"alpha must lie in (0, 1/diameter) = (0, {1 / diam if diam else math.inf:g})")
    d = measure.dim
    m = int(math.floor(radius / alpha))
    if (2 * m + 1) ** d > max_points:
        raise LatticeBudgetError(f"{(2 * m + 1) ** d} lattice points exceed the budget {max_points}")
    expo = s / theta - d
    if d == 1:
        z = alpha * np.arange(1, m + 1, dtype=float)
        a = np.abs(ft_eval(measure, z, tail_tol))
        return 1.0 + 2.0 * float(np.sum(a ** (2 / theta) * z ** expo))
    axis = alpha * np.arange(-m, m + 1, dtype=float)
    total = 0.0
    rest = np.stack(np.meshgrid(*([axis] * (d - 1)), indexing="ij"), axis=-1).reshape(-1, d - 1)
    for x0 in axis:
        z = np.column_stack([np.full(rest.shape[0], x0), rest])
        norm = np.linalg.norm(z, axis=1)
        keep = (norm > 0) & (norm <= radius)
        if not keep.any():
            continue
        a = np.abs(ft_eval(measure, z[keep], tail_tol))
        total += float(np.sum(a ** (2 / theta) * norm[keep] ** expo))
    return 1.0 + total


def lattice_tail_bound(theta: float, s: float, alpha: float, radius: float, d: int) -> float:
    """Upper bound for the neglected part ``sum_{|z| > radius} |z|^{s/theta - d}`` (using |mu_hat| <= 1).

    Infinite when the exponent is not below ``-d``.
    """
    e = s / theta - d
    c = alpha * math.sqrt(d) / 2
    if e >= -d or radius <= c:
        return math.inf
    return (alpha ** -d * (1 + c / radius) ** (-e) * _sphere_area(d)
            * (radius - c) ** (e + d) / (-e - d))


def lattice_shell_sums(measure: MeasureExpr, theta: float, alpha: float, js: Iterable[int],
                       *, tail_tol: float = 1e-9, max_points: int = 1 << 24) -> np.ndarray:
    """``L_j = sum over alpha Z^d in shell j`` of ``|mu_hat(z)|^{2/theta} |z|^{-d}`` (d = 1)."""
    if measure.dim != 1:
        raise ValueError("lattice shell sums are implemented for one-dimensional measures")
    out = []
    for j in js:
        lo, hi = 2.0 ** j, 2.0 ** (j + 1)
        k0, k1 = int(math.ceil(lo / alpha)), int(math.ceil(hi / alpha))
        if k1 - k0 > max_points:
            raise LatticeBudgetError(f"shell {j} holds {k1 - k0} lattice points")
        z = alpha * np.arange(k0, k1, dtype=float)
        z = z[(z >= lo) & (z < hi)]
        a = np.abs(ft_eval(measure, z, tail_tol))
        out.append(2.0 * float(np.sum(a ** (2 / theta) / z)))
    return np.array(out)


def lattice_threshold(measure: MeasureExpr, theta: float, alpha: float, j_range: Iterable[int]) -> float:
    """Blow-up exponent of the lattice energy: ``-theta * slope(log2 L_j)`` over the upper half of ``j_range``."""
    js = sorted(int(j) for j in j_range)
    window = _window(js)
    vals = lattice_shell_sums(measure, theta, alpha, window)
    if np.any(vals <= _FLOOR):
        raise DegenerateRegressionError("lattice shell sums vanish")
    return float(-theta * stats.linregress(window, np.log2(vals)).slope)
