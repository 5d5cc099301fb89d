"""k-planes in R^d, projections of measures and point sets, and box counting."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .measures import AtomicMeasure, MeasureExpr, Projected

_GRAM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Frame:
    """Orthonormal basis (rows of ``basis``, shape k x d) of a k-plane V."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=np.float64, ndmin=2)
        k, d = b.shape
        if not 1 <= k < d:
            raise ValueError(f"need 1 <= k < d, got k={k}, d={d}")
        if np.max(np.abs(b @ b.T - np.eye(k))) > _GRAM_TOL:
            raise ValueError("frame rows are not orthonormal")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    @property
    def d(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        """Orthogonal projection matrix onto V; identifies the plane independently of the basis."""
        return self.basis.T @ self.basis

    def same_plane(self, other: "Frame", atol: float = 1e-10) -> bool:
        return self.d == other.d and np.allclose(self.projector(), other.projector(), atol=atol)

    def coords(self, x) -> np.ndarray:
        """Coordinates of ``P_V x`` in this basis."""
        return np.asarray(x, dtype=float) @ self.basis.T

    def rows(self) -> list:
        return self.basis.tolist()

    @classmethod
    def from_rows(cls, rows) -> "Frame":
        return cls(np.asarray(rows, dtype=float))

    @classmethod
    def axis(cls, d: int, axes=(0,)) -> "Frame":
        return cls(np.eye(d)[list(axes)])


def sample_grassmannian(d: int, k: int, seed) -> Frame:
    """Draw V from the rotation-invariant probability measure on G(d, k).

    A d x k Gaussian matrix is orthonormalized by QR; fixing the signs of
    R's diagonal makes Q exactly Haar distributed.
    """
    if not 1 <= k < d:
        raise ValueError(f"need 1 <= k < d, got k={k}, d={d}")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((d, k)))
    q = q * np.sign(np.diag(r))
    return Frame(q.T)


def lift(frame: Frame, y) -> np.ndarray:
    """The point ``y_V`` of V whose coordinates in the frame are ``y``."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 0:
        y = y[None]
    return y @ frame.basis


def project_measure(measure: MeasureExpr, frame: Frame) -> Projected:
    if measure.dim != frame.d:
        raise ValueError(f"measure lives in R^{measure.dim}, frame in R^{frame.d}")
    return Projected(measure, frame)


def project_points(atomic: AtomicMeasure, frame: Frame, decimals: int = 12) -> AtomicMeasure:
    """Push atoms forward by ``P_V``; images agreeing to ``decimals`` places are merged."""
    if atomic.dim != frame.d:
        raise ValueError(f"atoms live in R^{atomic.dim}, frame in R^{frame.d}")
    img = AtomicMeasure(frame.coords(atomic.points), atomic.weights, sub_probability=True)
    return img.merged(decimals)


@dataclass(frozen=True)
class BoxDimension:
    value: float
    stderr: float
    scales: tuple
    counts: tuple


def _count_rows(a: np.ndarray) -> int:
    # bincount over a flattened index is O(n); fall back to sorting for wide ranges
    a = a - a.min(axis=0)
    extent = a.max(axis=0) + 1
    if np.prod(extent.astype(float)) <= 1 << 26:
        flat = np.ravel_multi_index(tuple(a.T), tuple(extent))
        return int(np.count_nonzero(np.bincount(flat)))
    return np.unique(a, axis=0).shape[0]


def box_counts(points, scales) -> np.ndarray:
    """Number of half-open dyadic boxes ``prod [i 2^-j, (i+1) 2^-j)`` meeting the points."""
    pts = points.points if isinstance(points, AtomicMeasure) else np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return np.array([_count_rows(np.floor(pts * 2.0 ** j).astype(np.int64)) for j in scales])


def box_dimension(points, scales=range(2, 11)) -> BoxDimension:
    """Least-squares slope of ``log2 N(2^-j)`` against ``j``."""
    scales = sorted(int(j) for j in scales)
    if len(scales) < 3:
        raise ValueError("need at least 3 scales")
    pts = points.points if isinstance(points, AtomicMeasure) else np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0 or np.all(pts == pts[0]):
        raise ValueError("box dimension of a single point is degenerate")
    if pts.shape[0] < 2.0 ** scales[-1]:
        warnings.warn("fewer points than boxes at the finest scale; the count may saturate", stacklevel=2)
    counts = box_counts(pts, scales)
    fit = stats.linregress(scales, np.log2(counts))
    return BoxDimension(float(fit.slope), float(fit.stderr), tuple(scales), tuple(int(c) for c in counts))


@dataclass(frozen=True)
class MarstrandTrial:
    index: int
    frame: Frame
    dimension: BoxDimension


def marstrand_trials(measure: MeasureExpr, n_frames: int = 30, *, k: int = 1, level: int = 10,
                     seed=0x5EED, scales=range(4, 15)) -> list[MarstrandTrial]:
    """Box dimensions of the level-``level`` discretization projected onto random k-planes.

    Frame ``i`` is drawn from the seed sequence ``(seed, i)``.  The default
    scales skip j < 4, where boxes mostly see the hull of the image, and stop
    short of the discretization resolution (``3^-10`` is about ``2^-15.8``).
    """
    atoms = measure.discretize(level)
    out = []
    for i in range(n_frames):
        frame = sample_grassmannian(measure.dim, k, np.random.SeedSequence([seed, i]))
        img = project_points(atoms, frame)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            dim = box_dimension(img, scales)
        out.append(MarstrandTrial(i, frame, dim))
    return out
