"""Hot numeric kernels with a numba path and a pure-numpy path.

The numba path is used when numba imports cleanly and the environment
variable ``FSPEC_DISABLE_NUMBA`` is unset (or ``0``).  Both paths are always
importable as ``*_numba`` / ``*_numpy`` so they can be compared directly.
"""
import math
import os

import numpy as np

_TWO_PI = 2.0 * math.pi

_disabled = os.environ.get("FSPEC_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _disabled
BACKEND = "numba" if USE_NUMBA else "numpy"


# ----------------------------------------------------------------------------
# self-similar infinite product  prod_m g(r^m xi),  g(eta) = sum_j p_j e^{-2 pi i t_j eta}
# ----------------------------------------------------------------------------

def selfsimilar_ft_numpy(xi, ratio, translations, weights, depth):
    xi = np.asarray(xi, dtype=np.float64)
    depth = np.asarray(depth, dtype=np.int64)
    out = np.ones(xi.shape, dtype=np.complex128)
    if xi.size == 0:
        return out
    eta = xi.copy()
    for m in range(int(depth.max(initial=0))):
        active = depth > m
        g = np.zeros(xi.shape, dtype=np.complex128)
        for t, p in zip(translations, weights):
            g += p * np.exp(-1j * _TWO_PI * t * eta)
        out *= np.where(active, g, 1.0)
        eta *= ratio
    return out


def _selfsimilar_ft_loop(xi, ratio, translations, weights, depth):
    n = xi.shape[0]
    out = np.empty(n, dtype=np.complex128)
    nt = translations.shape[0]
    for i in range(n):
        re = 1.0
        im = 0.0
        eta = xi[i]
        for m in range(depth[i]):
            gr = 0.0
            gi = 0.0
            for k in range(nt):
                a = -_TWO_PI * translations[k] * eta
                gr += weights[k] * math.cos(a)
                gi += weights[k] * math.sin(a)
            re, im = re * gr - im * gi, re * gi + im * gr
            eta *= ratio
        out[i] = complex(re, im)
    return out


# ----------------------------------------------------------------------------
# atomic sum  sum_a w_a e^{-2 pi i z . x_a}
# ----------------------------------------------------------------------------

_ATOMIC_CHUNK = 1 << 22


def atomic_ft_numpy(z, points, weights):
    z = np.asarray(z, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    n = z.shape[0]
    out = np.empty(n, dtype=np.complex128)
    step = max(1, _ATOMIC_CHUNK // max(points.shape[0], 1))
    for lo in range(0, n, step):
        phase = z[lo:lo + step] @ points.T
        out[lo:lo + step] = np.exp(-1j * _TWO_PI * phase) @ weights
    return out


def _atomic_ft_loop(z, points, weights):
    n, d = z.shape
    m = points.shape[0]
    out = np.empty(n, dtype=np.complex128)
    for i in range(n):
        re = 0.0
        im = 0.0
        for a in range(m):
            dot = 0.0
            for c in range(d):
                dot += z[i, c] * points[a, c]
            ang = -_TWO_PI * dot
            re += weights[a] * math.cos(ang)
            im += weights[a] * math.sin(ang)
        out[i] = complex(re, im)
    return out


if HAVE_NUMBA:
    _selfsimilar_jit = njit(cache=True, nogil=True)(_selfsimilar_ft_loop)
    _atomic_jit = njit(cache=True, nogil=True)(_atomic_ft_loop)

    def selfsimilar_ft_numba(xi, ratio, translations, weights, depth):
        xi = np.ascontiguousarray(xi, dtype=np.float64)
        shape = xi.shape
        res = _selfsimilar_jit(
            xi.ravel(),
            float(ratio),
            np.ascontiguousarray(translations, dtype=np.float64),
            np.ascontiguousarray(weights, dtype=np.float64),
            np.ascontiguousarray(np.broadcast_to(depth, shape), dtype=np.int64).ravel(),
        )
        return res.reshape(shape)

    def atomic_ft_numba(z, points, weights):
        return _atomic_jit(
            np.ascontiguousarray(z, dtype=np.float64),
            np.ascontiguousarray(points, dtype=np.float64),
            np.ascontiguousarray(weights, dtype=np.float64),
        )
else:  # pragma: no cover
    selfsimilar_ft_numba = selfsimilar_ft_numpy
    atomic_ft_numba = atomic_ft_numpy


if USE_NUMBA:
    selfsimilar_ft = selfsimilar_ft_numba
    atomic_ft = atomic_ft_numba
else:
    selfsimilar_ft = selfsimilar_ft_numpy
    atomic_ft = atomic_ft_numpy
