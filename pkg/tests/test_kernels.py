import os
import subprocess
import sys

import numpy as np
import pytest

from fspec import _kernels
from fspec.constructions import cantor_measure

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not importable")


@needs_numba
def test_selfsimilar_paths_agree():
    rng = np.random.default_rng(1)
    mu = cantor_measure("1/4")
    xi = rng.uniform(-1e5, 1e5, 2000)
    depth = mu.truncation_depth(xi, 1e-10)
    a = _kernels.selfsimilar_ft_numpy(xi, mu.ratio, mu.translations, mu.weights, depth)
    b = _kernels.selfsimilar_ft_numba(xi, mu.ratio, mu.translations, mu.weights, depth)
    np.testing.assert_allclose(a, b, atol=1e-12)


@needs_numba
def test_atomic_paths_agree():
    rng = np.random.default_rng(2)
    z = rng.normal(size=(500, 3)) * 50
    pts = rng.uniform(size=(17, 3))
    w = rng.dirichlet(np.ones(17))
    np.testing.assert_allclose(_kernels.atomic_ft_numpy(z, pts, w), _kernels.atomic_ft_numba(z, pts, w),
                               atol=1e-12)


def test_empty_input():
    out = _kernels.selfsimilar_ft_numpy(np.zeros(0), 0.5, np.array([0, 0.5]), np.array([0.5, 0.5]),
                                        np.zeros(0, dtype=np.int64))
    assert out.shape == (0,)


@pytest.mark.parametrize("flag, backend", [("1", "numpy"), ("0", "numba" if _kernels.HAVE_NUMBA else "numpy")])
def test_environment_flag_selects_backend(flag, backend):
    env = dict(os.environ, FSPEC_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "from fspec import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == backend
