"""Time the numba and pure-numpy Fourier transform kernels on the same inputs.

    python benchmarks/bench_kernels.py [--n 200000] [--repeat 5]
"""
import argparse
import time

import numpy as np

from fspec import _kernels
from fspec.constructions import cantor_measure


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--atoms", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    mu = cantor_measure("1/3")
    xi = rng.uniform(2.0 ** 10, 2.0 ** 18, args.n)
    depth = mu.truncation_depth(xi, 1e-9)
    z = rng.uniform(-4096, 4096, (args.n // 10, 1))
    pts = rng.uniform(0, 1, (args.atoms, 1))
    w = np.full(args.atoms, 1.0 / args.atoms)

    cases = {
        "selfsimilar_ft": (
            lambda: _kernels.selfsimilar_ft_numpy(xi, mu.ratio, mu.translations, mu.weights, depth),
            lambda: _kernels.selfsimilar_ft_numba(xi, mu.ratio, mu.translations, mu.weights, depth),
        ),
        "atomic_ft": (
            lambda: _kernels.atomic_ft_numpy(z, pts, w),
            lambda: _kernels.atomic_ft_numba(z, pts, w),
        ),
    }
    print(f"active backend: {_kernels.BACKEND}")
    print(f"{'kernel':<16}{'numpy s':>10}{'numba s':>10}{'speedup':>9}{'max |diff|':>12}")
    for name, (f_np, f_nb) in cases.items():
        if not _kernels.HAVE_NUMBA:
            print(f"{name:<16}{best_of(f_np, args.repeat):>10.4f}{'n/a':>10}")
            continue
        f_nb()  # compile outside the timed region
        diff = float(np.max(np.abs(f_np() - f_nb())))
        t_np, t_nb = best_of(f_np, args.repeat), best_of(f_nb, args.repeat)
        print(f"{name:<16}{t_np:>10.4f}{t_nb:>10.4f}{t_np / t_nb:>9.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
