#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Runs each hot kernel on workloads shaped like the real call sites (grid
contours, Monte Carlo calibration) and prints a timing table.  Usage:

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from possim import _kernels_py

try:
    from possim import _kernels_c
except ImportError:
    _kernels_c = None


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads():
    rng = np.random.default_rng(0)
    theta = np.linspace(1e-6, 1 - 1e-6, 2001)
    t0 = rng.uniform(0.05, 0.95, 20000)
    t1 = rng.uniform(0.05, 0.95, 20000)
    z = rng.standard_normal((10000, 15, 2))
    b11 = np.einsum("ij,ij->i", z[:, :, 0], z[:, :, 0])
    b12 = np.einsum("ij,ij->i", z[:, :, 0], z[:, :, 1])
    b22 = np.einsum("ij,ij->i", z[:, :, 1], z[:, :, 1])
    grid = np.linspace(-0.95, 0.95, 101)
    logrel_obs = -np.abs(grid) * 2.0

    return [
        ("binom_contour 2001-grid n=20",
         lambda k: k.binom_contour(theta, 20, 8)),
        ("table_contour 20k points 25x25",
         lambda k: k.table_contour(t0, t1, 25, 25, 14, 8)),
        ("corr_mle 10k replicates",
         lambda k: k.corr_mle(b11, b12, b22, 15)),
        ("corr_contour 101-grid x 10k reps",
         lambda k: k.corr_contour_crn(b11, b12, b22, grid, logrel_obs, 15)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rows = []
    for name, call in workloads():
        t_py = timeit(lambda: call(_kernels_py), args.repeat)
        if _kernels_c is not None:
            t_c = timeit(lambda: call(_kernels_c), args.repeat)
            a = call(_kernels_py)
            b = call(_kernels_c)
            dev = float(np.max(np.abs(a - b)))
            rows.append((name, t_py, t_c, t_py / t_c, dev))
        else:
            rows.append((name, t_py, None, None, None))

    print(f"{'workload':40s} {'numpy':>9s} {'compiled':>9s} {'speedup':>8s} {'max|diff|':>10s}")
    for name, t_py, t_c, ratio, dev in rows:
        if t_c is None:
            print(f"{name:40s} {t_py*1e3:8.1f}ms {'n/a':>9s} {'n/a':>8s} {'n/a':>10s}")
        else:
            print(
                f"{name:40s} {t_py*1e3:8.1f}ms {t_c*1e3:8.1f}ms {ratio:7.1f}x {dev:10.2e}"
            )
    if _kernels_c is None:
        print("\ncompiled extension not built; only the NumPy backend was timed")


if __name__ == "__main__":
    main()
