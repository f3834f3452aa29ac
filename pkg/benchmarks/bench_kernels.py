#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy twins.

Both backends are imported directly (bypassing the KLEXPAND_NO_NUMBA
switch) and timed on representative problem sizes.  Run:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from klexpand import _core_numpy

try:
    from klexpand import _core_numba

    HAVE_NUMBA = True
except ImportError:
    _core_numba = None
    HAVE_NUMBA = False


def timeit(fn, *args, repeat=5):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench(name, fn_name, args, check=None):
    t_np, res_np = timeit(getattr(_core_numpy, fn_name), *args)
    line = f"{name:<44s} numpy {t_np * 1e3:9.2f} ms"
    if HAVE_NUMBA:
        fn = getattr(_core_numba, fn_name)
        fn(*args)  # warm up / compile
        t_nb, res_nb = timeit(fn, *args)
        line += f"   numba {t_nb * 1e3:9.2f} ms   speedup {t_np / t_nb:6.1f}x"
        if check is not None:
            check(res_np, res_nb)
    print(line)


def same_spectrum(a, b):
    np.testing.assert_allclose(a[0], b[0], rtol=1e-10, atol=1e-12)


def same_table(a, b):
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


def main():
    rng = np.random.default_rng(0)
    print(f"numba available: {HAVE_NUMBA}\n")

    for n in (100, 400):
        d = np.zeros(n)
        k = np.arange(1, n, dtype=float)
        e = np.sqrt(k * k / (4 * k * k - 1))
        bench(f"tridiag_eigh_firstrow  n={n}", "tridiag_eigh_firstrow", (d, e), same_spectrum)

    for n in (150, 400):
        d = rng.standard_normal(n)
        e = rng.standard_normal(n - 1)
        bench(f"tridiag_eigh_full      n={n}", "tridiag_eigh_full", (d, e), same_spectrum)

    t = np.linspace(-1, 1, 50_000)
    for nmax in (30, 60):
        bench(f"legendre_table_classical  nmax={nmax} 50k pts", "legendre_table_classical", (nmax, t), same_table)
    bench("legendre_table_orthonormal nmax=60 50k pts", "legendre_table_orthonormal", (60, t), same_table)

    for q, nmax in ((160, 30), (320, 60)):
        x = rng.uniform(0, 1, (q, q))
        K = rng.uniform(0, 1, (q, q))
        T = 2 * x - 1
        bench(f"classical_moment_contraction q={q} nmax={nmax}", "classical_moment_contraction", (K, T, nmax), same_table)


if __name__ == "__main__":
    main()
