#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-NumPy fallback.

Times the raw kernels (stencil apply, fused shifted apply, shifted-CG solve)
and one full pseudo-parabolic solve with each backend swapped in.

Usage:
    python benchmarks/bench_kernels.py [--sizes 32,64,128,256] [--repeat 5]
"""

import argparse
import time

import numpy as np

from fracduct import FracPowerConfig, LaplacianOperator, ScalarField, make_grid
from fracduct import _kernels
from fracduct._kernels import available_backends
from fracduct.fracpower import _inv_frac_power_raw


def best_of(repeat, fn):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(backends, sizes, repeat):
    rows = []
    for n in sizes:
        ih = float(n * n)
        rng = np.random.default_rng(0)
        y = rng.standard_normal((n - 1, n - 1))
        out = np.empty_like(y)
        b = rng.standard_normal((n - 1, n - 1))
        for name, mod in backends.items():
            t_apply = best_of(repeat, lambda: mod.apply_laplacian(y, out, ih, ih))
            t_shift = best_of(repeat, lambda: mod.apply_shifted(y, out, 0.9, 2.0, ih, ih))

            def solve():
                x = np.zeros_like(b)
                mod.shifted_cg(x, b, 1.0, 5.0, ih, ih, 1e-10, 10 * (n - 1) ** 2)

            t_cg = best_of(repeat, solve)
            rows.append((n, name, t_apply, t_shift, t_cg))
    return rows


def bench_solver(backends, n, repeat):
    grid = make_grid(n, n, 1.0)
    op = LaplacianOperator(grid)
    cfg = FracPowerConfig(gamma=0.5, theta_delta=0.9 * op.min_eigenvalue(), n0=50)
    f = ScalarField.constant(grid, 1.0).values
    saved = (_kernels.apply_laplacian, _kernels.apply_shifted, _kernels.shifted_cg)
    rows = []
    try:
        for name, mod in backends.items():
            _kernels.apply_laplacian = mod.apply_laplacian
            _kernels.apply_shifted = mod.apply_shifted
            _kernels.shifted_cg = mod.shifted_cg
            t = best_of(repeat, lambda: _inv_frac_power_raw(f, op, cfg))
            rows.append((name, t))
    finally:
        (_kernels.apply_laplacian, _kernels.apply_shifted, _kernels.shifted_cg) = saved
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="32,64,128,256")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--solver-size", type=int, default=64)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    backends = available_backends()
    print(f"selected backend at import: {_kernels.BACKEND}")
    print(f"available: {', '.join(sorted(backends))}\n")

    print(f"{'n':>5} {'backend':>9} {'apply':>12} {'shifted':>12} {'cg solve':>12}")
    for n, name, t_apply, t_shift, t_cg in bench_kernels(backends, sizes, args.repeat):
        print(f"{n:>5} {name:>9} {t_apply*1e6:>10.1f}us {t_shift*1e6:>10.1f}us {t_cg*1e3:>10.2f}ms")

    print(f"\nfull pseudo-parabolic solve, grid {args.solver_size}x{args.solver_size}, N0=50:")
    for name, t in bench_solver(backends, args.solver_size, args.repeat):
        print(f"  {name:>9}: {t*1e3:.1f} ms")


if __name__ == "__main__":
    main()
