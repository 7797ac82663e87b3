#!/usr/bin/env python3
"""Benchmark the compiled advection kernel against the NumPy fallback.

Runs the same RK4 substep workload through worldsim._advect (when built) and
worldsim._advect_py, reports world-substeps per second, the speedup, and
verifies the two backends produce identical trajectories.

Usage: python benchmarks/bench_advect.py [--worlds N] [--substeps N]
"""

import argparse
import time

import numpy as np

from worldsim import _advect_py

try:
    from worldsim import _advect

    HAVE_EXT = True
except ImportError:
    HAVE_EXT = False


def make_workload_1d(n=2048, m=10000, seed=7):
    rng = np.random.default_rng(seed)
    lo, hi = -12.0, 12.0
    dx = (hi - lo) / n
    x = lo + (np.arange(n) + 0.5) * dx
    v0 = np.sin(2 * np.pi * (x - lo) / (hi - lo))[np.newaxis]
    v1 = 1.2 * np.cos(2 * np.pi * (x - lo) / (hi - lo))[np.newaxis]
    rho = np.exp(-(x**2) / 4.0)
    pos = rng.uniform(-8, 8, size=(m, 1))
    alive = np.ones(m, dtype=np.uint8)
    return pos, alive, v0, v1, rho, rho.copy(), (lo,), (dx,)


def make_workload_2d(n=256, m=10000, seed=7):
    rng = np.random.default_rng(seed)
    lo = (-12.0, -12.0)
    dx = (24.0 / n, 24.0 / n)
    x = lo[0] + (np.arange(n) + 0.5) * dx[0]
    xx, yy = np.meshgrid(x, x, indexing="ij")
    v0 = np.stack([np.sin(0.3 * xx) * np.cos(0.2 * yy), np.cos(0.25 * xx)])
    v1 = np.stack([0.8 * np.cos(0.3 * yy), 0.9 * np.sin(0.2 * xx)])
    rho = np.exp(-(xx**2 + yy**2) / 8.0)
    pos = rng.uniform(-8, 8, size=(m, 2))
    alive = np.ones(m, dtype=np.uint8)
    return pos, alive, np.ascontiguousarray(v0), np.ascontiguousarray(v1), rho, rho.copy(), lo, dx


def run_backend(kernel_1d, kernel_2d, workload, dims, substeps):
    pos, alive, v0, v1, r0, r1, lo, dx = workload
    pos = pos.copy()
    alive = alive.copy()
    h = 1e-3
    eps = 1e-12 * float(r0.max())
    t0 = time.perf_counter()
    for k in range(substeps):
        s0 = k / substeps
        sh = (k + 0.5) / substeps
        s1 = (k + 1) / substeps
        if dims == 1:
            kernel_1d(pos, alive, v0[0], v1[0], r0, r1, s0, sh, s1, h, lo[0], dx[0], eps)
        else:
            kernel_2d(
                pos, alive, v0[0], v0[1], v1[0], v1[1], r0, r1,
                s0, sh, s1, h, lo[0], lo[1], dx[0], dx[1], eps,
            )
    elapsed = time.perf_counter() - t0
    return pos, elapsed


def run_numpy(workload, substeps):
    pos, alive, v0, v1, r0, r1, lo, dx = workload
    pos = pos.copy()
    alive = alive.copy()
    h = 1e-3
    eps = 1e-12 * float(r0.max())
    t0 = time.perf_counter()
    for k in range(substeps):
        _advect_py.rk4_substep(
            pos, alive, v0, v1, r0, r1,
            k / substeps, (k + 0.5) / substeps, (k + 1) / substeps,
            h, np.asarray(lo), np.asarray(dx), eps,
        )
    elapsed = time.perf_counter() - t0
    return pos, elapsed


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--worlds", type=int, default=10000)
    ap.add_argument("--substeps", type=int, default=400)
    args = ap.parse_args()

    print(f"worlds={args.worlds}  substeps={args.substeps}")
    print(f"{'case':<10} {'backend':<8} {'time [s]':>10} {'world-substeps/s':>18}")
    for dims, make in ((1, make_workload_1d), (2, make_workload_2d)):
        wl = make(m=args.worlds)
        pos_np, t_np = run_numpy(wl, args.substeps)
        rate_np = args.worlds * args.substeps / t_np
        print(f"{dims}D{'':<8} {'numpy':<8} {t_np:>10.3f} {rate_np:>18.3e}")
        if HAVE_EXT:
            pos_cy, t_cy = run_backend(
                _advect.rk4_substep_1d, _advect.rk4_substep_2d, wl, dims, args.substeps
            )
            rate_cy = args.worlds * args.substeps / t_cy
            identical = np.array_equal(pos_np, pos_cy)
            print(
                f"{dims}D{'':<8} {'cython':<8} {t_cy:>10.3f} {rate_cy:>18.3e}"
                f"   speedup x{t_np / t_cy:.1f}  identical={identical}"
            )
        else:
            print(f"{dims}D{'':<8} {'cython':<8} {'(extension not built)':>10}")


if __name__ == "__main__":
    main()
