#!/usr/bin/env python3
"""Benchmark the backward-DP kernels: compiled core vs NumPy fallback.

Times per-frame solves on the simulation-study scenario (1280 states, 20
slots) and a short closed-loop run with each backend, and verifies the two
backends agree bit for bit while at it.
"""

import argparse
import time

import numpy as np

from aoi_dpp import _kernels
from aoi_dpp.channel import GilbertElliotChannel
from aoi_dpp.model import FrameConfig
from aoi_dpp.sim import PolicyKind, run_simulation
from aoi_dpp.solver import FrameSolver

CFG = FrameConfig(T=20, K=15, q=12.0, A_max=20, V=5.0)
MODEL = GilbertElliotChannel(p11_1=0.9, p01_1=0.6, p11_2=0.9, p01_2=0.6)


def bench_solves(backend: str, n: int) -> float:
    solver = FrameSolver(CFG, MODEL, backend=backend)
    solver.solve(0.0)  # warm up
    t0 = time.perf_counter()
    for i in range(n):
        solver.solve(0.01 * i)
    return (time.perf_counter() - t0) / n


def bench_run(backend: str, horizon: int) -> float:
    t0 = time.perf_counter()
    run_simulation(CFG, MODEL, PolicyKind.DRIFT_PLUS_PENALTY, horizon, seed=1,
                   backend=backend)
    return time.perf_counter() - t0


def check_parity() -> bool:
    a = FrameSolver(CFG, MODEL, backend="cython")
    b = FrameSolver(CFG, MODEL, backend="numpy")
    for z in (0.0, 0.7, 13.9, 412.0):
        ta, tb = a.solve(z), b.solve(z)
        if not (np.array_equal(ta.values, tb.values)
                and np.array_equal(ta.actions, tb.actions)):
            return False
    return True


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--solves", type=int, default=200,
                        help="frame solves to time per backend")
    parser.add_argument("--horizon", type=int, default=50_000,
                        help="slots for the closed-loop timing")
    args = parser.parse_args()

    backends = _kernels.available_backends()
    print(f"default backend: {_kernels.BACKEND} (available: {', '.join(backends)})")
    results = {}
    for backend in backends:
        per_solve = bench_solves(backend, args.solves)
        loop = bench_run(backend, args.horizon)
        results[backend] = (per_solve, loop)
        print(f"{backend:>7}: {per_solve * 1e3:8.3f} ms/solve   "
              f"{loop:6.2f} s per {args.horizon}-slot run")
    if len(backends) == 2:
        speedup = results["numpy"][0] / results["cython"][0]
        print(f"compiled kernel speedup: {speedup:.1f}x per solve")
        print(f"bit-identical tables: {check_parity()}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
