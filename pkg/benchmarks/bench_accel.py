#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

The hot kernels are the truncation-window maxima over complex prefix
sums (quadratic in the number of distance groups), the pairwise Holder
quotients, and the compensated prefix sums.  Run:

    python benchmarks/bench_accel.py [--sizes 128,256,512] [--repeat 5]

The module-level dispatch is chosen at import via the environment flag
CARLESON_LAB_DISABLE_NUMBA; this script times both implementation sets
side by side in one process.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from carleson_lab import _accel


def _time(fn, *args, repeat: int) -> float:
    fn(*args)  # warm-up (includes JIT compilation for the numba set)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="128,256,512")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    sets = {"numpy": _accel.implementations(False)}
    try:
        sets["numba"] = _accel.implementations(True)
    except RuntimeError:
        print("numba unavailable/disabled: benchmarking the fallback only")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}{'m':>6}" + "".join(f"{name:>14}" for name in sets))
    for m in sizes:
        prefix = np.cumsum(rng.standard_normal(m) + 1j * rng.standard_normal(m))
        vals = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        dist = np.abs(rng.standard_normal((m, m)))
        rows = {
            "window_start_max": (prefix,),
            "window_start_max_capped": (prefix, m // 2),
            "pair_holder_seminorm": (vals, dist, 0.25),
            "kahan_cumsum": (vals,),
        }
        for kernel, kargs in rows.items():
            times = []
            for name, impl in sets.items():
                times.append(_time(impl[kernel], *kargs, repeat=args.repeat))
            cells = "".join(f"{t*1e3:>12.3f}ms" for t in times)
            print(f"{kernel:<28}{m:>6}{cells}")
    if len(sets) == 2:
        print("\n(numba column includes no compile time; warm-up excluded)")


if __name__ == "__main__":
    main()
