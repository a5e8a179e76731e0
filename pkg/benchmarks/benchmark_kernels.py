#!/usr/bin/env python3
"""Benchmark the numba-jitted kernels against their pure-numpy fallbacks.

Usage:
    python benchmarks/benchmark_kernels.py
    python benchmarks/benchmark_kernels.py --sizes 100000 1000000 --repeats 20
    python benchmarks/benchmark_kernels.py --output results.json

Both paths must agree bit-for-bit; the script verifies that before timing.
Setting SEBRANGE_NUMBA=0 at package import time is how production code
selects the numpy path; here both variants are called directly.
"""

import argparse
import json
import time

import numpy as np

from sebrange import kernels
from sebrange.rng import Rng


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_mix64(n, repeats):
    z = Rng(7).raw(n)
    if kernels.NUMBA_ENABLED:
        assert np.array_equal(kernels.mix64_numba(z), kernels.mix64_numpy(z))
        t_numba = _time(lambda: kernels.mix64_numba(z), repeats)
    else:
        t_numba = float("nan")
    t_numpy = _time(lambda: kernels.mix64_numpy(z), repeats)
    return t_numba, t_numpy


def bench_scatter(n_edges, repeats):
    r = Rng(11)
    n_nodes = max(16, n_edges // 8)
    x = r.normal(size=(n_nodes, 16))
    take = r.integers(n_nodes, size=(n_edges,))
    put = r.integers(n_nodes, size=(n_edges,))
    if kernels.NUMBA_ENABLED:
        assert np.array_equal(
            kernels.scatter_add_rows_numba(x, take, put, n_nodes),
            kernels.scatter_add_rows_numpy(x, take, put, n_nodes),
        )
        t_numba = _time(
            lambda: kernels.scatter_add_rows_numba(x, take, put, n_nodes), repeats)
    else:
        t_numba = float("nan")
    t_numpy = _time(
        lambda: kernels.scatter_add_rows_numpy(x, take, put, n_nodes), repeats)
    return t_numba, t_numpy


def bench_temperature(n_rides, repeats):
    r = Rng(23)
    power = r.uniform(0.0, 5.0, size=(n_rides, 64))
    ambient = r.uniform(12.0, 28.0, size=(n_rides,))
    if kernels.NUMBA_ENABLED:
        assert np.array_equal(
            kernels.temperature_scan_numba(power, ambient, 0.75, 0.15, ambient),
            kernels.temperature_scan_numpy(power, ambient, 0.75, 0.15, ambient),
        )
        t_numba = _time(
            lambda: kernels.temperature_scan_numba(power, ambient, 0.75, 0.15,
                                                   ambient), repeats)
    else:
        t_numba = float("nan")
    t_numpy = _time(
        lambda: kernels.temperature_scan_numpy(power, ambient, 0.75, 0.15,
                                               ambient), repeats)
    return t_numba, t_numpy


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[10_000, 100_000, 1_000_000])
    parser.add_argument("--repeats", type=int, default=10)
    parser.add_argument("--output", help="write results to a JSON file")
    args = parser.parse_args()

    print(f"numba enabled: {kernels.NUMBA_ENABLED}")
    if not kernels.NUMBA_ENABLED:
        print("numba unavailable or disabled via SEBRANGE_NUMBA; "
              "timing the numpy path only")

    benches = (
        ("mix64", bench_mix64, args.sizes),
        ("scatter_add_rows", bench_scatter, args.sizes),
        ("temperature_scan", bench_temperature,
         [max(64, s // 64) for s in args.sizes]),
    )
    results = []
    for name, fn, sizes in benches:
        print(f"\n{name}")
        print(f"{'size':>10} {'numba (ms)':>12} {'numpy (ms)':>12} {'speedup':>9}")
        for size in sizes:
            t_numba, t_numpy = fn(size, args.repeats)
            speedup = t_numpy / t_numba if t_numba > 0 else float("nan")
            print(f"{size:>10} {t_numba * 1e3:>12.3f} {t_numpy * 1e3:>12.3f} "
                  f"{speedup:>8.1f}x")
            results.append({
                "kernel": name, "size": size,
                "numba_s": t_numba, "numpy_s": t_numpy, "speedup": speedup,
            })

    if args.output:
        with open(args.output, "w") as fh:
            json.dump({"numba_enabled": kernels.NUMBA_ENABLED,
                       "results": results}, fh, indent=2)
        print(f"\nresults written to {args.output}")


if __name__ == "__main__":
    main()
