"""Benchmark the jitted search kernels against the pure-numpy fallback.

Times batch pairwise scoring and coordinate-ascent climbs on a realistic
instance (8 slots, 11 candidates each, the shape produced by a cap-10 run
with seeds included). The numpy path is the one selected at import time by
EXPLSEARCH_NO_NUMBA=1; here both are called directly for a side-by-side.

Usage: python benchmarks/bench_kernels.py [--restarts N] [--combos N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from explsearch import kernels


def timed(fn, *args, repeats=5):
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--slots", type=int, default=8)
    parser.add_argument("--candidates", type=int, default=11)
    parser.add_argument("--combos", type=int, default=50_000)
    parser.add_argument("--restarts", type=int, default=512)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    k, n = args.slots, args.candidates
    ll = -5.0 * rng.random((k, n, k, n))
    sizes = np.full(k, n, dtype=np.int64)
    combos = rng.integers(0, n, size=(args.combos, k), dtype=np.int64)
    starts = rng.integers(0, n, size=(args.restarts, k), dtype=np.int64)
    orders = np.stack([rng.permutation(k) for _ in range(args.restarts)]).astype(np.int64)

    print(f"instance: {k} slots x {n} candidates "
          f"({n}^{k} = {n**k:,} combinations)")
    print(f"numba available: {kernels.HAVE_NUMBA} "
          f"(EXPLSEARCH_NO_NUMBA={'set' if kernels.NUMBA_DISABLED else 'unset'})")

    rows = []

    t_np, scores_np = timed(kernels.pairwise_scores_numpy, ll, combos)
    rows.append((f"pairwise_scores ({args.combos:,} combos)", "numpy", t_np))
    if kernels.HAVE_NUMBA:
        out = np.empty(len(combos), dtype=np.float64)
        kernels._pairwise_scores_jit(ll, combos, out)  # warm the JIT cache
        def jit_scores(ll, combos):
            buf = np.empty(len(combos), dtype=np.float64)
            kernels._pairwise_scores_jit(ll, combos, buf)
            return buf
        t_jit, scores_jit = timed(jit_scores, ll, combos)
        assert np.array_equal(scores_np, scores_jit)
        rows.append((f"pairwise_scores ({args.combos:,} combos)", "numba", t_jit))

    t_np, finals_np = timed(
        kernels.coordinate_ascent_numpy, ll, sizes, starts, orders, 64, repeats=3
    )
    rows.append((f"coordinate_ascent ({args.restarts} restarts)", "numpy", t_np))
    if kernels.HAVE_NUMBA:
        warm = np.empty_like(starts)
        kernels._coordinate_ascent_jit(ll, sizes, starts, orders, 64, warm)
        def jit_climb(ll, sizes, starts, orders):
            buf = np.empty_like(starts)
            kernels._coordinate_ascent_jit(ll, sizes, starts, orders, 64, buf)
            return buf
        t_jit, finals_jit = timed(jit_climb, ll, sizes, starts, orders, repeats=3)
        assert np.array_equal(finals_np, finals_jit)
        rows.append((f"coordinate_ascent ({args.restarts} restarts)", "numba", t_jit))

    width = max(len(r[0]) for r in rows)
    print(f"\n{'kernel'.ljust(width)}  path   best time")
    by_kernel: dict[str, dict[str, float]] = {}
    for name, path, seconds in rows:
        print(f"{name.ljust(width)}  {path:5}  {seconds * 1e3:9.2f} ms")
        by_kernel.setdefault(name, {})[path] = seconds
    for name, paths in by_kernel.items():
        if "numba" in paths and "numpy" in paths:
            print(f"{name}: numba is {paths['numpy'] / paths['numba']:.1f}x "
                  "faster than the numpy fallback")


if __name__ == "__main__":
    main()
