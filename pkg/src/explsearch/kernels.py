"""Hot numeric kernels for combination scoring and local search.

Two operations dominate search runtime once candidate sets get large: scoring
batches of combination index vectors against the pairwise log-likelihood
tensor, and coordinate-ascent climbs over that tensor. Both are JIT-compiled
with numba when available; setting EXPLSEARCH_NO_NUMBA=1 (or any value other
than 0/false) selects the pure-numpy path instead. The two paths accumulate
floats in the same order, so results are bit-identical.

The tensor layout is ll[i, c, j, d]: the log-likelihood of slot j's candidate
d as a continuation given a one-shot prompt built from slot i's candidate c.
Entries with i == j are never read; padding beyond a slot's candidate count is
never read either.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_FLAG = os.environ.get("EXPLSEARCH_NO_NUMBA", "")
NUMBA_DISABLED = _ENV_FLAG.strip().lower() not in ("", "0", "false")

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled via EXPLSEARCH_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def _pairwise_scores_impl(ll, combos, out):
    n_combos, k = combos.shape
    for r in range(n_combos):
        total = 0.0
        for i in range(k):
            ci = combos[r, i]
            for j in range(k):
                if i == j:
                    continue
                total += ll[i, ci, j, combos[r, j]]
        out[r] = total


def pairwise_scores_numpy(ll: np.ndarray, combos: np.ndarray) -> np.ndarray:
    """Vectorized fallback: one gather-add per ordered slot pair."""
    n_combos, k = combos.shape
    scores = np.zeros(n_combos, dtype=np.float64)
    for i in range(k):
        ci = combos[:, i]
        for j in range(k):
            if i == j:
                continue
            scores += ll[i, ci, j, combos[:, j]]
    return scores


def _coordinate_ascent_impl(ll, sizes, starts, orders, max_sweeps, finals):
    n_restarts, k = starts.shape
    for r in range(n_restarts):
        state = starts[r].copy()
        for _ in range(max_sweeps):
            changed = False
            for step in range(k):
                i = orders[r, step]
                size_i = sizes[i]
                best_v = 0
                best_gain = -np.inf
                for v in range(size_i):
                    gain = 0.0
                    for j in range(k):
                        if j == i:
                            continue
                        cj = state[j]
                        gain += ll[i, v, j, cj] + ll[j, cj, i, v]
                    if gain > best_gain:
                        best_gain = gain
                        best_v = v
                if best_v != state[i]:
                    state[i] = best_v
                    changed = True
            if not changed:
                break
        finals[r] = state


def coordinate_ascent_numpy(
    ll: np.ndarray,
    sizes: np.ndarray,
    starts: np.ndarray,
    orders: np.ndarray,
    max_sweeps: int,
) -> np.ndarray:
    """Numpy fallback: per-restart loop with a vectorized slot update.

    Per-element accumulation order matches the jitted kernel (pairs visited in
    ascending j), keeping the argmax decisions identical.
    """
    n_restarts, k = starts.shape
    finals = np.empty_like(starts)
    for r in range(n_restarts):
        state = starts[r].copy()
        for _ in range(max_sweeps):
            changed = False
            for i in orders[r]:
                size_i = sizes[i]
                gains = np.zeros(size_i, dtype=np.float64)
                for j in range(k):
                    if j == i:
                        continue
                    cj = state[j]
                    gains += ll[i, :size_i, j, cj] + ll[j, cj, i, :size_i]
                best_v = int(np.argmax(gains))
                if best_v != state[i]:
                    state[i] = best_v
                    changed = True
            if not changed:
                break
        finals[r] = state
    return finals


if HAVE_NUMBA:
    _pairwise_scores_jit = njit(cache=True)(_pairwise_scores_impl)
    _coordinate_ascent_jit = njit(cache=True)(_coordinate_ascent_impl)


def pairwise_scores(ll: np.ndarray, combos: np.ndarray) -> np.ndarray:
    """Score each combination row: sum of ll over ordered slot pairs."""
    combos = np.ascontiguousarray(combos, dtype=np.int64)
    ll = np.ascontiguousarray(ll, dtype=np.float64)
    if HAVE_NUMBA:
        out = np.empty(combos.shape[0], dtype=np.float64)
        _pairwise_scores_jit(ll, combos, out)
        return out
    return pairwise_scores_numpy(ll, combos)


def coordinate_ascent(
    ll: np.ndarray,
    sizes: np.ndarray,
    starts: np.ndarray,
    orders: np.ndarray,
    max_sweeps: int = 64,
) -> np.ndarray:
    """Climb each start to a local maximum: sweep slots, set each to its best
    candidate given the others, repeat until a sweep changes nothing."""
    ll = np.ascontiguousarray(ll, dtype=np.float64)
    sizes = np.ascontiguousarray(sizes, dtype=np.int64)
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    orders = np.ascontiguousarray(orders, dtype=np.int64)
    if HAVE_NUMBA:
        finals = np.empty_like(starts)
        _coordinate_ascent_jit(ll, sizes, starts, orders, max_sweeps, finals)
        return finals
    return coordinate_ascent_numpy(ll, sizes, starts, orders, max_sweeps)


def all_combinations(sizes: np.ndarray) -> np.ndarray:
    """Every combination index vector, in lexicographic row order."""
    grids = np.meshgrid(*[np.arange(s, dtype=np.int64) for s in sizes], indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)
