import os
import subprocess
import sys

import numpy as np
import pytest

from explsearch import kernels


def random_instance(rng, k=None, n=None):
    k = k or rng.integers(2, 5)
    n = n or rng.integers(2, 6)
    ll = -3.0 * rng.random((k, n, k, n))
    return ll, np.full(k, n, dtype=np.int64)


def python_pairwise(ll, combo):
    k = len(combo)
    total = 0.0
    for i in range(k):
        for j in range(k):
            if i != j:
                total += float(ll[i, combo[i], j, combo[j]])
    return total


class TestPairwiseScores:
    def test_matches_python_reference(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            ll, sizes = random_instance(rng)
            k, n = len(sizes), sizes[0]
            combos = rng.integers(0, n, size=(50, k))
            scores = kernels.pairwise_scores(ll, combos)
            for row, score in zip(combos, scores):
                assert score == python_pairwise(ll, row)

    def test_numpy_fallback_bitwise_identical(self):
        rng = np.random.default_rng(1)
        ll, sizes = random_instance(rng, k=4, n=5)
        combos = rng.integers(0, 5, size=(200, 4))
        via_dispatch = kernels.pairwise_scores(ll, combos)
        via_numpy = kernels.pairwise_scores_numpy(
            np.ascontiguousarray(ll), np.ascontiguousarray(combos, dtype=np.int64)
        )
        assert np.array_equal(via_dispatch, via_numpy)


class TestCoordinateAscent:
    def test_numpy_fallback_bitwise_identical(self):
        rng = np.random.default_rng(2)
        ll, sizes = random_instance(rng, k=4, n=4)
        starts = rng.integers(0, 4, size=(32, 4))
        orders = np.stack([rng.permutation(4) for _ in range(32)])
        via_dispatch = kernels.coordinate_ascent(ll, sizes, starts, orders)
        via_numpy = kernels.coordinate_ascent_numpy(
            np.ascontiguousarray(ll, dtype=np.float64),
            sizes,
            np.ascontiguousarray(starts, dtype=np.int64),
            np.ascontiguousarray(orders, dtype=np.int64),
            64,
        )
        assert np.array_equal(via_dispatch, via_numpy)

    def test_separable_matrix_reaches_global_argmax_in_one_sweep(self):
        # ll[i,c,j,d] = f(i,c) + g(j,d) makes the objective additive, so the
        # best candidate per slot is independent of the others
        rng = np.random.default_rng(3)
        k, n = 4, 5
        f = -rng.random((k, n))
        g = -rng.random((k, n))
        ll = np.empty((k, n, k, n))
        for i in range(k):
            for c in range(n):
                for j in range(k):
                    for d in range(n):
                        ll[i, c, j, d] = f[i, c] + g[j, d]
        sizes = np.full(k, n, dtype=np.int64)
        expected = np.argmax(f + g, axis=1)
        starts = rng.integers(0, n, size=(16, k))
        orders = np.stack([rng.permutation(k) for _ in range(16)])
        finals = kernels.coordinate_ascent(ll, sizes, starts, orders, max_sweeps=2)
        assert np.all(finals == expected)

    def test_climbs_never_decrease_score(self):
        rng = np.random.default_rng(4)
        ll, sizes = random_instance(rng, k=3, n=6)
        starts = rng.integers(0, 6, size=(24, 3))
        orders = np.stack([rng.permutation(3) for _ in range(24)])
        finals = kernels.coordinate_ascent(ll, sizes, starts, orders)
        start_scores = kernels.pairwise_scores(ll, starts)
        final_scores = kernels.pairwise_scores(ll, finals)
        assert np.all(final_scores >= start_scores)

    def test_ragged_sizes_respected(self):
        rng = np.random.default_rng(5)
        k, n_max = 3, 5
        sizes = np.array([2, 5, 3], dtype=np.int64)
        ll = np.full((k, n_max, k, n_max), -np.inf)
        for i in range(k):
            for j in range(k):
                if i != j:
                    ll[i, :sizes[i], j, :sizes[j]] = -rng.random((sizes[i], sizes[j]))
        starts = np.zeros((8, k), dtype=np.int64)
        orders = np.stack([rng.permutation(k) for _ in range(8)])
        finals = kernels.coordinate_ascent(ll, sizes, starts, orders)
        for row in finals:
            assert all(row[slot] < sizes[slot] for slot in range(k))


class TestAllCombinations:
    def test_lexicographic_order(self):
        combos = kernels.all_combinations(np.array([2, 3]))
        expected = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]
        assert [tuple(row) for row in combos] == expected


def test_env_flag_disables_numba():
    env = dict(os.environ, EXPLSEARCH_NO_NUMBA="1")
    code = "import explsearch.kernels as k; print(k.HAVE_NUMBA, k.NUMBA_DISABLED)"
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.split() == ["False", "True"]


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba unavailable in this environment")
def test_default_path_uses_numba():
    assert not kernels.NUMBA_DISABLED
