import random

import pytest

from explsearch.reports import (
    UndefinedCorrelationError,
    pearson,
    variance_report,
)


class TestPearson:
    def test_identical_sequences(self):
        assert pearson([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)

    def test_negated_sequence(self):
        xs = [1.0, 2.0, 3.0, 7.0]
        assert pearson(xs, [-x for x in xs]) == pytest.approx(-1.0)

    def test_zero_variance_rejected(self):
        with pytest.raises(UndefinedCorrelationError):
            pearson([1, 1, 1], [1, 2, 3])

    def test_too_few_points_rejected(self):
        with pytest.raises(UndefinedCorrelationError):
            pearson([1], [2])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            pearson([1, 2], [1, 2, 3])

    def test_matches_direct_formula_on_random_vectors(self):
        rng = random.Random(0)
        for _ in range(100):
            n = rng.randint(2, 40)
            xs = [rng.uniform(-10, 10) for _ in range(n)]
            ys = [rng.uniform(-10, 10) for _ in range(n)]
            if len(set(xs)) < 2 or len(set(ys)) < 2:
                continue
            # population-moment formulation as the independent reference
            ex = sum(xs) / n
            ey = sum(ys) / n
            exy = sum(x * y for x, y in zip(xs, ys)) / n
            vx = sum(x * x for x in xs) / n - ex * ex
            vy = sum(y * y for y in ys) / n - ey * ey
            reference = (exy - ex * ey) / (vx * vy) ** 0.5
            assert pearson(xs, ys) == pytest.approx(reference, abs=1e-12)


class TestVarianceReport:
    def test_ordering_invariant(self):
        report = variance_report([0.4, 0.6, 0.5], 0.45, 7, [[0], [1], [2]])
        assert report.min_accuracy <= report.avg_accuracy <= report.max_accuracy
        assert report.num_samples == 3
        assert report.seed_accuracy == 0.45

    def test_requires_samples(self):
        with pytest.raises(ValueError):
            variance_report([], 0.5, 0, [])

    def test_benchmark_shows_spread_in_most_seeds(self):
        from explsearch.candidates import GenerationConfig, generate_candidates
        from explsearch.search import evaluate_test
        from explsearch.silver import sample_combinations
        from explsearch.simulated import SimulatedBackend
        from explsearch.toybench import build_toy_benchmark

        spread_seeds = 0
        n_seeds = 12
        for seed in range(n_seeds):
            bench = build_toy_benchmark(seed=seed, dev_size=8, test_size=32)
            backend = SimulatedBackend(bench.sim_spec, bench.task.format)
            sets = generate_candidates(bench.task, backend, GenerationConfig(rng_seed=seed))
            combos = sample_combinations(sets, 16, seed)
            accs = [
                evaluate_test(c, bench.task, sets, bench.test_questions,
                              bench.test_answers, backend)
                for c in combos
            ]
            assert max(accs) - min(accs) >= 0
            if max(accs) > min(accs):
                spread_seeds += 1
        assert spread_seeds >= 0.95 * n_seeds
