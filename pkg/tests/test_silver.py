import random

import pytest
from hypothesis import given, settings, strategies as st

from explsearch.cache import CachedBackend, CompletionCache
from explsearch.candidates import CandidateSet
from explsearch.formats import Combination, Exemplar, Task
from explsearch.samples import STRATEGYQA_FORMAT
from explsearch.silver import DevSet, sample_combinations, silver_label
from explsearch.simulated import SimulatedBackend
from explsearch.toybench import build_toy_benchmark
from explsearch.voting import NoVotesError, majority_vote

from conftest import ScriptedBackend


def make_sets(sizes):
    return [
        CandidateSet(
            exemplar_index=i,
            candidates=[f"explanation {i}.{c}" for c in range(size)],
            provenance=["seed"] + ["sampled"] * (size - 1),
        )
        for i, size in enumerate(sizes)
    ]


class TestSampleCombinations:
    def test_singleton_sets_give_identical_combinations(self):
        combos = sample_combinations(make_sets([1, 1, 1]), 10, rng_seed=0)
        assert all(c.indices == (0, 0, 0) for c in combos)

    def test_standard_draw_shape(self):
        combos = sample_combinations(make_sets([11] * 8), 48, rng_seed=1)
        assert len(combos) == 48
        assert all(len(c.indices) == 8 for c in combos)
        assert all(0 <= idx <= 10 for c in combos for idx in c.indices)

    def test_fixed_seed_reproducible(self):
        sets = make_sets([5, 3, 4])
        assert sample_combinations(sets, 20, 7) == sample_combinations(sets, 20, 7)

    def test_needs_positive_count(self):
        with pytest.raises(ValueError):
            sample_combinations(make_sets([2]), 0, 0)


class TestMajorityVote:
    def test_plain_majority(self):
        assert majority_vote({"yes": 5, "no": 3}) == "yes"

    def test_single_entry(self):
        assert majority_vote({"26": 1}) == "26"

    def test_tie_breaks_lexicographically(self):
        assert majority_vote({"b": 3, "a": 3}) == "a"

    def test_empty_tally_raises(self):
        with pytest.raises(NoVotesError):
            majority_vote({})

    def test_matches_brute_force_on_random_tallies(self):
        rng = random.Random(0)
        for _ in range(1000):
            tally = {
                f"answer{k}": rng.randint(1, 9)
                for k in range(rng.randint(1, 8))
            }
            winner = majority_vote(tally)
            best_count = max(tally.values())
            brute = min(answer for answer, count in tally.items() if count == best_count)
            assert winner == brute

    @given(
        st.dictionaries(
            st.text(min_size=1, max_size=5), st.integers(min_value=1, max_value=50),
            min_size=1, max_size=8,
        )
    )
    @settings(deadline=None)
    def test_insertion_order_irrelevant(self, tally):
        shuffled = dict(sorted(tally.items(), reverse=True))
        assert majority_vote(tally) == majority_vote(shuffled)


def binary_task():
    return Task(
        format=STRATEGYQA_FORMAT,
        exemplars=(
            Exemplar(question="Is water wet?", gold_answer="yes",
                     seed_explanation="Water is a liquid. Liquids are wet."),
            Exemplar(question="Do rocks breathe?", gold_answer="no",
                     seed_explanation="Rocks are not alive. Breathing needs life."),
        ),
    )


class TestSilverLabel:
    def test_majority_of_scripted_voters(self):
        task = binary_task()
        sets = make_sets([1, 1])
        devset = DevSet(questions=("Mystery question one?",))
        # three voters exist but candidate sets are singletons, so all three
        # cast the same scripted vote
        backend = ScriptedBackend(task.format, {"Mystery question one?": "yes"})
        combos = [Combination((0, 0))] * 3
        silver = silver_label(devset, combos, task, sets, backend)
        assert silver.labels == ["yes"]
        assert silver.tallies == [{"yes": 3}]
        assert silver.num_voters == 3

    def test_single_voter_label_is_its_prediction(self):
        task = binary_task()
        sets = make_sets([1, 1])
        devset = DevSet(questions=("Only question?",))
        backend = ScriptedBackend(task.format, {"Only question?": "no"})
        silver = silver_label(devset, [Combination((0, 0))], task, sets, backend)
        assert silver.labels == ["no"]

    def test_all_abstain_leaves_unlabeled(self, caplog):
        task = binary_task()
        sets = make_sets([1, 1])
        devset = DevSet(questions=("Unanswerable?",))
        backend = ScriptedBackend(task.format, {})
        with caplog.at_level("WARNING"):
            silver = silver_label(devset, [Combination((0, 0))] * 4, task, sets, backend)
        assert silver.labels == [None]
        assert silver.tallies == [{}]
        assert silver.labeled_indices == []
        assert any("abstained" in rec.message for rec in caplog.records)

    def test_tally_plus_abstentions_equals_voters(self):
        bench = build_toy_benchmark(seed=2, dev_size=6, test_size=4)
        backend = SimulatedBackend(bench.sim_spec, bench.task.format)
        sets = make_sets([3] * bench.task.num_exemplars)
        combos = sample_combinations(sets, 9, 2)
        silver = silver_label(bench.devset, combos, bench.task, sets, backend)
        for tally in silver.tallies:
            assert sum(tally.values()) <= 9

    def test_voter_order_permutation_invariant(self):
        bench = build_toy_benchmark(seed=4, dev_size=8, test_size=4)
        backend = SimulatedBackend(bench.sim_spec, bench.task.format)
        sets = make_sets([4] * bench.task.num_exemplars)
        combos = sample_combinations(sets, 12, 4)
        silver_a = silver_label(bench.devset, combos, bench.task, sets, backend)
        shuffled = list(combos)
        random.Random(1).shuffle(shuffled)
        silver_b = silver_label(bench.devset, shuffled, bench.task, sets, backend)
        assert silver_a.labels == silver_b.labels
        assert silver_a.tallies == silver_b.tallies

    def test_warm_cache_second_run_is_free_and_identical(self, tmp_path):
        bench = build_toy_benchmark(seed=6, dev_size=8, test_size=4)
        inner = SimulatedBackend(bench.sim_spec, bench.task.format)
        backend = CachedBackend(inner, CompletionCache(tmp_path))
        sets = make_sets([3] * bench.task.num_exemplars)
        combos = sample_combinations(sets, 6, 6)
        first = silver_label(bench.devset, combos, bench.task, sets, backend)
        calls = inner.calls
        second = silver_label(bench.devset, combos, bench.task, sets, backend)
        assert inner.calls == calls
        assert second.labels == first.labels
        assert second.tallies == first.tallies
