import pytest

from explsearch.backend import Completion, UsageLedger, count_tokens
from explsearch.candidates import (
    SEED,
    EmptyCandidateSetError,
    GenerationConfig,
    generate_candidates,
    load_candidate_sets,
    save_candidate_sets,
    seed_combination,
    shots_for_combination,
    split_completion,
)
from explsearch.formats import Combination, extract_answer, render_answer_text
from explsearch.samples import GSM_FORMAT
from explsearch.simulated import SimulatedBackend
from explsearch.toybench import build_toy_benchmark


class FabricatedBackend:
    """Emits a fixed list of completion texts for every request."""

    def __init__(self, texts):
        self.texts = texts
        self.usage = UsageLedger()
        self.calls = 0

    @property
    def backend_id(self):
        return "fabricated:test"

    def complete(self, request):
        self.calls += 1
        self.usage.add(count_tokens(request.prompt), 0, request.example_count)
        out = [
            Completion(text=t, total_logprob=-float(i + 1), token_count=count_tokens(t))
            for i, t in enumerate(self.texts)
        ]
        return out[: request.num_samples]

    def score_continuation(self, prompt, continuation, *, example_count=2):
        raise NotImplementedError


@pytest.fixture(scope="module")
def bench():
    return build_toy_benchmark(seed=9)


@pytest.fixture
def same_gold_task():
    from explsearch.formats import Exemplar, Task

    return Task(
        format=GSM_FORMAT,
        exemplars=(
            Exemplar(question="What is 2 + 3?", gold_answer="5", seed_explanation="2 + 3 = 5."),
            Exemplar(question="What is 1 + 4?", gold_answer="5", seed_explanation="1 + 4 = 5."),
        ),
    )


@pytest.fixture(scope="module")
def generated(bench):
    backend = SimulatedBackend(bench.sim_spec, bench.task.format)
    sets = generate_candidates(bench.task, backend, GenerationConfig(rng_seed=9))
    return sets


class TestSplitCompletion:
    def test_splits_explanation_from_answer(self):
        completion = "Jay scored 4 + 6 = 10 points. The answer is 26."
        assert split_completion(GSM_FORMAT, completion) == (
            "Jay scored 4 + 6 = 10 points.", "26",
        )

    def test_no_cue_returns_none(self):
        assert split_completion(GSM_FORMAT, "rambling without any ending") is None

    def test_double_cue_keeps_first_in_explanation(self):
        completion = "The answer is 5 maybe. Recheck. The answer is 7."
        explanation, answer = split_completion(GSM_FORMAT, completion)
        assert explanation == "The answer is 5 maybe. Recheck."
        assert answer == "7"


class TestGenerateCandidates:
    def test_all_valid_distinct_yields_cap_plus_seed(self, bench):
        gold = bench.task.exemplars[0].gold_answer
        texts = [f" Distinct path {i} leads there. The answer is {gold}." for i in range(40)]
        # only slot 0's gold matches; other slots fall back to their seeds
        backend = FabricatedBackend(texts)
        sets = generate_candidates(bench.task, backend, GenerationConfig(rng_seed=0))
        assert sets[0].size == 11
        assert sets[0].provenance[0] == SEED

    def test_zero_valid_with_seed_falls_back(self, bench, caplog):
        backend = FabricatedBackend([" no cue at all"] * 40)
        with caplog.at_level("WARNING"):
            sets = generate_candidates(bench.task, backend, GenerationConfig(rng_seed=0))
        assert all(s.size == 1 and s.provenance == [SEED] for s in sets)
        assert any("falling back to seed" in rec.message for rec in caplog.records)

    def test_zero_valid_without_seed_raises(self, bench):
        backend = FabricatedBackend([" no cue at all"] * 40)
        with pytest.raises(EmptyCandidateSetError):
            generate_candidates(
                bench.task, backend, GenerationConfig(rng_seed=0, include_seed=False)
            )

    def test_valid_sample_count_within_draw_range(self, generated):
        for cset in generated:
            sampled = sum(1 for p in cset.provenance if p == "sampled")
            assert 0 <= sampled <= 40
            assert cset.size <= 11

    def test_candidates_revalidate_against_gold(self, bench, generated):
        fmt = bench.task.format
        for cset in generated:
            gold = bench.task.exemplars[cset.exemplar_index].gold_answer
            for text in cset.candidates:
                rendered = render_answer_text(fmt, text, gold)
                assert extract_answer(fmt, rendered) == gold

    def test_deterministic_given_seed(self, bench, generated):
        backend = SimulatedBackend(bench.sim_spec, bench.task.format)
        again = generate_candidates(bench.task, backend, GenerationConfig(rng_seed=9))
        assert [s.candidates for s in again] == [s.candidates for s in generated]

    def test_dedupe_collapses_whitespace_variants(self, same_gold_task):
        texts = [
            " Same  path here. The answer is 5.",
            " Same path here. The answer is 5.",
            " Another path. The answer is 5.",
        ]
        backend = FabricatedBackend(texts)
        config = GenerationConfig(num_samples=3, rng_seed=0, include_seed=False)
        sets = generate_candidates(same_gold_task, backend, config)
        assert sets[0].size == 2

    def test_truncate_by_logprob_keeps_best(self, same_gold_task):
        # fabricated logprobs decrease with sample ordinal, so reversing the
        # texts makes "logprob" order the opposite of "order"
        texts = [f" Path {i}. The answer is 5." for i in range(5)]
        backend = FabricatedBackend(list(reversed(texts)))
        config = GenerationConfig(
            num_samples=5, cap=2, rng_seed=0, include_seed=False, truncate_by="logprob"
        )
        sets = generate_candidates(same_gold_task, backend, config)
        assert sets[0].candidates == ["Path 4.", "Path 3."]


class TestCombinationHelpers:
    def test_shots_follow_combination(self, bench, generated):
        combo = Combination(tuple(min(1, s.size - 1) for s in generated))
        shots = shots_for_combination(bench.task, generated, combo)
        assert len(shots) == bench.task.num_exemplars
        for slot, (question, explanation, answer) in enumerate(shots):
            assert question == bench.task.exemplars[slot].question
            assert explanation == generated[slot].candidates[combo.indices[slot]]

    def test_seed_combination_points_at_seed(self, generated):
        combo = seed_combination(generated)
        for slot, choice in enumerate(combo.indices):
            assert generated[slot].provenance[choice] == SEED

    def test_out_of_range_index_rejected(self, bench, generated):
        bad = Combination(tuple(99 for _ in generated))
        with pytest.raises(Exception):
            shots_for_combination(bench.task, generated, bad)


def test_persistence_round_trip(tmp_path, generated):
    path = tmp_path / "candidates.jsonl"
    save_candidate_sets(path, generated)
    loaded = load_candidate_sets(path)
    assert [s.candidates for s in loaded] == [s.candidates for s in generated]
    assert [s.provenance for s in loaded] == [s.provenance for s in generated]
