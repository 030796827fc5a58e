import math

import pytest

from explsearch.backend import (
    BackendError,
    CapabilityError,
    Completion,
    CompletionRequest,
    HTTPCompletionBackend,
    ProtocolError,
    UsageLedger,
    count_tokens,
    pass_cost,
)
from explsearch.formats import render_prompt
from explsearch.samples import GSM_FORMAT
from explsearch.simulated import CLAMP_HI, SimulatedBackend, SimulatedModelSpec
from explsearch.toybench import TOY_FORMAT


class TestCompletionRequest:
    def test_greedy_with_multiple_samples_rejected(self):
        with pytest.raises(ValueError):
            CompletionRequest(prompt="p", temperature=0.0, num_samples=3)

    def test_negative_temperature_rejected(self):
        with pytest.raises(ValueError):
            CompletionRequest(prompt="p", temperature=-0.1)

    def test_sampling_with_many_samples_ok(self):
        request = CompletionRequest(prompt="p", temperature=0.7, num_samples=40)
        assert request.num_samples == 40


class TestPassCost:
    def test_standard_dimensions(self):
        assert pass_cost(256, 8) == 2304

    def test_minimal(self):
        assert pass_cost(1, 1) == 2

    def test_nine_shots(self):
        assert pass_cost(256, 9) == 2560

    def test_invalid(self):
        with pytest.raises(ValueError):
            pass_cost(0, 8)


class TestUsageLedger:
    def test_accumulates(self):
        ledger = UsageLedger()
        ledger.add(10, 5, 2)
        ledger.add(1, 1, 1)
        snap = ledger.snapshot()
        assert (snap.prompt_tokens, snap.completion_tokens, snap.examples_processed) == (11, 6, 3)
        assert snap.calls == 2

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            UsageLedger().add(-1, 0, 0)


def _http_response(texts, with_logprobs=False, usage=None):
    choices = []
    for text in texts:
        choice = {"text": text}
        if with_logprobs:
            choice["logprobs"] = {
                "tokens": text.split(),
                "token_logprobs": [-0.5] * len(text.split()),
            }
        choices.append(choice)
    return {
        "choices": choices,
        "usage": usage or {"prompt_tokens": 7, "completion_tokens": 3},
    }


class FakeTransport:
    def __init__(self, responses):
        self.responses = list(responses)
        self.requests = []

    def __call__(self, url, headers, payload, timeout):
        self.requests.append((url, headers, payload))
        status, body = self.responses.pop(0)
        return status, body


def make_http(transport, retries=3):
    return HTTPCompletionBackend(
        base_url="https://example.test/v1",
        model="test-model",
        api_key="sk-test",
        max_retries=retries,
        backoff_seconds=0.0,
        transport=transport,
    )


class TestHTTPBackend:
    def test_complete_parses_choices_and_usage(self):
        transport = FakeTransport([(200, _http_response([" The answer is 4."]))])
        backend = make_http(transport)
        out = backend.complete(CompletionRequest(prompt="Q", temperature=0.0))
        assert out == [Completion(text=" The answer is 4.", total_logprob=0.0, token_count=4)]
        snap = backend.usage.snapshot()
        assert (snap.prompt_tokens, snap.completion_tokens) == (7, 3)
        url, headers, payload = transport.requests[0]
        assert url.endswith("/completions")
        assert headers["Authorization"] == "Bearer sk-test"
        assert payload["n"] == 1 and payload["model"] == "test-model"

    def test_retries_on_429_then_succeeds(self):
        transport = FakeTransport([(429, {}), (200, _http_response(["ok"]))])
        backend = make_http(transport)
        out = backend.complete(CompletionRequest(prompt="Q"))
        assert out[0].text == "ok"
        assert len(transport.requests) == 2

    def test_fails_after_max_retries(self):
        transport = FakeTransport([(500, {}), (503, {}), (502, {})])
        backend = make_http(transport)
        with pytest.raises(BackendError):
            backend.complete(CompletionRequest(prompt="Q"))
        assert len(transport.requests) == 3

    def test_client_error_not_retried(self):
        transport = FakeTransport([(400, {"error": "bad"})])
        backend = make_http(transport)
        with pytest.raises(ProtocolError):
            backend.complete(CompletionRequest(prompt="Q"))
        assert len(transport.requests) == 1

    def test_choice_count_mismatch_is_protocol_error(self):
        transport = FakeTransport([(200, _http_response(["a", "b"]))])
        backend = make_http(transport)
        with pytest.raises(ProtocolError):
            backend.complete(CompletionRequest(prompt="Q"))

    def test_score_continuation_sums_continuation_tokens(self):
        prompt, continuation = "PPPP", " tail words"
        body = {
            "choices": [
                {
                    "text": prompt + continuation,
                    "logprobs": {
                        "tokens": ["PPPP", " tail", " words"],
                        "token_logprobs": [None, -1.5, -2.0],
                        "text_offset": [0, 4, 9],
                    },
                }
            ],
            "usage": {"prompt_tokens": 3, "completion_tokens": 0},
        }
        backend = make_http(FakeTransport([(200, body)]))
        assert backend.score_continuation(prompt, continuation) == pytest.approx(-3.5)

    def test_score_without_logprobs_is_capability_error(self):
        body = {"choices": [{"text": "x"}], "usage": {}}
        backend = make_http(FakeTransport([(200, body)]))
        with pytest.raises(CapabilityError):
            backend.score_continuation("p", "c")


def sim_backend(spec=None, fmt=TOY_FORMAT):
    spec = spec or SimulatedModelSpec(rng_seed=7)
    return SimulatedBackend(spec, fmt)


def one_shot_prompt(fmt=GSM_FORMAT, explanation="All quantities add to 4.", query="What is 2 + 2?"):
    return render_prompt(fmt, [("What gives 4?", explanation, "4")], query)


class TestSimulatedBackend:
    def test_repeat_requests_identical(self):
        backend = sim_backend(fmt=GSM_FORMAT)
        request = CompletionRequest(
            prompt=one_shot_prompt(), temperature=0.7, num_samples=5, seed=3
        )
        first = backend.complete(request)
        second = sim_backend(fmt=GSM_FORMAT).complete(request)
        assert first == second

    def test_clamped_probability_monte_carlo(self):
        # quality-1.0 shot, zero difficulty, base 0.5, weight 0.5 -> clamp to 0.98
        explanation = "the single perfect explanation"
        query = "What is 2 + 2?"
        spec = SimulatedModelSpec(
            rng_seed=11,
            base_accuracy=0.5,
            quality_weight=0.5,
            explanation_quality={explanation: 1.0},
            question_difficulty={query: 0.0},
            answer_key={query: "4"},
        )
        backend = SimulatedBackend(spec, GSM_FORMAT)
        prompt = one_shot_prompt(explanation=explanation, query=query)
        assert backend.correct_probability(prompt) == CLAMP_HI
        completions = backend.complete(
            CompletionRequest(prompt=prompt, temperature=0.7, num_samples=1000, max_tokens=64)
        )
        from explsearch.formats import extract_answer

        correct = sum(1 for c in completions if extract_answer(GSM_FORMAT, c.text) == "4")
        assert 0.96 <= correct / 1000 <= 1.0
        # greedy decoding at p=0.98 deterministically takes the modal branch
        greedy = backend.complete(CompletionRequest(prompt=prompt, temperature=0.0))[0]
        assert extract_answer(GSM_FORMAT, greedy.text) == "4"

    @pytest.mark.parametrize("quality,difficulty", [(0.2, 0.1), (0.5, 0.0), (0.9, 0.3)])
    def test_calibration_within_three_sigma(self, quality, difficulty):
        explanation = "calibration probe explanation"
        query = "What is 1 + 3?"
        spec = SimulatedModelSpec(
            rng_seed=5,
            base_accuracy=0.5,
            quality_weight=0.4,
            explanation_quality={explanation: quality},
            question_difficulty={query: difficulty},
            answer_key={query: "4"},
        )
        backend = SimulatedBackend(spec, GSM_FORMAT)
        prompt = one_shot_prompt(explanation=explanation, query=query)
        p = backend.correct_probability(prompt)
        n = 2000
        completions = backend.complete(
            CompletionRequest(prompt=prompt, temperature=0.7, num_samples=n, max_tokens=64)
        )
        from explsearch.formats import extract_answer

        frequency = sum(
            1 for c in completions if extract_answer(GSM_FORMAT, c.text) == "4"
        ) / n
        assert abs(frequency - p) <= 3 * math.sqrt(p * (1 - p) / n)

    def test_greedy_is_deterministic_mode(self):
        backend = sim_backend(fmt=GSM_FORMAT)
        request = CompletionRequest(prompt=one_shot_prompt(), temperature=0.0)
        assert backend.complete(request) == backend.complete(request)

    def test_score_finite_and_nonpositive(self):
        backend = sim_backend(fmt=GSM_FORMAT)
        score = backend.score_continuation(one_shot_prompt(), " blah. The answer is 9.")
        assert math.isfinite(score) and score <= 0

    def test_correct_scores_above_incorrect(self):
        explanation = "probe"
        query = "What is 2 + 2?"
        for target_p in (0.55, 0.7, 0.9):
            spec = SimulatedModelSpec(
                rng_seed=3,
                base_accuracy=target_p,
                quality_weight=0.0,
                question_difficulty={query: 0.0},
                answer_key={query: "4"},
            )
            backend = SimulatedBackend(spec, GSM_FORMAT)
            prompt = one_shot_prompt(explanation=explanation, query=query)
            good = backend.score_continuation(prompt, " ok. The answer is 4.")
            bad = backend.score_continuation(prompt, " ok. The answer is 5.")
            assert good > bad

    def test_score_repeatable(self):
        backend = sim_backend(fmt=GSM_FORMAT)
        args = (one_shot_prompt(), " fine. The answer is 4.")
        assert backend.score_continuation(*args) == backend.score_continuation(*args)

    def test_usage_counts_examples_per_request(self):
        backend = sim_backend(fmt=GSM_FORMAT)
        backend.complete(
            CompletionRequest(prompt=one_shot_prompt(), temperature=0.7, num_samples=4,
                              example_count=2)
        )
        assert backend.usage.snapshot().examples_processed == 2

    def test_token_counting_is_word_count(self):
        assert count_tokens("one two  three\nfour") == 4

    def test_concurrent_requests_meter_correctly(self):
        from concurrent.futures import ThreadPoolExecutor

        backend = sim_backend(fmt=GSM_FORMAT)
        requests = [
            CompletionRequest(
                prompt=one_shot_prompt(query=f"What is {i} + {i}?"),
                temperature=0.7,
                num_samples=2,
                example_count=2,
            )
            for i in range(32)
        ]
        sequential = [sim_backend(fmt=GSM_FORMAT).complete(r) for r in requests]
        with ThreadPoolExecutor(max_workers=8) as pool:
            concurrent = list(pool.map(backend.complete, requests))
        assert concurrent == sequential
        snap = backend.usage.snapshot()
        assert snap.calls == 32
        assert snap.examples_processed == 64
