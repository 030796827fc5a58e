from __future__ import annotations

import pytest

from explsearch.backend import Completion, UsageLedger, count_tokens
from explsearch.formats import TaskFormat, parse_prompt, render_answer_text
from explsearch.toybench import build_toy_benchmark


class ScriptedBackend:
    """Test double that answers each query from a fixed script.

    Queries missing from the script produce cue-less text, i.e. abstentions.
    """

    def __init__(self, fmt: TaskFormat, answers: dict[str, str], logprob: float = -1.0):
        self.fmt = fmt
        self.answers = dict(answers)
        self.logprob = logprob
        self.usage = UsageLedger()
        self.calls = 0

    @property
    def backend_id(self) -> str:
        return "scripted:test"

    def complete(self, request):
        self.calls += 1
        _, query = parse_prompt(self.fmt, request.prompt)
        answer = self.answers.get(query)
        if answer is None:
            text = " rambling with no recognizable ending"
        else:
            text = render_answer_text(self.fmt, "scripted reasoning", answer)
        self.usage.add(count_tokens(request.prompt), count_tokens(text) * request.num_samples,
                       request.example_count)
        return [
            Completion(text=text, total_logprob=self.logprob, token_count=count_tokens(text))
            for _ in range(request.num_samples)
        ]

    def score_continuation(self, prompt, continuation, *, example_count=2):
        self.calls += 1
        self.usage.add(count_tokens(prompt), count_tokens(continuation), example_count)
        return self.logprob


@pytest.fixture(scope="session")
def toy_bench():
    return build_toy_benchmark(seed=42)
