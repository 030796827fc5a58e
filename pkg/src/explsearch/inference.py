"""Decoding a combination's prediction for one question.

Greedy decoding is temperature-0 single-sample generation; self-consistency
draws n samples at temperature and majority-votes the extracted answers.
"""

from __future__ import annotations

from typing import Sequence

from .backend import Backend, CompletionRequest
from .candidates import CandidateSet, shots_for_combination
from .formats import Combination, Task, extract_answer, render_prompt
from .voting import majority_vote


def decode_greedy(
    combination: Combination,
    task: Task,
    candidate_sets: Sequence[CandidateSet],
    question: str,
    backend: Backend,
) -> str | None:
    """Single greedy prediction; None when the completion has no parseable answer."""
    shots = shots_for_combination(task, candidate_sets, combination)
    prompt = render_prompt(task.format, shots, question)
    request = CompletionRequest(
        prompt=prompt,
        temperature=0.0,
        num_samples=1,
        stop=task.format.exemplar_separator,
        example_count=len(shots) + 1,
    )
    completion = backend.complete(request)[0]
    return extract_answer(task.format, completion.text)


def decode_self_consistency(
    combination: Combination,
    task: Task,
    candidate_sets: Sequence[CandidateSet],
    question: str,
    backend: Backend,
    n: int = 10,
    temperature: float = 0.7,
) -> str | None:
    """Majority vote over n sampled predictions; abstentions are excluded.

    With n=1 and temperature 0 this reduces exactly to greedy decoding.
    """
    if n < 1:
        raise ValueError("self-consistency needs n >= 1")
    if temperature == 0 and n == 1:
        return decode_greedy(combination, task, candidate_sets, question, backend)
    shots = shots_for_combination(task, candidate_sets, combination)
    prompt = render_prompt(task.format, shots, question)
    request = CompletionRequest(
        prompt=prompt,
        temperature=temperature,
        num_samples=n,
        stop=task.format.exemplar_separator,
        example_count=len(shots) + 1,
    )
    completions = backend.complete(request)
    tally: dict[str, int] = {}
    for completion in completions:
        answer = extract_answer(task.format, completion.text)
        if answer is None:
            continue
        tally[answer] = tally.get(answer, 0) + 1
    if not tally:
        return None
    return majority_vote(tally)
