"""Candidate explanation sets, built by leave-one-out sampling.

For each exemplar slot we prompt the model with the other exemplars and their
seed explanations, sample completions at temperature, and keep a sampled
explanation only when its extracted answer matches the slot's gold answer.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .backend import Backend, CompletionRequest
from .formats import (
    Combination,
    FormatError,
    Shot,
    Task,
    TaskFormat,
    extract_answer,
    leave_one_out_shots,
    render_prompt,
)

log = logging.getLogger(__name__)

SEED = "seed"
SAMPLED = "sampled"


class EmptyCandidateSetError(RuntimeError):
    """A slot produced no valid candidates and the seed is excluded."""


@dataclass(frozen=True)
class GenerationConfig:
    num_samples: int = 40
    temperature: float = 0.7
    cap: int = 10
    include_seed: bool = True
    rng_seed: int = 0
    max_tokens: int = 256
    # "order" keeps earliest-sampled candidates; "logprob" keeps highest-scoring
    truncate_by: str = "order"

    def __post_init__(self) -> None:
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if self.cap < 1:
            raise ValueError("cap must be >= 1")
        if self.truncate_by not in ("order", "logprob"):
            raise ValueError("truncate_by must be 'order' or 'logprob'")


@dataclass
class CandidateSet:
    exemplar_index: int
    candidates: list[str]
    provenance: list[str]

    def __post_init__(self) -> None:
        if not self.candidates:
            raise EmptyCandidateSetError(f"slot {self.exemplar_index} has no candidates")
        if len(self.candidates) != len(self.provenance):
            raise ValueError("candidates and provenance must align")

    @property
    def size(self) -> int:
        return len(self.candidates)


def split_completion(fmt: TaskFormat, completion: str) -> tuple[str, str] | None:
    """Split one completion into (explanation, normalized answer).

    The explanation is everything before the final answer-cue clause; the
    answer is parsed from that clause. Returns None when no answer parses.
    """
    answer = extract_answer(fmt, completion)
    if answer is None:
        return None
    pos = completion.rfind(fmt.answer_cue)
    explanation = completion[:pos].strip()
    return explanation, answer


def _dedupe_key(text: str) -> str:
    return " ".join(text.split())


def generate_candidates(
    task: Task, backend: Backend, config: GenerationConfig
) -> list[CandidateSet]:
    """Build one validated candidate set per exemplar slot."""
    results = []
    for slot in range(task.num_exemplars):
        results.append(_generate_for_slot(task, backend, config, slot))
    return results


def _generate_for_slot(
    task: Task, backend: Backend, config: GenerationConfig, slot: int
) -> CandidateSet:
    exemplar = task.exemplars[slot]
    shots = leave_one_out_shots(task, slot)
    prompt = render_prompt(task.format, shots, exemplar.question)
    request = CompletionRequest(
        prompt=prompt,
        temperature=config.temperature,
        num_samples=config.num_samples,
        max_tokens=config.max_tokens,
        stop=task.format.exemplar_separator,
        want_logprobs=config.truncate_by == "logprob",
        seed=config.rng_seed,
        example_count=len(shots) + 1,
    )
    completions = backend.complete(request)

    kept: list[tuple[str, float]] = []
    seen: set[str] = set()
    if config.include_seed:
        seen.add(_dedupe_key(exemplar.seed_explanation))
    for completion in completions:
        parts = split_completion(task.format, completion.text)
        if parts is None:
            continue
        explanation, answer = parts
        if answer != exemplar.gold_answer or not explanation:
            continue
        key = _dedupe_key(explanation)
        if key in seen:
            continue
        seen.add(key)
        kept.append((explanation, completion.total_logprob))

    if config.truncate_by == "logprob":
        kept.sort(key=lambda pair: -pair[1])
    kept = kept[: config.cap]

    candidates = [expl for expl, _ in kept]
    provenance = [SAMPLED] * len(candidates)
    if config.include_seed:
        candidates.insert(0, exemplar.seed_explanation)
        provenance.insert(0, SEED)
        if len(candidates) == 1:
            log.warning("slot %d: no valid sampled candidates, falling back to seed only", slot)
    elif not candidates:
        raise EmptyCandidateSetError(
            f"slot {slot} produced no valid candidates and include_seed is false"
        )
    return CandidateSet(exemplar_index=slot, candidates=candidates, provenance=provenance)


def shots_for_combination(
    task: Task, candidate_sets: Sequence[CandidateSet], combination: Combination
) -> list[Shot]:
    """Render-ready shots using the combination's chosen explanation per slot."""
    if len(combination.indices) != task.num_exemplars:
        raise FormatError("combination length does not match the exemplar count")
    shots = []
    for slot, choice in enumerate(combination.indices):
        cset = candidate_sets[slot]
        if choice >= cset.size:
            raise FormatError(
                f"slot {slot}: candidate index {choice} out of range (size {cset.size})"
            )
        exemplar = task.exemplars[slot]
        shots.append((exemplar.question, cset.candidates[choice], exemplar.gold_answer))
    return shots


def seed_combination(candidate_sets: Sequence[CandidateSet]) -> Combination:
    """The baseline combination selecting each slot's seed explanation."""
    indices = []
    for cset in candidate_sets:
        try:
            indices.append(cset.provenance.index(SEED))
        except ValueError:
            indices.append(0)
    return Combination(tuple(indices))


def save_candidate_sets(path: str | Path, candidate_sets: Sequence[CandidateSet]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for cset in candidate_sets:
            for ordinal, (text, prov) in enumerate(zip(cset.candidates, cset.provenance)):
                record = {
                    "exemplar_index": cset.exemplar_index,
                    "candidate_text": text,
                    "provenance": prov,
                    "sample_ordinal": ordinal,
                }
                fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")


def load_candidate_sets(path: str | Path) -> list[CandidateSet]:
    by_slot: dict[int, list[tuple[int, str, str]]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            by_slot.setdefault(record["exemplar_index"], []).append(
                (record["sample_ordinal"], record["candidate_text"], record["provenance"])
            )
    sets = []
    for slot in sorted(by_slot):
        rows = sorted(by_slot[slot])
        sets.append(
            CandidateSet(
                exemplar_index=slot,
                candidates=[text for _, text, _ in rows],
                provenance=[prov for _, _, prov in rows],
            )
        )
    return sets
