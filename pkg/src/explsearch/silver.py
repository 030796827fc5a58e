"""Pseudo-labeling an unlabeled development set.

Random combinations of candidate explanations each predict every development
question under greedy decoding; the majority-voted answer becomes the silver
label. Unparseable predictions count as abstentions, and a question where all
voters abstain stays unlabeled.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .backend import Backend
from .candidates import CandidateSet
from .formats import Combination, Task
from .inference import decode_greedy
from .voting import majority_vote

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DevSet:
    questions: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.questions:
            raise ValueError("development set must contain at least one question")
        if len(set(self.questions)) != len(self.questions):
            raise ValueError("development questions must be distinct")

    @property
    def size(self) -> int:
        return len(self.questions)


@dataclass
class SilverLabels:
    labels: list[str | None]
    tallies: list[dict[str, int]]
    num_voters: int

    @property
    def labeled_indices(self) -> list[int]:
        return [i for i, label in enumerate(self.labels) if label is not None]


def sample_combinations(
    candidate_sets: Sequence[CandidateSet], j: int, rng_seed: int
) -> list[Combination]:
    """Draw j combinations uniformly per slot, with replacement, deterministically."""
    if j < 1:
        raise ValueError("need at least one combination")
    for cset in candidate_sets:
        if cset.size < 1:
            raise ValueError(f"slot {cset.exemplar_index} has an empty candidate set")
    rng = random.Random(rng_seed)
    combos = []
    for _ in range(j):
        combos.append(Combination(tuple(rng.randrange(cset.size) for cset in candidate_sets)))
    return combos


def silver_label(
    devset: DevSet,
    combinations: Sequence[Combination],
    task: Task,
    candidate_sets: Sequence[CandidateSet],
    backend: Backend,
) -> SilverLabels:
    """Majority-vote pseudo-labels for every development question."""
    if not combinations:
        raise ValueError("need at least one voting combination")
    labels: list[str | None] = []
    tallies: list[dict[str, int]] = []
    for question in devset.questions:
        tally: dict[str, int] = {}
        for combination in combinations:
            answer = decode_greedy(combination, task, candidate_sets, question, backend)
            if answer is None:
                continue
            tally[answer] = tally.get(answer, 0) + 1
        if tally:
            labels.append(majority_vote(tally))
        else:
            log.warning("question %r: all voters abstained; leaving unlabeled", question[:60])
            labels.append(None)
        tallies.append(tally)
    return SilverLabels(labels=labels, tallies=tallies, num_voters=len(combinations))


def save_silver(path: str | Path, silver: SilverLabels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"num_voters": silver.num_voters}, sort_keys=True) + "\n")
        for index, (label, tally) in enumerate(zip(silver.labels, silver.tallies)):
            record = {"question_index": index, "label": label, "tally": tally}
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")


def load_silver(path: str | Path) -> SilverLabels:
    labels: list[str | None] = []
    tallies: list[dict[str, int]] = []
    num_voters = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if "num_voters" in record and "question_index" not in record:
                num_voters = record["num_voters"]
                continue
            labels.append(record["label"])
            tallies.append({k: int(v) for k, v in record["tally"].items()})
    return SilverLabels(labels=labels, tallies=tallies, num_voters=num_voters)
