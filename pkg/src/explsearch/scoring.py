"""Objective and proxy scoring of explanation combinations.

The objective is accuracy against silver labels over the dev set. Two proxies
rank combinations without paying a full Pass per candidate: per-slot one-shot
silver accuracy (additive across slots) and pairwise one-shot log-likelihood
(quadratic across slot pairs). Exact top-X enumeration is available for the
additive proxy; the pairwise proxy uses brute force on small spaces and
seeded coordinate-ascent restarts on large ones.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .backend import Backend, CompletionRequest
from .budget import BudgetLedger, osacc_overhead_examples, osll_overhead_examples
from .candidates import CandidateSet, shots_for_combination
from .formats import Combination, Task, extract_answer, render_answer_text, render_prompt
from .kernels import all_combinations, coordinate_ascent, pairwise_scores
from .silver import DevSet, SilverLabels

EXHAUSTIVE_THRESHOLD = 4096


@dataclass
class ObjectiveResult:
    accuracy: float
    hits: int
    labeled: int
    mean_completion_logprob: float
    predictions: list[str | None]


@dataclass
class OneShotAccuracyTable:
    """acc[i][c]: silver accuracy of slot i's candidate c used one-shot.

    matches[i] holds the per-question correctness rows the accuracies were
    reduced from, so scores can be re-derived without re-querying.
    """

    acc: list[np.ndarray]
    matches: list[np.ndarray]
    labeled_questions: list[int]

    @property
    def sizes(self) -> list[int]:
        return [len(row) for row in self.acc]


@dataclass
class PairwiseLogLikMatrix:
    """ll[i, c, j, d]: log-likelihood of slot j's candidate d (with its gold
    answer) given a one-shot prompt from slot i's candidate c. Entries beyond
    a slot's candidate count are -inf padding; the diagonal i == j is unused."""

    ll: np.ndarray
    sizes: np.ndarray

    @property
    def num_slots(self) -> int:
        return len(self.sizes)


def evaluate_objective(
    combination: Combination,
    task: Task,
    candidate_sets: Sequence[CandidateSet],
    devset: DevSet,
    silver: SilverLabels,
    backend: Backend,
    ledger: BudgetLedger | None = None,
) -> ObjectiveResult:
    """Greedy-decode every dev question under the combination's full prompt
    and score against silver labels. Charges one Pass."""
    if len(silver.labels) != devset.size:
        raise ValueError("silver labels do not cover the development set")
    if ledger is not None:
        ledger.charge_objective_evaluation()
    predictions: list[str | None] = []
    logprob_sum = 0.0
    shots = shots_for_combination(task, candidate_sets, combination)
    for question in devset.questions:
        prompt = render_prompt(task.format, shots, question)
        completion = backend.complete(
            CompletionRequest(
                prompt=prompt,
                temperature=0.0,
                num_samples=1,
                stop=task.format.exemplar_separator,
                example_count=len(shots) + 1,
            )
        )[0]
        predictions.append(extract_answer(task.format, completion.text))
        logprob_sum += completion.total_logprob
    hits = 0
    labeled = 0
    for prediction, label in zip(predictions, silver.labels):
        if label is None:
            continue
        labeled += 1
        if prediction == label:
            hits += 1
    accuracy = hits / labeled if labeled else 0.0
    return ObjectiveResult(
        accuracy=accuracy,
        hits=hits,
        labeled=labeled,
        mean_completion_logprob=logprob_sum / devset.size,
        predictions=predictions,
    )


def score_objective(
    combination: Combination,
    task: Task,
    candidate_sets: Sequence[CandidateSet],
    devset: DevSet,
    silver: SilverLabels,
    backend: Backend,
    ledger: BudgetLedger | None = None,
) -> float:
    return evaluate_objective(
        combination, task, candidate_sets, devset, silver, backend, ledger
    ).accuracy


def build_osacc_table(
    candidate_sets: Sequence[CandidateSet],
    task: Task,
    devset: DevSet,
    silver: SilverLabels,
    backend: Backend,
    ledger: BudgetLedger | None = None,
) -> OneShotAccuracyTable:
    """One-shot silver accuracy for every candidate of every slot."""
    labeled_questions = silver.labeled_indices
    if ledger is not None:
        sizes = [cset.size for cset in candidate_sets]
        ledger.charge_examples(osacc_overhead_examples(sizes, devset.size), "osacc_overhead")
    acc_rows: list[np.ndarray] = []
    match_rows: list[np.ndarray] = []
    for slot, cset in enumerate(candidate_sets):
        exemplar = task.exemplars[slot]
        accs = np.zeros(cset.size, dtype=np.float64)
        matches = np.zeros((cset.size, len(labeled_questions)), dtype=bool)
        for c, explanation in enumerate(cset.candidates):
            shot = [(exemplar.question, explanation, exemplar.gold_answer)]
            for col, q_index in enumerate(labeled_questions):
                prompt = render_prompt(task.format, shot, devset.questions[q_index])
                completion = backend.complete(
                    CompletionRequest(
                        prompt=prompt,
                        temperature=0.0,
                        num_samples=1,
                        stop=task.format.exemplar_separator,
                        example_count=2,
                    )
                )[0]
                prediction = extract_answer(task.format, completion.text)
                matches[c, col] = prediction == silver.labels[q_index]
            accs[c] = matches[c].mean() if labeled_questions else 0.0
        acc_rows.append(accs)
        match_rows.append(matches)
    return OneShotAccuracyTable(acc=acc_rows, matches=match_rows, labeled_questions=labeled_questions)


def score_osacc(combination: Combination, table: OneShotAccuracyTable) -> float:
    """Sum over slots of the chosen candidate's one-shot accuracy."""
    if len(combination.indices) != len(table.acc):
        raise ValueError("combination length does not match the table")
    total = 0.0
    for slot, choice in enumerate(combination.indices):
        row = table.acc[slot]
        if choice >= len(row):
            raise IndexError(f"slot {slot}: candidate {choice} outside the table")
        total += float(row[choice])
    return total


def build_osll_matrix(
    candidate_sets: Sequence[CandidateSet],
    task: Task,
    backend: Backend,
    ledger: BudgetLedger | None = None,
) -> PairwiseLogLikMatrix:
    """Score every ordered candidate pair: candidate d of slot j (with gold
    answer) as a continuation of a one-shot prompt from slot i's candidate c.

    Needs no development set.
    """
    k = len(candidate_sets)
    sizes = np.array([cset.size for cset in candidate_sets], dtype=np.int64)
    if ledger is not None:
        ledger.charge_examples(osll_overhead_examples([int(s) for s in sizes]), "osll_overhead")
    n_max = int(sizes.max())
    ll = np.full((k, n_max, k, n_max), -np.inf, dtype=np.float64)
    for i in range(k):
        exemplar_i = task.exemplars[i]
        for c, context_expl in enumerate(candidate_sets[i].candidates):
            shot = [(exemplar_i.question, context_expl, exemplar_i.gold_answer)]
            for j in range(k):
                if j == i:
                    continue
                exemplar_j = task.exemplars[j]
                prompt = render_prompt(task.format, shot, exemplar_j.question)
                for d, cont_expl in enumerate(candidate_sets[j].candidates):
                    continuation = render_answer_text(
                        task.format, cont_expl, exemplar_j.gold_answer
                    )
                    ll[i, c, j, d] = backend.score_continuation(
                        prompt, continuation, example_count=2
                    )
    return PairwiseLogLikMatrix(ll=ll, sizes=sizes)


def score_osll(combination: Combination, matrix: PairwiseLogLikMatrix) -> float:
    """Sum of pairwise log-likelihoods over all ordered slot pairs."""
    indices = combination.indices
    k = matrix.num_slots
    if len(indices) != k:
        raise ValueError("combination length does not match the matrix")
    ll = matrix.ll
    total = 0.0
    for i in range(k):
        ci = indices[i]
        for j in range(k):
            if i == j:
                continue
            total += float(ll[i, ci, j, indices[j]])
    return total


def _additive_total(acc: list[np.ndarray], indices: tuple[int, ...]) -> float:
    total = 0.0
    for slot, choice in enumerate(indices):
        total += float(acc[slot][choice])
    return total


def topk_additive(table: OneShotAccuracyTable, x: int) -> list[Combination]:
    """Exact X best combinations under the additive proxy, descending, ties
    broken by lexicographic index order.

    Best-first frontier search over per-slot candidate lists sorted by
    (-accuracy, index); a state's neighbors demote one slot to its next-best
    candidate, which makes every combination reachable from the top state in
    non-increasing score order.
    """
    k = len(table.acc)
    sizes = table.sizes
    total_combos = 1
    for size in sizes:
        total_combos *= size
    if x < 1 or x > total_combos:
        raise ValueError(f"x must be in [1, {total_combos}]")

    sorted_orig: list[list[int]] = []
    for slot in range(k):
        order = sorted(range(sizes[slot]), key=lambda c: (-float(table.acc[slot][c]), c))
        sorted_orig.append(order)

    def to_original(positions: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(sorted_orig[slot][pos] for slot, pos in enumerate(positions))

    start = tuple([0] * k)
    start_orig = to_original(start)
    heap = [(-_additive_total(table.acc, start_orig), start_orig, start)]
    seen = {start}
    out: list[Combination] = []
    while heap and len(out) < x:
        _, orig, positions = heapq.heappop(heap)
        out.append(Combination(orig))
        for slot in range(k):
            if positions[slot] + 1 >= sizes[slot]:
                continue
            nxt = positions[:slot] + (positions[slot] + 1,) + positions[slot + 1:]
            if nxt in seen:
                continue
            seen.add(nxt)
            nxt_orig = to_original(nxt)
            heapq.heappush(heap, (-_additive_total(table.acc, nxt_orig), nxt_orig, nxt))
    return out


def _pairwise_total(matrix: PairwiseLogLikMatrix, combo_row: np.ndarray) -> float:
    return float(pairwise_scores(matrix.ll, combo_row.reshape(1, -1))[0])


def topk_pairwise(
    matrix: PairwiseLogLikMatrix,
    x: int,
    restarts: int,
    rng_seed: int,
    exhaustive_threshold: int = EXHAUSTIVE_THRESHOLD,
    max_sweeps: int = 64,
) -> list[Combination]:
    """Top combinations under the pairwise proxy, descending, deduplicated.

    Small spaces are brute-forced exactly; otherwise `restarts` seeded
    coordinate-ascent climbs are deduplicated and the best X returned (which
    may be fewer than X distinct local maxima).
    """
    if x < 1:
        raise ValueError("x must be >= 1")
    if restarts < x:
        raise ValueError("restarts must be at least x")
    sizes = matrix.sizes
    total = 1
    for size in sizes:
        total = total * int(size)
    if total <= exhaustive_threshold:
        combos = all_combinations(sizes)
        scores = pairwise_scores(matrix.ll, combos)
        order = np.argsort(-scores, kind="stable")
        top = order[: min(x, total)]
        return [Combination(tuple(int(v) for v in combos[idx])) for idx in top]

    rng = random.Random(rng_seed)
    k = matrix.num_slots
    starts = np.empty((restarts, k), dtype=np.int64)
    orders = np.empty((restarts, k), dtype=np.int64)
    for r in range(restarts):
        for slot in range(k):
            starts[r, slot] = rng.randrange(int(sizes[slot]))
        orders[r] = rng.sample(range(k), k)
    finals = coordinate_ascent(matrix.ll, sizes, starts, orders, max_sweeps)
    unique = {tuple(int(v) for v in row) for row in finals}
    ranked = sorted(unique, key=lambda combo: (-_pairwise_total(matrix, np.array(combo)), combo))
    return [Combination(combo) for combo in ranked[:x]]


# -- persistence -------------------------------------------------------


def save_osacc_table(path: str | Path, table: OneShotAccuracyTable) -> None:
    payload = {
        "acc": [row.tolist() for row in table.acc],
        "matches": [row.astype(int).tolist() for row in table.matches],
        "labeled_questions": table.labeled_questions,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_osacc_table(path: str | Path) -> OneShotAccuracyTable:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return OneShotAccuracyTable(
        acc=[np.array(row, dtype=np.float64) for row in payload["acc"]],
        matches=[np.array(row, dtype=bool) for row in payload["matches"]],
        labeled_questions=list(payload["labeled_questions"]),
    )


def save_osll_matrix(path: str | Path, matrix: PairwiseLogLikMatrix) -> None:
    np.savez_compressed(path, ll=matrix.ll, sizes=matrix.sizes)


def load_osll_matrix(path: str | Path) -> PairwiseLogLikMatrix:
    with np.load(path) as data:
        return PairwiseLogLikMatrix(ll=data["ll"].copy(), sizes=data["sizes"].copy())
