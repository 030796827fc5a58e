"""End-to-end search strategies over explanation combinations.

Strategies propose candidate combinations (uniformly at random, or ranked by
one of the proxy metrics, or a union of both), then spend the evaluation
budget scoring them against silver labels and return the best. The
true-few-shot strategy has no dev set and directly takes the pairwise proxy's
top combination.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Sequence

from .backend import Backend, UsageRecord, pass_cost
from .budget import BudgetLedger, osacc_overhead_examples, osll_overhead_examples
from .candidates import CandidateSet, seed_combination
from .formats import Combination, Task
from .inference import decode_greedy, decode_self_consistency
from .scoring import (
    OneShotAccuracyTable,
    PairwiseLogLikMatrix,
    build_osacc_table,
    build_osll_matrix,
    evaluate_objective,
    score_osacc,
    score_osll,
    topk_additive,
    topk_pairwise,
)
from .silver import DevSet, SilverLabels, sample_combinations

log = logging.getLogger(__name__)

STRATEGIES = ("naive", "osacc", "osll", "ensemble", "true_few_shot")

DEFAULT_BUDGET_PASSES = 50.0
DEFAULT_RESTARTS = 64


class ConfigurationError(ValueError):
    """The search plan is inconsistent with the provided inputs."""


@dataclass(frozen=True)
class SearchPlan:
    strategy: str = "ensemble"
    budget_passes: float = DEFAULT_BUDGET_PASSES
    candidates_to_rank: int | None = None
    rng_seed: int = 0
    restarts: int = DEFAULT_RESTARTS
    exhaustive_threshold: int = 4096

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ConfigurationError(f"unknown strategy {self.strategy!r}")
        if self.budget_passes <= 0:
            raise ConfigurationError("budget_passes must be positive")
        if self.candidates_to_rank is not None and self.candidates_to_rank < 1:
            raise ConfigurationError("candidates_to_rank must be positive")


@dataclass
class ScoredCombination:
    combination: Combination
    source: str
    proxy_score: float | None = None
    objective_score: float | None = None
    mean_completion_logprob: float | None = None

    def to_dict(self) -> dict:
        return {
            "indices": list(self.combination.indices),
            "source": self.source,
            "proxy_score": self.proxy_score,
            "objective_score": self.objective_score,
            "mean_completion_logprob": self.mean_completion_logprob,
        }


@dataclass
class SearchResult:
    strategy: str
    best: ScoredCombination | None
    all_evaluated: list[ScoredCombination]
    seed_baseline: ScoredCombination
    ranked: list[Combination]
    ledger: BudgetLedger
    usage: UsageRecord
    truncated: bool = False
    rng_seed: int = 0
    selected_explanations: list[str] = field(default_factory=list)
    # optional oracle curve {x: best test accuracy among the top-x ranked},
    # filled in by test evaluation tooling when a labeled test set exists
    silver_curve: dict | None = None

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "rng_seed": self.rng_seed,
            "best": self.best.to_dict() if self.best else None,
            "all_evaluated": [sc.to_dict() for sc in self.all_evaluated],
            "seed_baseline": self.seed_baseline.to_dict(),
            "ranked": [list(c.indices) for c in self.ranked],
            "ledger": self.ledger.to_dict(),
            "usage": self.usage.to_dict(),
            "truncated": self.truncated,
            "selected_explanations": self.selected_explanations,
            "silver_curve": self.silver_curve,
        }


def derive_rank_count(
    strategy: str,
    budget_passes: float,
    m: int,
    k: int,
    sizes: Sequence[int],
) -> int:
    """How many combinations a strategy may score against silver labels.

    Random proposal pays no overhead, so it ranks the whole budget. The
    pairwise proxy's overhead is charged as a flat two-Pass allowance; the
    table-based proxies subtract their exact overheads, which at the standard
    dimensions (M=256, K=8, 8 candidates per slot) yields 50/48/32/32 for
    naive/osll/osacc/ensemble at a budget of 50, and exactly 2 for ensemble
    at a reduced budget of 20.
    """
    unit = pass_cost(m, k)
    if strategy == "naive":
        return max(1, int(budget_passes))
    if strategy == "osll":
        return max(1, int(budget_passes) - 2)
    if strategy in ("osacc", "ensemble"):
        overhead = (osll_overhead_examples(sizes) + osacc_overhead_examples(sizes, m)) / unit
        return max(1, int(budget_passes - overhead))
    raise ConfigurationError(f"strategy {strategy!r} does not rank combinations")


def _distinct_random_fill(
    candidate_sets: Sequence[CandidateSet],
    existing: set[tuple[int, ...]],
    needed: int,
    rng: random.Random,
) -> list[Combination]:
    """Draw combinations not yet selected; gives up once the space is exhausted."""
    space = 1
    for cset in candidate_sets:
        space *= cset.size
    fills: list[Combination] = []
    attempts = 0
    while len(fills) < needed and len(existing) < space and attempts < 10000 * needed:
        attempts += 1
        combo = tuple(rng.randrange(cset.size) for cset in candidate_sets)
        if combo in existing:
            continue
        existing.add(combo)
        fills.append(Combination(combo))
    return fills


def run_search(
    plan: SearchPlan,
    task: Task,
    candidate_sets: Sequence[CandidateSet],
    backend: Backend,
    devset: DevSet | None = None,
    silver: SilverLabels | None = None,
    osacc_table: OneShotAccuracyTable | None = None,
    osll_matrix: PairwiseLogLikMatrix | None = None,
) -> SearchResult:
    """Execute one strategy end to end and return the selected combination.

    Prebuilt proxy artifacts may be passed in; their overhead is still charged
    to the ledger at the standard rates (caching never discounts the budget).
    """
    strategy = plan.strategy
    needs_dev = strategy in ("naive", "osacc", "ensemble")
    if needs_dev and (devset is None or silver is None):
        raise ConfigurationError(f"strategy {strategy!r} requires a development set and silver labels")
    if strategy == "osll" and (devset is None or silver is None):
        log.info("osll without a development set degrades to true_few_shot")
        strategy = "true_few_shot"

    sizes = [cset.size for cset in candidate_sets]
    k = task.num_exemplars
    m = devset.size if devset is not None else 0
    ledger = BudgetLedger(m=m, k=k, budget_passes=plan.budget_passes)
    usage_before = backend.usage.snapshot()
    rng = random.Random(plan.rng_seed)

    table = osacc_table
    matrix = osll_matrix
    overhead_allowance = 0.0

    def ensure_table() -> OneShotAccuracyTable:
        nonlocal table
        if table is None:
            table = build_osacc_table(candidate_sets, task, devset, silver, backend, ledger)
        else:
            ledger.charge_examples(osacc_overhead_examples(sizes, m), "osacc_overhead")
        return table

    def ensure_matrix() -> PairwiseLogLikMatrix:
        nonlocal matrix
        if matrix is None:
            matrix = build_osll_matrix(candidate_sets, task, backend, ledger)
        else:
            ledger.charge_examples(osll_overhead_examples(sizes), "osll_overhead")
        return matrix

    ranked: list[Combination] = []
    to_evaluate: list[tuple[Combination, str, float | None]] = []

    if strategy == "true_few_shot":
        matrix = ensure_matrix()
        ranked = topk_pairwise(
            matrix, 1, max(1, plan.restarts), plan.rng_seed, plan.exhaustive_threshold
        )
        top = ranked[0]
        best = ScoredCombination(
            combination=top, source="osll", proxy_score=score_osll(top, matrix)
        )
        return _finalize(
            plan, task, candidate_sets, backend, ledger, usage_before,
            best=best, evaluated=[], ranked=ranked, truncated=False,
        )

    count = plan.candidates_to_rank or derive_rank_count(
        strategy, plan.budget_passes, m, k, sizes
    )

    if strategy == "naive":
        proposals = sample_combinations(candidate_sets, count, plan.rng_seed)
        to_evaluate = [(combo, "naive", None) for combo in proposals]
        ranked = proposals
    elif strategy == "osacc":
        table = ensure_table()
        overhead_allowance += ledger.breakdown.get("osacc_overhead", 0) / ledger.pass_examples
        ranked = topk_additive(table, min(count, _space_size(sizes)))
        to_evaluate = [(combo, "osacc", score_osacc(combo, table)) for combo in ranked]
    elif strategy == "osll":
        matrix = ensure_matrix()
        overhead_allowance += ledger.breakdown.get("osll_overhead", 0) / ledger.pass_examples
        ranked = topk_pairwise(
            matrix, count, max(count, plan.restarts), plan.rng_seed, plan.exhaustive_threshold
        )
        to_evaluate = [(combo, "osll", score_osll(combo, matrix)) for combo in ranked]
    elif strategy == "ensemble":
        table = ensure_table()
        matrix = ensure_matrix()
        overhead_allowance += (
            ledger.breakdown.get("osacc_overhead", 0) + ledger.breakdown.get("osll_overhead", 0)
        ) / ledger.pass_examples
        half = max(1, count // 2)
        from_acc = topk_additive(table, min(half, _space_size(sizes)))
        from_ll = topk_pairwise(
            matrix, half, max(half, plan.restarts), plan.rng_seed, plan.exhaustive_threshold
        )
        chosen: set[tuple[int, ...]] = set()
        for combo in from_acc:
            if combo.indices not in chosen:
                chosen.add(combo.indices)
                to_evaluate.append((combo, "osacc", score_osacc(combo, table)))
        for combo in from_ll:
            if combo.indices not in chosen:
                chosen.add(combo.indices)
                to_evaluate.append((combo, "osll", score_osll(combo, matrix)))
        ranked = [combo for combo, _, _ in to_evaluate]

    # when the proxies propose fewer distinct combinations than budgeted
    # (proxy-top overlap, or climbs collapsing into few local maxima), the
    # saved budget rolls into extra random evaluations
    if strategy in ("osacc", "osll", "ensemble") and len(to_evaluate) < count:
        chosen = {combo.indices for combo, _, _ in to_evaluate}
        missing = count - len(to_evaluate)
        for combo in _distinct_random_fill(candidate_sets, chosen, missing, rng):
            to_evaluate.append((combo, "naive", None))

    evaluated: list[ScoredCombination] = []
    truncated = False
    for combo, source, proxy in to_evaluate:
        if ledger.would_exceed(ledger.pass_examples, overhead_allowance):
            truncated = True
            log.warning("budget exhausted after %d evaluations", len(evaluated))
            break
        result = evaluate_objective(combo, task, candidate_sets, devset, silver, backend, ledger)
        evaluated.append(
            ScoredCombination(
                combination=combo,
                source=source,
                proxy_score=proxy,
                objective_score=result.accuracy,
                mean_completion_logprob=result.mean_completion_logprob,
            )
        )
    if len(evaluated) < len(to_evaluate):
        truncated = True

    best = None
    for sc in evaluated:
        if best is None or sc.objective_score > best.objective_score:
            best = sc
    return _finalize(
        plan, task, candidate_sets, backend, ledger, usage_before,
        best=best, evaluated=evaluated, ranked=ranked, truncated=truncated,
    )


def _space_size(sizes: Sequence[int]) -> int:
    total = 1
    for size in sizes:
        total *= size
    return total


def _finalize(
    plan: SearchPlan,
    task: Task,
    candidate_sets: Sequence[CandidateSet],
    backend: Backend,
    ledger: BudgetLedger,
    usage_before: UsageRecord,
    best: ScoredCombination | None,
    evaluated: list[ScoredCombination],
    ranked: list[Combination],
    truncated: bool,
) -> SearchResult:
    seed_combo = seed_combination(candidate_sets)
    seed_row = next(
        (sc for sc in evaluated if sc.combination == seed_combo),
        ScoredCombination(combination=seed_combo, source="seed"),
    )
    usage_after = backend.usage.snapshot()
    usage_delta = UsageRecord(
        prompt_tokens=usage_after.prompt_tokens - usage_before.prompt_tokens,
        completion_tokens=usage_after.completion_tokens - usage_before.completion_tokens,
        examples_processed=usage_after.examples_processed - usage_before.examples_processed,
        calls=usage_after.calls - usage_before.calls,
    )
    ledger.add_tokens(usage_delta.prompt_tokens + usage_delta.completion_tokens)
    selected = []
    if best is not None:
        for slot, choice in enumerate(best.combination.indices):
            selected.append(candidate_sets[slot].candidates[choice])
    return SearchResult(
        strategy=plan.strategy,
        best=best,
        all_evaluated=evaluated,
        seed_baseline=seed_row,
        ranked=ranked,
        ledger=ledger,
        usage=usage_delta,
        truncated=truncated,
        rng_seed=plan.rng_seed,
        selected_explanations=selected,
    )


def evaluate_test(
    combination: Combination,
    task: Task,
    candidate_sets: Sequence[CandidateSet],
    questions: Sequence[str],
    gold_answers: Sequence[str],
    backend: Backend,
    decoding: str = "greedy",
    n: int = 10,
    temperature: float = 0.7,
) -> float:
    """Fraction of gold-matching decoded answers over a labeled test set."""
    if not questions:
        raise ValueError("test evaluation needs at least one question")
    if len(questions) != len(gold_answers):
        raise ValueError("questions and gold answers must align")
    hits = 0
    for question, gold in zip(questions, gold_answers):
        if decoding == "greedy":
            prediction = decode_greedy(combination, task, candidate_sets, question, backend)
        elif decoding == "self_consistency":
            prediction = decode_self_consistency(
                combination, task, candidate_sets, question, backend, n=n, temperature=temperature
            )
        else:
            raise ValueError(f"unknown decoding {decoding!r}")
        if prediction == gold:
            hits += 1
    return hits / len(questions)


def max_at_x(
    ranked: Sequence[Combination],
    task: Task,
    candidate_sets: Sequence[CandidateSet],
    questions: Sequence[str],
    gold_answers: Sequence[str],
    backend: Backend,
    x: int,
) -> float:
    """Best greedy test accuracy among the first x ranked combinations."""
    if x < 1 or x > len(ranked):
        raise ValueError(f"x must be in [1, {len(ranked)}]")
    return max(
        evaluate_test(combo, task, candidate_sets, questions, gold_answers, backend)
        for combo in ranked[:x]
    )
