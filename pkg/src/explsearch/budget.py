"""Charged-cost accounting for search budgets.

Costs are charged in "examples processed" at the standard rates (one
objective evaluation on an M-question dev set with K shots costs M*(K+1)
examples, one Pass), independent of what caching saved in practice. The
actual backend usage is tracked separately by the backend's own ledger.
"""

from __future__ import annotations

import threading
from typing import Sequence

from .backend import pass_cost


def osacc_overhead_examples(sizes: Sequence[int], m: int) -> int:
    """One-shot accuracy table: every candidate answers every dev question,
    at 2 examples per query (one shot + one output)."""
    return 2 * m * sum(sizes)


def osll_overhead_examples(sizes: Sequence[int]) -> int:
    """Pairwise log-likelihood matrix: every ordered candidate pair scored,
    at 2 examples per pair (one-shot prompt + continuation)."""
    total = 0
    for i, size_i in enumerate(sizes):
        for j, size_j in enumerate(sizes):
            if i != j:
                total += size_i * size_j
    return 2 * total


class BudgetLedger:
    """Monotone charged-example counter convertible to Pass units."""

    def __init__(self, m: int, k: int, budget_passes: float) -> None:
        self.m = m
        self.k = k
        self.budget_passes = budget_passes
        self._lock = threading.Lock()
        self.examples_processed = 0
        self.tokens_processed = 0
        self.breakdown: dict[str, int] = {}
        self.objective_evaluations = 0

    @property
    def pass_examples(self) -> int:
        return pass_cost(self.m, self.k) if self.m >= 1 and self.k >= 1 else 0

    @property
    def passes_consumed(self) -> float:
        unit = self.pass_examples
        return self.examples_processed / unit if unit else 0.0

    def charge_examples(self, examples: int, category: str) -> None:
        if examples < 0:
            raise ValueError("cannot charge negative examples")
        with self._lock:
            self.examples_processed += examples
            self.breakdown[category] = self.breakdown.get(category, 0) + examples

    def charge_objective_evaluation(self) -> None:
        with self._lock:
            self.objective_evaluations += 1
        self.charge_examples(self.pass_examples, "objective")

    def add_tokens(self, tokens: int) -> None:
        with self._lock:
            self.tokens_processed += tokens

    def would_exceed(self, extra_examples: int, allowance_passes: float) -> bool:
        unit = self.pass_examples
        if not unit:
            return False
        projected = (self.examples_processed + extra_examples) / unit
        return projected > self.budget_passes + allowance_passes + 1e-9

    def to_dict(self) -> dict:
        return {
            "examples_processed": self.examples_processed,
            "tokens_processed": self.tokens_processed,
            "passes_consumed": self.passes_consumed,
            "budget_passes": self.budget_passes,
            "pass_examples": self.pass_examples,
            "objective_evaluations": self.objective_evaluations,
            "breakdown": dict(sorted(self.breakdown.items())),
        }
