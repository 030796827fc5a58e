"""Report emission: machine reports, plotting tables, and human summaries.

Every report embeds the config digest and rng seeds needed to reproduce it and
contains no wall-clock content, so re-emitting from the same artifacts is
byte-identical.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

log = logging.getLogger(__name__)

SEARCH_RESULT_FILE = "search_result_{strategy}.json"
TEST_EVAL_FILE = "test_eval_{strategy}.json"
CORRELATION_FILE = "correlation_{strategy}.json"
MACHINE_REPORT_FILE = "report_{strategy}.json"
TABLE_FILE = "combinations_{strategy}.csv"
SUMMARY_FILE = "summary_{strategy}.txt"
VARIANCE_FILE = "variance_report.json"


class UndefinedCorrelationError(ValueError):
    """Pearson correlation is undefined (too few points or zero variance)."""


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(xs) != len(ys):
        raise ValueError("input sequences must have equal length")
    n = len(xs)
    if n < 2:
        raise UndefinedCorrelationError("need at least two points")
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxy = sxx = syy = 0.0
    for x, y in zip(xs, ys):
        dx = x - mean_x
        dy = y - mean_y
        sxy += dx * dy
        sxx += dx * dx
        syy += dy * dy
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("zero variance in one of the inputs")
    return sxy / math.sqrt(sxx * syy)


@dataclass
class VarianceReport:
    """Spread of test accuracy over randomly sampled combinations."""

    num_samples: int
    min_accuracy: float
    avg_accuracy: float
    max_accuracy: float
    seed_accuracy: float
    rng_seed: int
    per_combination: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "num_samples": self.num_samples,
            "min_accuracy": self.min_accuracy,
            "avg_accuracy": self.avg_accuracy,
            "max_accuracy": self.max_accuracy,
            "seed_accuracy": self.seed_accuracy,
            "rng_seed": self.rng_seed,
            "per_combination": self.per_combination,
        }


def variance_report(accuracies: Sequence[float], seed_accuracy: float, rng_seed: int,
                    combinations: Sequence[Sequence[int]]) -> VarianceReport:
    if not accuracies:
        raise ValueError("need at least one sampled combination")
    return VarianceReport(
        num_samples=len(accuracies),
        min_accuracy=min(accuracies),
        avg_accuracy=sum(accuracies) / len(accuracies),
        max_accuracy=max(accuracies),
        seed_accuracy=seed_accuracy,
        rng_seed=rng_seed,
        per_combination=[
            {"indices": list(indices), "test_accuracy": acc}
            for indices, acc in zip(combinations, accuracies)
        ],
    )


def write_json(path: str | Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")


def read_json(path: str | Path) -> dict | None:
    path = Path(path)
    if not path.exists():
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def emit_reports(run_dir: str | Path, strategy: str, config_digest: str) -> list[Path]:
    """Write the machine report, plotting table, and human summary for one run.

    Missing artifacts (test evaluations, correlation diagnostics) are marked
    as absent in the report rather than failing.
    """
    run_dir = Path(run_dir)
    search_result = read_json(run_dir / SEARCH_RESULT_FILE.format(strategy=strategy))
    if search_result is None:
        raise FileNotFoundError(f"no search result for strategy {strategy!r} in {run_dir}")
    test_eval = read_json(run_dir / TEST_EVAL_FILE.format(strategy=strategy))
    correlation = read_json(run_dir / CORRELATION_FILE.format(strategy=strategy))

    missing = []
    if test_eval is None:
        missing.append("test_eval")
    if correlation is None:
        missing.append("correlation")
    if missing:
        log.warning("report for %s missing sections: %s", strategy, ", ".join(missing))

    report = {
        "config_digest": config_digest,
        "strategy": strategy,
        "search_result": search_result,
        "test_eval": test_eval,
        "correlation": correlation,
        "missing_sections": missing,
    }
    report_path = run_dir / MACHINE_REPORT_FILE.format(strategy=strategy)
    write_json(report_path, report)

    test_acc_by_indices = {}
    if correlation:
        for point in correlation.get("points", []):
            test_acc_by_indices[tuple(point["indices"])] = point["test_accuracy"]

    table_path = run_dir / TABLE_FILE.format(strategy=strategy)
    with open(table_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["indices", "source", "proxy_score", "objective_score",
             "mean_completion_logprob", "test_accuracy"]
        )
        for row in search_result["all_evaluated"]:
            indices = tuple(row["indices"])
            writer.writerow(
                [
                    " ".join(str(i) for i in indices),
                    row["source"],
                    _fmt(row["proxy_score"]),
                    _fmt(row["objective_score"]),
                    _fmt(row["mean_completion_logprob"]),
                    _fmt(test_acc_by_indices.get(indices)),
                ]
            )

    summary_path = run_dir / SUMMARY_FILE.format(strategy=strategy)
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_summary_text(strategy, config_digest, search_result, test_eval, missing))
    return [report_path, table_path, summary_path]


def _fmt(value) -> str:
    return "" if value is None else repr(value)


def _summary_text(strategy, config_digest, search_result, test_eval, missing) -> str:
    lines = [
        f"strategy: {strategy}",
        f"config: {config_digest}",
        f"rng_seed: {search_result['rng_seed']}",
        f"combinations evaluated: {len(search_result['all_evaluated'])}",
        f"passes consumed: {search_result['ledger']['passes_consumed']:.3f}"
        f" (budget {search_result['ledger']['budget_passes']})",
        f"truncated: {search_result['truncated']}",
    ]
    best = search_result.get("best")
    if best is not None:
        lines.append(f"best combination: {best['indices']}")
        if best["objective_score"] is not None:
            lines.append(f"best silver accuracy: {best['objective_score']:.4f}")
        if best["proxy_score"] is not None:
            lines.append(f"best proxy score ({best['source']}): {best['proxy_score']:.4f}")
    if test_eval is not None:
        seed_acc = test_eval["seed_accuracy"]
        best_acc = test_eval["best_accuracy"]
        lines.append(f"test accuracy: seed {seed_acc:.4f} -> optimized {best_acc:.4f}"
                     f" (delta {best_acc - seed_acc:+.4f})")
    if missing:
        lines.append(f"missing sections: {', '.join(missing)}")
    selected = search_result.get("selected_explanations") or []
    if selected:
        lines.append("selected explanations:")
        for slot, text in enumerate(selected):
            lines.append(f"  [{slot}] {text}")
    return "\n".join(lines) + "\n"
