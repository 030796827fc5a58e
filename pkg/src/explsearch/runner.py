"""Pipeline stages wired to content-addressed artifacts in a run directory.

Each stage loads its artifact when one exists for the current inputs and
computes + persists it otherwise, so stages can be run in any order from the
CLI and repeated runs are free.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path

from .backend import Backend
from .candidates import (
    CandidateSet,
    generate_candidates,
    load_candidate_sets,
    save_candidate_sets,
    seed_combination,
)
from .config import ConfigError, RunConfig
from .formats import Combination
from .reports import (
    CORRELATION_FILE,
    SEARCH_RESULT_FILE,
    TEST_EVAL_FILE,
    VARIANCE_FILE,
    UndefinedCorrelationError,
    emit_reports,
    pearson,
    read_json,
    variance_report,
    write_json,
)
from .scoring import (
    OneShotAccuracyTable,
    PairwiseLogLikMatrix,
    load_osacc_table,
    load_osll_matrix,
    build_osacc_table,
    build_osll_matrix,
    save_osacc_table,
    save_osll_matrix,
    score_osacc,
    score_osll,
)
from .search import SearchResult, evaluate_test, run_search
from .silver import SilverLabels, load_silver, sample_combinations, save_silver, silver_label

log = logging.getLogger(__name__)


def _digest(*parts: str) -> str:
    h = hashlib.sha256()
    for part in parts:
        h.update(part.encode("utf-8"))
        h.update(b"\x1f")
    return h.hexdigest()[:16]


def task_digest(config: RunConfig) -> str:
    task = config.task
    return _digest(
        json.dumps(task.format.to_dict(), sort_keys=True),
        *[f"{e.question}|{e.gold_answer}|{e.seed_explanation}" for e in task.exemplars],
    )


def candidates_digest(config: RunConfig, backend: Backend) -> str:
    gen = config.generation
    return _digest(
        task_digest(config),
        backend.backend_id,
        str((gen.num_samples, gen.temperature, gen.cap, gen.include_seed,
             gen.rng_seed, gen.max_tokens, gen.truncate_by)),
    )


def ensure_candidates(config: RunConfig, backend: Backend) -> tuple[list[CandidateSet], Path]:
    config.output_dir.mkdir(parents=True, exist_ok=True)
    path = config.output_dir / f"candidates_{candidates_digest(config, backend)}.jsonl"
    if path.exists():
        return load_candidate_sets(path), path
    sets = generate_candidates(config.task, backend, config.generation)
    save_candidate_sets(path, sets)
    return sets, path


def _sets_digest(candidate_sets) -> str:
    return _digest(*[f"{c.exemplar_index}:{'|'.join(c.candidates)}" for c in candidate_sets])


def ensure_silver(
    config: RunConfig, backend: Backend, candidate_sets
) -> tuple[SilverLabels, Path]:
    if config.devset is None:
        raise ConfigError("dev_file is required for silver labeling")
    key = _digest(
        _sets_digest(candidate_sets),
        backend.backend_id,
        str(config.silver_voters),
        str(config.silver_seed),
        *config.devset.questions,
    )
    path = config.output_dir / f"silver_{key}.jsonl"
    if path.exists():
        return load_silver(path), path
    voters = sample_combinations(candidate_sets, config.silver_voters, config.silver_seed)
    silver = silver_label(config.devset, voters, config.task, candidate_sets, backend)
    save_silver(path, silver)
    return silver, path


def ensure_osacc_table(
    config: RunConfig, backend: Backend, candidate_sets, silver: SilverLabels
) -> OneShotAccuracyTable:
    key = _digest(_sets_digest(candidate_sets), backend.backend_id, "osacc",
                  json.dumps(silver.labels))
    path = config.output_dir / f"osacc_{key}.json"
    if path.exists():
        return load_osacc_table(path)
    table = build_osacc_table(candidate_sets, config.task, config.devset, silver, backend)
    save_osacc_table(path, table)
    return table


def ensure_osll_matrix(config: RunConfig, backend: Backend, candidate_sets) -> PairwiseLogLikMatrix:
    key = _digest(_sets_digest(candidate_sets), backend.backend_id, "osll")
    path = config.output_dir / f"osll_{key}.npz"
    if path.exists():
        return load_osll_matrix(path)
    matrix = build_osll_matrix(candidate_sets, config.task, backend)
    save_osll_matrix(path, matrix)
    return matrix


def run_search_pipeline(config: RunConfig, backend: Backend) -> tuple[SearchResult, Path]:
    candidate_sets, _ = ensure_candidates(config, backend)
    plan = config.plan
    needs_dev = plan.strategy in ("naive", "osacc", "ensemble") or (
        plan.strategy == "osll" and config.devset is not None
    )
    silver = None
    silver_examples = 0
    if needs_dev:
        if config.devset is None:
            raise ConfigError(f"dev_file is required for strategy '{plan.strategy}'")
        silver, _ = ensure_silver(config, backend, candidate_sets)
        # labeling is a fixed upfront cost outside the search budget; reported
        # alongside the ledger rather than charged against it
        silver_examples = silver.num_voters * config.devset.size * (config.task.num_exemplars + 1)
    table = None
    matrix = None
    if plan.strategy in ("osacc", "ensemble") and silver is not None:
        table = ensure_osacc_table(config, backend, candidate_sets, silver)
    if plan.strategy in ("osll", "ensemble", "true_few_shot"):
        matrix = ensure_osll_matrix(config, backend, candidate_sets)
    result = run_search(
        plan,
        config.task,
        candidate_sets,
        backend,
        devset=config.devset if silver is not None else None,
        silver=silver,
        osacc_table=table,
        osll_matrix=matrix,
    )
    payload = result.to_dict()
    payload["config_digest"] = config.digest
    payload["silver_labeling_examples"] = silver_examples
    path = config.output_dir / SEARCH_RESULT_FILE.format(strategy=plan.strategy)
    existing = read_json(path)
    if existing is None or _without_usage(existing) != _without_usage(payload):
        write_json(path, payload)
    # else: identical result from warm artifacts; keep the original file so the
    # recorded backend usage reflects the run that actually paid for it
    emit_reports(config.output_dir, plan.strategy, config.digest)
    return result, path


def _without_usage(payload: dict) -> dict:
    """The deterministic core of a search result: everything except the live
    backend-usage numbers (zero when served from a warm cache)."""
    core = {key: value for key, value in payload.items() if key != "usage"}
    ledger = dict(core.get("ledger", {}))
    ledger.pop("tokens_processed", None)
    core["ledger"] = ledger
    return core


def _require_test_set(config: RunConfig) -> tuple[list[str], list[str]]:
    if not config.test_questions:
        raise ConfigError("test_file is required for this command")
    return config.test_questions, config.test_answers


def _load_search_payload(config: RunConfig) -> dict:
    path = config.output_dir / SEARCH_RESULT_FILE.format(strategy=config.plan.strategy)
    payload = read_json(path)
    if payload is None:
        raise ConfigError(f"no search result found at {path}; run 'search' first")
    return payload


def evaluate_pipeline(
    config: RunConfig,
    backend: Backend,
    sc_samples: int | None = None,
    sc_sweep: list[int] | None = None,
) -> Path:
    """Test-set accuracy of the searched combination vs the seed baseline."""
    questions, answers = _require_test_set(config)
    candidate_sets, _ = ensure_candidates(config, backend)
    payload = _load_search_payload(config)
    if payload.get("best") is None:
        raise ConfigError("search result has no best combination to evaluate")
    best = Combination(tuple(payload["best"]["indices"]))
    seed = seed_combination(candidate_sets)

    def greedy(combo):
        return evaluate_test(combo, config.task, candidate_sets, questions, answers, backend)

    result = {
        "strategy": config.plan.strategy,
        "config_digest": config.digest,
        "best_indices": list(best.indices),
        "seed_indices": list(seed.indices),
        "best_accuracy": greedy(best),
        "seed_accuracy": greedy(seed),
        "decoding": "greedy",
    }
    if sc_samples:
        result["self_consistency"] = {
            "num_samples": sc_samples,
            "best_accuracy": evaluate_test(
                best, config.task, candidate_sets, questions, answers, backend,
                decoding="self_consistency", n=sc_samples,
            ),
            "seed_accuracy": evaluate_test(
                seed, config.task, candidate_sets, questions, answers, backend,
                decoding="self_consistency", n=sc_samples,
            ),
        }
    if sc_sweep:
        sweep_rows = []
        for n in sc_sweep:
            sweep_rows.append(
                {
                    "num_samples": n,
                    "best_accuracy": evaluate_test(
                        best, config.task, candidate_sets, questions, answers, backend,
                        decoding="self_consistency", n=n,
                    ),
                    "seed_accuracy": evaluate_test(
                        seed, config.task, candidate_sets, questions, answers, backend,
                        decoding="self_consistency", n=n,
                    ),
                }
            )
        result["self_consistency_sweep"] = sweep_rows
    path = config.output_dir / TEST_EVAL_FILE.format(strategy=config.plan.strategy)
    write_json(path, result)
    emit_reports(config.output_dir, config.plan.strategy, config.digest)
    return path


def variance_pipeline(config: RunConfig, backend: Backend, samples: int, rng_seed: int) -> Path:
    """Test-accuracy spread over randomly sampled combinations plus the seed."""
    questions, answers = _require_test_set(config)
    candidate_sets, _ = ensure_candidates(config, backend)
    combos = sample_combinations(candidate_sets, samples, rng_seed)
    accuracies = [
        evaluate_test(combo, config.task, candidate_sets, questions, answers, backend)
        for combo in combos
    ]
    seed_acc = evaluate_test(
        seed_combination(candidate_sets), config.task, candidate_sets, questions, answers, backend
    )
    report = variance_report(
        accuracies, seed_acc, rng_seed, [list(c.indices) for c in combos]
    )
    payload = report.to_dict()
    payload["config_digest"] = config.digest
    path = config.output_dir / VARIANCE_FILE
    write_json(path, payload)
    return path


def correlate_pipeline(
    config: RunConfig, backend: Backend, samples: int | None = None
) -> Path:
    """Proxy-score vs test-accuracy scatter for the evaluated combinations."""
    questions, answers = _require_test_set(config)
    candidate_sets, _ = ensure_candidates(config, backend)
    payload = _load_search_payload(config)
    rows = payload["all_evaluated"]
    if samples:
        rows = rows[:samples]
    if not rows:
        raise ConfigError("search result contains no evaluated combinations")

    silver = None
    table = None
    if config.devset is not None:
        silver, _ = ensure_silver(config, backend, candidate_sets)
        table = ensure_osacc_table(config, backend, candidate_sets, silver)
    matrix = ensure_osll_matrix(config, backend, candidate_sets)

    points = []
    for row in rows:
        combo = Combination(tuple(row["indices"]))
        point = {
            "indices": list(combo.indices),
            "source": row["source"],
            "test_accuracy": evaluate_test(
                combo, config.task, candidate_sets, questions, answers, backend
            ),
            "objective_score": row["objective_score"],
            "osll_score": score_osll(combo, matrix),
            "mean_completion_logprob": row["mean_completion_logprob"],
        }
        if table is not None:
            point["osacc_score"] = score_osacc(combo, table)
        points.append(point)

    correlations = {}
    test_accs = [p["test_accuracy"] for p in points]
    for metric in ("osacc_score", "osll_score", "mean_completion_logprob"):
        xs = [p[metric] for p in points if p.get(metric) is not None]
        if len(xs) != len(points):
            correlations[metric] = None
            continue
        try:
            correlations[metric] = pearson(xs, test_accs)
        except UndefinedCorrelationError as exc:
            log.warning("correlation undefined for %s: %s", metric, exc)
            correlations[metric] = None

    curve = []
    ranked = [tuple(indices) for indices in payload["ranked"]]
    acc_by_indices = {tuple(p["indices"]): p["test_accuracy"] for p in points}
    available = [acc_by_indices[c] for c in ranked if c in acc_by_indices]
    x = 1
    while x <= len(available):
        curve.append({"x": x, "max_accuracy": max(available[:x])})
        x *= 2
    if available and (not curve or curve[-1]["x"] != len(available)):
        curve.append({"x": len(available), "max_accuracy": max(available)})

    result = {
        "strategy": config.plan.strategy,
        "config_digest": config.digest,
        "points": points,
        "pearson": correlations,
        "max_at_x": curve,
    }
    path = config.output_dir / CORRELATION_FILE.format(strategy=config.plan.strategy)
    write_json(path, result)
    emit_reports(config.output_dir, config.plan.strategy, config.digest)
    return path
