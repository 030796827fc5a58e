"""Command-line entry points.

Subcommands: generate-candidates, silver-label, search, evaluate, variance,
correlate, simulate-benchmark. Exit status 0 on success, 1 on configuration
errors, 2 on backend failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .backend import BackendError
from .config import ConfigError, RunConfig, build_backend, load_config
from .datasets import DatasetError, save_records
from .formats import FormatError
from . import runner
from .toybench import (
    BASE_ACCURACY,
    DIFFICULTY_SCALE,
    QUALITY_WEIGHT,
    SEED_EXPLANATION_QUALITY,
    build_toy_benchmark,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BACKEND = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="explsearch",
        description="Optimize the explanation set of a chain-of-thought prompt "
        "under an explicit inference budget.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="path to the run configuration file")
        p.add_argument("--strategy", help="override search.strategy")
        p.add_argument("--budget-passes", type=float, help="override search.budget_passes")
        p.add_argument("--seed", type=int, help="override search.rng_seed")
        p.add_argument("--backend", choices=["simulated", "http"], help="override backend.kind")
        p.add_argument("--out", help="override output_dir")

    p = sub.add_parser("generate-candidates", help="sample and filter candidate explanations")
    add_common(p)

    p = sub.add_parser("silver-label", help="pseudo-label the development set by majority vote")
    add_common(p)

    p = sub.add_parser("search", help="run one search strategy end to end")
    add_common(p)

    p = sub.add_parser("evaluate", help="test-set accuracy of the searched combination vs seed")
    add_common(p)
    p.add_argument("--sc-samples", type=int, help="also evaluate self-consistency decoding with n samples")
    p.add_argument("--sc-sweep", help="comma-separated n values for a self-consistency sweep")

    p = sub.add_parser("variance", help="test-accuracy spread over random combinations")
    add_common(p)
    p.add_argument("--samples", type=int, default=16, help="number of random combinations")

    p = sub.add_parser("correlate", help="proxy-score vs test-accuracy diagnostics")
    add_common(p)
    p.add_argument("--samples", type=int, help="limit the number of combinations to evaluate")

    p = sub.add_parser("simulate-benchmark", help="write the bundled simulated benchmark")
    p.add_argument("--out", required=True, help="directory to write the benchmark into")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exemplars", type=int, default=8)
    p.add_argument("--dev-size", type=int, default=64)
    p.add_argument("--test-size", type=int, default=128)
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    overrides = {}
    if getattr(args, "strategy", None):
        overrides["search.strategy"] = args.strategy
    if getattr(args, "budget_passes", None) is not None:
        overrides["search.budget_passes"] = args.budget_passes
    if getattr(args, "seed", None) is not None:
        overrides["search.rng_seed"] = args.seed
    if getattr(args, "backend", None):
        overrides["backend.kind"] = args.backend
    if getattr(args, "out", None):
        overrides["output_dir"] = args.out
    return overrides


def _load(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config, _overrides(args))
    config.output_dir.mkdir(parents=True, exist_ok=True)
    return config


def write_benchmark(out_dir: Path, seed: int, exemplars: int, dev_size: int, test_size: int) -> Path:
    bench = build_toy_benchmark(
        seed=seed, num_exemplars=exemplars, dev_size=dev_size, test_size=test_size
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    save_records(
        out_dir / "exemplars.jsonl",
        [
            {"question": e.question, "answer": e.gold_answer, "explanation": e.seed_explanation}
            for e in bench.task.exemplars
        ],
    )
    save_records(out_dir / "dev.jsonl", [{"question": q} for q in bench.devset.questions])
    save_records(
        out_dir / "test.jsonl",
        [{"question": q, "answer": a} for q, a in zip(bench.test_questions, bench.test_answers)],
    )
    spec = bench.sim_spec
    save_records(
        out_dir / "truth.jsonl",
        [
            {
                "question": q,
                "answer": spec.answer_key[q],
                "difficulty": spec.question_difficulty[q],
            }
            for q in spec.answer_key
        ],
    )
    config = {
        "task": {"format": bench.task.format.to_dict(), "exemplar_file": "exemplars.jsonl"},
        "dev_file": "dev.jsonl",
        "test_file": "test.jsonl",
        "backend": {
            "kind": "simulated",
            "simulation": {
                "rng_seed": seed,
                "base_accuracy": BASE_ACCURACY,
                "quality_weight": QUALITY_WEIGHT,
                "default_difficulty_scale": DIFFICULTY_SCALE,
            },
            "truth_file": "truth.jsonl",
            "seed_explanation_quality": SEED_EXPLANATION_QUALITY,
        },
        "generation": {"num_samples": 40, "temperature": 0.7, "cap": 10, "rng_seed": seed},
        "silver": {"num_voters": 12, "rng_seed": seed},
        "search": {"strategy": "ensemble", "budget_passes": 20, "rng_seed": seed},
        "cache_dir": "cache",
        "output_dir": "runs",
    }
    config_path = out_dir / "config.json"
    with open(config_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return config_path


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK

    try:
        if args.command == "simulate-benchmark":
            config_path = write_benchmark(
                Path(args.out), args.seed, args.exemplars, args.dev_size, args.test_size
            )
            print(f"benchmark written; config at {config_path}")
            return EXIT_OK

        config = _load(args)
        backend = build_backend(config)

        if args.command == "generate-candidates":
            sets, path = runner.ensure_candidates(config, backend)
            print(f"candidate sets ({[s.size for s in sets]} candidates) at {path}")
        elif args.command == "silver-label":
            sets, _ = runner.ensure_candidates(config, backend)
            silver, path = runner.ensure_silver(config, backend, sets)
            labeled = len(silver.labeled_indices)
            print(f"silver labels ({labeled}/{len(silver.labels)} labeled) at {path}")
        elif args.command == "search":
            result, path = runner.run_search_pipeline(config, backend)
            best = result.best
            summary = (
                f"best {best.combination.indices} silver accuracy {best.objective_score}"
                if best and best.objective_score is not None
                else f"best {best.combination.indices} (proxy only)" if best else "no result"
            )
            print(
                f"{config.plan.strategy}: evaluated {len(result.all_evaluated)} combinations, "
                f"{summary}, {result.ledger.passes_consumed:.2f} passes; result at {path}"
            )
        elif args.command == "evaluate":
            sweep = None
            if args.sc_sweep:
                sweep = [int(v) for v in args.sc_sweep.split(",") if v.strip()]
            path = runner.evaluate_pipeline(config, backend, args.sc_samples, sweep)
            print(f"test evaluation at {path}")
        elif args.command == "variance":
            path = runner.variance_pipeline(
                config, backend, args.samples, config.plan.rng_seed
            )
            print(f"variance report at {path}")
        elif args.command == "correlate":
            path = runner.correlate_pipeline(config, backend, args.samples)
            print(f"correlation report at {path}")
        else:  # pragma: no cover - argparse guards this
            parser.print_usage(sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK
    except (ConfigError, DatasetError, FormatError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BackendError as exc:
        print(f"backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
