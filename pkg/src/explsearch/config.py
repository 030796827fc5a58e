"""Run configuration: one JSON file with task, backend, and pipeline sections.

All rng seeds are explicit in the file (no wall-clock seeding), so a config
digest pins everything needed to reproduce a run. File paths are resolved
relative to the config file's directory.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .backend import Backend, HTTPCompletionBackend
from .cache import CachedBackend, CompletionCache
from .candidates import GenerationConfig
from .datasets import DatasetError, load_exemplars, load_labeled, load_questions
from .formats import Task, TaskFormat
from .search import SearchPlan
from .silver import DevSet
from .simulated import SimulatedBackend, SimulatedModelSpec

API_KEY_ENV = "EXPLSEARCH_API_KEY"
BASE_URL_ENV = "EXPLSEARCH_BASE_URL"


class ConfigError(ValueError):
    """The run configuration is missing or inconsistent; message names the field."""


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path
    task: Task
    devset: DevSet | None
    test_questions: list[str] | None
    test_answers: list[str] | None
    backend_section: dict
    generation: GenerationConfig
    silver_voters: int
    silver_seed: int
    plan: SearchPlan
    cache_dir: Path | None
    output_dir: Path

    @property
    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing required field '{where}.{key}'")
    return section[key]


def _resolve(base_dir: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base_dir / path


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except ValueError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    for key, value in (overrides or {}).items():
        section, _, leaf = key.partition(".")
        if leaf:
            raw.setdefault(section, {})[leaf] = value
        else:
            raw[section] = value
    base_dir = path.parent

    task_section = _require(raw, "task", "")
    fmt = TaskFormat.from_dict(_require(task_section, "format", "task"))
    exemplar_file = _resolve(base_dir, _require(task_section, "exemplar_file", "task"))
    try:
        exemplars = load_exemplars(exemplar_file, fmt)
    except DatasetError as exc:
        raise ConfigError(f"task.exemplar_file: {exc}") from exc
    task = Task(format=fmt, exemplars=tuple(exemplars))

    devset = None
    if raw.get("dev_file"):
        try:
            devset = DevSet(questions=tuple(load_questions(_resolve(base_dir, raw["dev_file"]))))
        except DatasetError as exc:
            raise ConfigError(f"dev_file: {exc}") from exc

    test_questions = test_answers = None
    if raw.get("test_file"):
        try:
            test_questions, test_answers = load_labeled(_resolve(base_dir, raw["test_file"]), fmt)
        except DatasetError as exc:
            raise ConfigError(f"test_file: {exc}") from exc

    backend_section = dict(_require(raw, "backend", ""))
    kind = _require(backend_section, "kind", "backend")
    if kind not in ("simulated", "http"):
        raise ConfigError(f"backend.kind must be 'simulated' or 'http', got {kind!r}")
    backend_section["_base_dir"] = str(base_dir)

    gen_section = raw.get("generation", {})
    try:
        generation = GenerationConfig(
            num_samples=int(gen_section.get("num_samples", 40)),
            temperature=float(gen_section.get("temperature", 0.7)),
            cap=int(gen_section.get("cap", 10)),
            include_seed=bool(gen_section.get("include_seed", True)),
            rng_seed=int(gen_section.get("rng_seed", 0)),
            max_tokens=int(gen_section.get("max_tokens", 256)),
            truncate_by=gen_section.get("truncate_by", "order"),
        )
    except ValueError as exc:
        raise ConfigError(f"generation: {exc}") from exc

    silver_section = raw.get("silver", {})
    silver_voters = int(silver_section.get("num_voters", 48))
    silver_seed = int(silver_section.get("rng_seed", 0))
    if silver_voters < 1:
        raise ConfigError("silver.num_voters must be >= 1")

    search_section = raw.get("search", {})
    try:
        plan = SearchPlan(
            strategy=search_section.get("strategy", "ensemble"),
            budget_passes=float(search_section.get("budget_passes", 50)),
            candidates_to_rank=search_section.get("candidates_to_rank"),
            rng_seed=int(search_section.get("rng_seed", 0)),
            restarts=int(search_section.get("restarts", 64)),
            exhaustive_threshold=int(search_section.get("exhaustive_threshold", 4096)),
        )
    except ValueError as exc:
        raise ConfigError(f"search: {exc}") from exc

    cache_dir = _resolve(base_dir, raw["cache_dir"]) if raw.get("cache_dir") else None
    output_dir = _resolve(base_dir, _require(raw, "output_dir", ""))

    return RunConfig(
        raw=raw,
        base_dir=base_dir,
        task=task,
        devset=devset,
        test_questions=test_questions,
        test_answers=test_answers,
        backend_section=backend_section,
        generation=generation,
        silver_voters=silver_voters,
        silver_seed=silver_seed,
        plan=plan,
        cache_dir=cache_dir,
        output_dir=output_dir,
    )


def build_backend(config: RunConfig) -> Backend:
    section = config.backend_section
    if section["kind"] == "simulated":
        spec_dict = dict(_require(section, "simulation", "backend"))
        truth_file = section.get("truth_file")
        if truth_file:
            truth_path = _resolve(Path(section["_base_dir"]), truth_file)
            answer_key = dict(spec_dict.get("answer_key", {}))
            difficulty = dict(spec_dict.get("question_difficulty", {}))
            with open(truth_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    record = json.loads(line)
                    answer_key[record["question"]] = str(record["answer"])
                    if "difficulty" in record:
                        difficulty[record["question"]] = float(record["difficulty"])
            spec_dict["answer_key"] = answer_key
            spec_dict["question_difficulty"] = difficulty
        seed_quality = section.get("seed_explanation_quality")
        if seed_quality is not None:
            quality = dict(spec_dict.get("explanation_quality", {}))
            for exemplar in config.task.exemplars:
                quality[" ".join(exemplar.seed_explanation.split())] = float(seed_quality)
            spec_dict["explanation_quality"] = quality
        try:
            spec = SimulatedModelSpec.from_dict(spec_dict)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"backend.simulation: {exc}") from exc
        inner: Backend = SimulatedBackend(spec, config.task.format)
    else:
        base_url = section.get("base_url") or os.environ.get(BASE_URL_ENV)
        if not base_url:
            raise ConfigError(f"backend.base_url (or ${BASE_URL_ENV}) is required for http backends")
        model = _require(section, "model", "backend")
        api_key = os.environ.get(section.get("api_key_env", API_KEY_ENV), "")
        inner = HTTPCompletionBackend(base_url=base_url, model=model, api_key=api_key)
    if config.cache_dir is not None:
        return CachedBackend(inner, CompletionCache(config.cache_dir))
    return inner
