"""Line-delimited dataset files.

One record per line, each a flat JSON object with a `question` field plus
optional `answer` (absent for unlabeled dev records) and `explanation` fields.
"""

from __future__ import annotations

import json
from pathlib import Path

from .formats import Exemplar, TaskFormat, normalize_answer


class DatasetError(ValueError):
    """A dataset file is missing or malformed."""


def _iter_records(path: str | Path):
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except ValueError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            if "question" not in record:
                raise DatasetError(f"{path}:{lineno}: record missing 'question'")
            yield record


def load_exemplars(path: str | Path, fmt: TaskFormat) -> list[Exemplar]:
    exemplars = []
    for record in _iter_records(path):
        if "answer" not in record or "explanation" not in record:
            raise DatasetError(f"{path}: exemplar records need 'answer' and 'explanation'")
        exemplars.append(
            Exemplar(
                question=record["question"],
                gold_answer=normalize_answer(fmt, str(record["answer"])),
                seed_explanation=record["explanation"],
            )
        )
    if not exemplars:
        raise DatasetError(f"{path}: no exemplar records")
    return exemplars


def load_questions(path: str | Path) -> list[str]:
    return [record["question"] for record in _iter_records(path)]


def load_labeled(path: str | Path, fmt: TaskFormat) -> tuple[list[str], list[str]]:
    questions, answers = [], []
    for record in _iter_records(path):
        if "answer" not in record:
            raise DatasetError(f"{path}: labeled records need 'answer'")
        questions.append(record["question"])
        answers.append(normalize_answer(fmt, str(record["answer"])))
    return questions, answers


def save_records(path: str | Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
