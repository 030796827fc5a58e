"""Prompt formats, deterministic rendering, and answer extraction/normalization.

A task format describes how (question, explanation, answer) triples are laid
out as prompt text and how a final answer is pulled back out of a model
completion. The same renderer serves full K-shot prompts, leave-one-out
prompts, and one-shot prompts.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

TRAILING_NUMBER = "trailing-number"
CHOICE_LETTER = "choice-letter"
LABEL_SET = "label-set"

ANSWER_PATTERNS = (TRAILING_NUMBER, CHOICE_LETTER, LABEL_SET)

# A shot is one (question, explanation, answer) triple rendered into the prompt.
Shot = tuple[str, str, str]


class FormatError(ValueError):
    """A prompt format contract was violated."""


class NormalizationError(FormatError):
    """Raw answer text cannot be normalized under the format."""


_NUMBER_RE = re.compile(r"[-+]?\$?\d[\d,]*(?:\.\d+)?")
_PAREN_LETTER_RE = re.compile(r"\(\s*([A-Za-z])\s*\)")
_BARE_LETTER_RE = re.compile(r"\b([A-Za-z])\b")
_TERMINAL_PUNCT = ".!?,;:"


@dataclass(frozen=True)
class TaskFormat:
    """Prompt layout and answer-extraction rules for one task."""

    task_id: str
    question_prefix: str = "Q: "
    answer_prefix: str = "A:"
    answer_cue: str = "The answer is"
    answer_pattern: str = TRAILING_NUMBER
    label_set: tuple[str, ...] = ()
    label_synonyms: Mapping[str, str] = field(default_factory=dict)
    exemplar_separator: str = "\n\n"

    def __post_init__(self) -> None:
        if self.answer_pattern not in ANSWER_PATTERNS:
            raise FormatError(f"unknown answer_pattern {self.answer_pattern!r}")
        if not self.answer_cue.strip():
            raise FormatError("answer_cue must be non-empty")
        if not self.exemplar_separator:
            raise FormatError("exemplar_separator must be non-empty")
        if self.answer_pattern == LABEL_SET:
            if not self.label_set:
                raise FormatError("label-set format requires a non-empty label_set")
            canon = [_basic_normalize(lbl) for lbl in self.label_set]
            if len(set(canon)) != len(canon):
                raise FormatError("label_set entries must be distinct after normalization")

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "question_prefix": self.question_prefix,
            "answer_prefix": self.answer_prefix,
            "answer_cue": self.answer_cue,
            "answer_pattern": self.answer_pattern,
            "label_set": list(self.label_set),
            "label_synonyms": dict(self.label_synonyms),
            "exemplar_separator": self.exemplar_separator,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TaskFormat":
        return cls(
            task_id=data["task_id"],
            question_prefix=data.get("question_prefix", "Q: "),
            answer_prefix=data.get("answer_prefix", "A:"),
            answer_cue=data.get("answer_cue", "The answer is"),
            answer_pattern=data.get("answer_pattern", TRAILING_NUMBER),
            label_set=tuple(data.get("label_set", ())),
            label_synonyms=dict(data.get("label_synonyms", {})),
            exemplar_separator=data.get("exemplar_separator", "\n\n"),
        )


@dataclass(frozen=True)
class Exemplar:
    """One annotated (question, answer, seed explanation) triple."""

    question: str
    gold_answer: str
    seed_explanation: str


@dataclass(frozen=True)
class Task:
    """An ordered exemplar set plus its prompt format."""

    format: TaskFormat
    exemplars: tuple[Exemplar, ...]

    def __post_init__(self) -> None:
        if len(self.exemplars) < 2:
            raise FormatError("a task needs at least 2 exemplars (leave-one-out requires one remainder)")
        for ex in self.exemplars:
            if normalize_answer(self.format, ex.gold_answer) != ex.gold_answer:
                raise FormatError(
                    f"gold answer {ex.gold_answer!r} is not in normalized form"
                )

    @property
    def num_exemplars(self) -> int:
        return len(self.exemplars)


@dataclass(frozen=True)
class Combination:
    """One candidate index per exemplar slot."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.indices:
            raise FormatError("a combination must cover at least one slot")
        if any(i < 0 for i in self.indices):
            raise FormatError("combination indices must be non-negative")


def _basic_normalize(text: str) -> str:
    s = text.strip().lower()
    while s and s[-1] in _TERMINAL_PUNCT:
        s = s[:-1].rstrip()
    return s


def _strip_decimal_zeros(num: str) -> str:
    if "." in num:
        num = num.rstrip("0").rstrip(".")
    return num


def normalize_answer(fmt: TaskFormat, raw: str) -> str:
    """Canonicalize a raw answer string under the format's answer pattern.

    Idempotent: normalizing an already-normalized answer is a no-op.
    """
    if not raw or not raw.strip():
        raise NormalizationError("cannot normalize empty answer text")
    s = _basic_normalize(raw)
    if fmt.answer_pattern == TRAILING_NUMBER:
        s = s.replace("$", "").replace(",", "").strip()
        while s and s[-1] in _TERMINAL_PUNCT:
            s = s[:-1].rstrip()
        return _strip_decimal_zeros(s)
    if fmt.answer_pattern == CHOICE_LETTER:
        s = s.strip("()").strip()
        return s
    # label-set
    s = fmt.label_synonyms.get(s, s)
    canon = {_basic_normalize(lbl): _basic_normalize(lbl) for lbl in fmt.label_set}
    if s not in canon:
        raise NormalizationError(f"{raw!r} matches no label in {fmt.label_set}")
    return s


def format_answer(fmt: TaskFormat, normalized: str) -> str:
    """Render a normalized answer the way the prompt writes it."""
    if fmt.answer_pattern == CHOICE_LETTER:
        return f"({normalized})"
    return normalized


def render_answer_text(fmt: TaskFormat, explanation: str, answer: str) -> str:
    """The text that follows the answer prefix for one shot.

    This exact string is also what gets scored as a continuation when
    computing pairwise log-likelihoods, so renderer and scorer stay in sync.
    """
    return f" {explanation} {fmt.answer_cue} {format_answer(fmt, answer)}."


def _render_shot(fmt: TaskFormat, shot: Shot) -> str:
    question, explanation, answer = shot
    return (
        f"{fmt.question_prefix}{question}\n"
        f"{fmt.answer_prefix}{render_answer_text(fmt, explanation, answer)}"
    )


def _check_no_separator(fmt: TaskFormat, text: str, what: str) -> None:
    if fmt.exemplar_separator in text:
        raise FormatError(f"{what} contains the exemplar separator; prompts would be ambiguous")


def render_prompt(fmt: TaskFormat, shots: Sequence[Shot], query: str) -> str:
    """Render shots in order followed by the query and a trailing answer prefix.

    Deterministic: identical inputs produce byte-identical text.
    """
    if not shots:
        raise FormatError("at least one shot is required")
    blocks = []
    for shot in shots:
        question, explanation, _ = shot
        _check_no_separator(fmt, question, "shot question")
        _check_no_separator(fmt, explanation, "shot explanation")
        blocks.append(_render_shot(fmt, shot))
    _check_no_separator(fmt, query, "query")
    blocks.append(f"{fmt.question_prefix}{query}\n{fmt.answer_prefix}")
    return fmt.exemplar_separator.join(blocks)


def _extract_from_segment(fmt: TaskFormat, segment: str) -> str | None:
    seg = segment.strip()
    if fmt.answer_pattern == TRAILING_NUMBER:
        m = _NUMBER_RE.search(seg)
        if not m:
            return None
        return normalize_answer(fmt, m.group(0))
    if fmt.answer_pattern == CHOICE_LETTER:
        m = _PAREN_LETTER_RE.search(seg) or _BARE_LETTER_RE.search(seg)
        if not m:
            return None
        return m.group(1).lower()
    # label-set: longest label first so "not possible to tell" wins over "no"
    head = _basic_normalize(seg.split("\n")[0])
    head = fmt.label_synonyms.get(head, head)
    for label in sorted(fmt.label_set, key=len, reverse=True):
        canon = _basic_normalize(label)
        if head == canon or (head.startswith(canon) and not head[len(canon):][:1].isalnum()):
            return canon
    return None


def extract_answer(fmt: TaskFormat, completion: str) -> str | None:
    """Parse the answer from the LAST occurrence of the format's answer cue.

    Returns None when no cue or no parseable answer follows it; callers record
    that as an invalid prediction rather than dropping it.
    """
    pos = completion.rfind(fmt.answer_cue)
    if pos < 0:
        return None
    segment = completion[pos + len(fmt.answer_cue):]
    return _extract_from_segment(fmt, segment)


def parse_prompt(fmt: TaskFormat, prompt: str) -> tuple[list[Shot], str]:
    """Invert render_prompt: recover the shot triples and the query text."""
    blocks = prompt.split(fmt.exemplar_separator)
    tail = blocks[-1]
    suffix = f"\n{fmt.answer_prefix}"
    if not tail.startswith(fmt.question_prefix) or not tail.endswith(suffix):
        raise FormatError("prompt does not end with a query block")
    query = tail[len(fmt.question_prefix):len(tail) - len(suffix)]
    shots: list[Shot] = []
    answer_start = f"\n{fmt.answer_prefix} "
    for block in blocks[:-1]:
        if not block.startswith(fmt.question_prefix):
            raise FormatError("shot block missing question prefix")
        split_at = block.find(answer_start)
        if split_at < 0:
            raise FormatError("shot block missing answer prefix")
        question = block[len(fmt.question_prefix):split_at]
        rest = block[split_at + len(answer_start):]
        cue_at = rest.rfind(fmt.answer_cue)
        if cue_at < 0:
            raise FormatError("shot block missing answer cue")
        explanation = rest[:cue_at].strip()
        answer = _extract_from_segment(fmt, rest[cue_at + len(fmt.answer_cue):])
        if answer is None:
            raise FormatError("shot block has unparseable answer")
        shots.append((question, explanation, answer))
    return shots, query


def leave_one_out_shots(task: Task, slot: int) -> list[Shot]:
    """All exemplars except `slot`, each paired with its seed explanation."""
    if not 0 <= slot < task.num_exemplars:
        raise FormatError(f"slot {slot} out of range for {task.num_exemplars} exemplars")
    return [
        (ex.question, ex.seed_explanation, ex.gold_answer)
        for i, ex in enumerate(task.exemplars)
        if i != slot
    ]
