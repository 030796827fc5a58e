"""Seeded simulated completion model.

The simulator is a desk-scale stand-in for a hosted model: it parses the
rendered prompt back into shots and a query, derives a correct-answer
probability from planted explanation qualities and question difficulties, and
emits answers (and pseudo log-probabilities) deterministically from the seed,
the prompt text, and the sample index. Higher-quality explanations in the
prompt genuinely raise downstream accuracy, which is what makes search
experiments on top of it meaningful.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from typing import Mapping

from .backend import Completion, CompletionRequest, UsageLedger, count_tokens
from .formats import (
    CHOICE_LETTER,
    LABEL_SET,
    TRAILING_NUMBER,
    TaskFormat,
    extract_answer,
    parse_prompt,
    render_answer_text,
)

CLAMP_LO = 0.02
CLAMP_HI = 0.98

_CHOICE_RE = re.compile(r"\(([a-z])\)")


def stable_digest(*parts: str) -> bytes:
    h = hashlib.sha256()
    for part in parts:
        h.update(part.encode("utf-8"))
        h.update(b"\x1f")
    return h.digest()


def stable_unit(*parts: str) -> float:
    """Deterministic float in [0, 1) derived from the parts."""
    raw = int.from_bytes(stable_digest(*parts)[:8], "big")
    return raw / 2**64


@dataclass(frozen=True)
class SimulatedModelSpec:
    """World model for the simulator.

    Correct-answer probability for a prompt is
    clamp(base_accuracy + quality_weight * mean(shot qualities) - difficulty(query),
    0.02, 0.98). Qualities and difficulties not listed explicitly are derived
    deterministically from the seed, so every explanation the simulator ever
    generates has a planted, reproducible quality.
    """

    rng_seed: int
    base_accuracy: float = 0.5
    quality_weight: float = 0.4
    explanation_quality: Mapping[str, float] = field(default_factory=dict)
    question_difficulty: Mapping[str, float] = field(default_factory=dict)
    answer_key: Mapping[str, str] = field(default_factory=dict)
    default_difficulty_scale: float = 0.25

    def to_dict(self) -> dict:
        return {
            "rng_seed": self.rng_seed,
            "base_accuracy": self.base_accuracy,
            "quality_weight": self.quality_weight,
            "explanation_quality": dict(self.explanation_quality),
            "question_difficulty": dict(self.question_difficulty),
            "answer_key": dict(self.answer_key),
            "default_difficulty_scale": self.default_difficulty_scale,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SimulatedModelSpec":
        return cls(
            rng_seed=int(data["rng_seed"]),
            base_accuracy=float(data.get("base_accuracy", 0.5)),
            quality_weight=float(data.get("quality_weight", 0.4)),
            explanation_quality=dict(data.get("explanation_quality", {})),
            question_difficulty=dict(data.get("question_difficulty", {})),
            answer_key=dict(data.get("answer_key", {})),
            default_difficulty_scale=float(data.get("default_difficulty_scale", 0.25)),
        )


def _squash_ws(text: str) -> str:
    return " ".join(text.split())


class SimulatedBackend:
    """Deterministic simulated model implementing the backend contract."""

    def __init__(self, spec: SimulatedModelSpec, fmt: TaskFormat) -> None:
        self.spec = spec
        self.fmt = fmt
        self.usage = UsageLedger()
        self.calls = 0
        self._seed = str(spec.rng_seed)

    @property
    def backend_id(self) -> str:
        digest = stable_digest(
            self._seed,
            str(self.spec.base_accuracy),
            str(self.spec.quality_weight),
            str(sorted(self.spec.explanation_quality.items())),
            str(sorted(self.spec.question_difficulty.items())),
            str(sorted(self.spec.answer_key.items())),
            str(self.spec.default_difficulty_scale),
            self.fmt.task_id,
        ).hex()[:12]
        return f"simulated:{digest}"

    # -- world model ---------------------------------------------------

    def quality(self, explanation: str) -> float:
        key = _squash_ws(explanation)
        if key in self.spec.explanation_quality:
            return float(self.spec.explanation_quality[key])
        return stable_unit(self._seed, "quality", key)

    def difficulty(self, question: str) -> float:
        if question in self.spec.question_difficulty:
            return float(self.spec.question_difficulty[question])
        return self.spec.default_difficulty_scale * stable_unit(self._seed, "difficulty", question)

    def gold_answer(self, question: str) -> str:
        known = self.spec.answer_key.get(question)
        if known is not None:
            return known
        return self._derived_answer(question, "gold")

    def correct_probability(self, prompt: str) -> float:
        shots, query = parse_prompt(self.fmt, prompt)
        if not shots:
            raise ValueError("simulated model needs at least one shot")
        mean_quality = sum(self.quality(expl) for _, expl, _ in shots) / len(shots)
        p = self.spec.base_accuracy + self.spec.quality_weight * mean_quality - self.difficulty(query)
        return min(CLAMP_HI, max(CLAMP_LO, p))

    # -- answer fabrication --------------------------------------------

    def _derived_answer(self, question: str, tag: str) -> str:
        if self.fmt.answer_pattern == TRAILING_NUMBER:
            return str(10 + int(stable_unit(self._seed, tag, question) * 90))
        if self.fmt.answer_pattern == CHOICE_LETTER:
            letters = _CHOICE_RE.findall(question) or list("abcde")
            pick = int(stable_unit(self._seed, tag, question) * len(letters))
            return letters[min(pick, len(letters) - 1)]
        labels = [lbl.lower() for lbl in self.fmt.label_set]
        pick = int(stable_unit(self._seed, tag, question) * len(labels))
        return labels[min(pick, len(labels) - 1)]

    def _wrong_answer(self, context: str, gold: str, salt: str) -> str:
        """A deterministic near-miss; varies with the full prompt so wrong
        votes scatter across combinations instead of piling on one answer."""
        if self.fmt.answer_pattern == TRAILING_NUMBER:
            try:
                base = int(float(gold))
            except ValueError:
                base = 0
            offset = 1 + int(stable_unit(self._seed, "wrong", context, salt) * 9)
            sign = 1 if stable_unit(self._seed, "wrong-sign", context, salt) < 0.5 else -1
            return str(base + sign * offset)
        if self.fmt.answer_pattern == CHOICE_LETTER:
            letters = [c for c in (_CHOICE_RE.findall(context) or list("abcde")) if c != gold]
            if not letters:
                return gold
            pick = int(stable_unit(self._seed, "wrong", context, salt) * len(letters))
            return letters[min(pick, len(letters) - 1)]
        labels = [lbl.lower() for lbl in self.fmt.label_set if lbl.lower() != gold]
        if not labels:
            return gold
        pick = int(stable_unit(self._seed, "wrong", context, salt) * len(labels))
        return labels[min(pick, len(labels) - 1)]

    def wrong_alternatives(self) -> int:
        """How many distinct wrong answers the scorer spreads mass over."""
        if self.fmt.answer_pattern == LABEL_SET:
            return max(1, len(self.fmt.label_set) - 1)
        if self.fmt.answer_pattern == CHOICE_LETTER:
            return 4
        return 9

    # -- backend contract ----------------------------------------------

    def complete(self, request: CompletionRequest) -> list[Completion]:
        self.calls += 1
        p = self.correct_probability(request.prompt)
        _, query = parse_prompt(self.fmt, request.prompt)
        gold = self.gold_answer(query)
        req_seed = "" if request.seed is None else str(request.seed)
        completions = []
        for index in range(request.num_samples):
            if request.temperature == 0:
                correct = p >= 0.5
            else:
                draw = stable_unit(self._seed, "draw", req_seed, request.prompt, str(index))
                correct = draw < p
            answer = gold if correct else self._wrong_answer(request.prompt, gold, str(index))
            route = 1 + int(stable_unit(self._seed, "route", req_seed, request.prompt, str(index)) * 10**6)
            explanation = (
                f"Working through case {stable_digest(query)[:4].hex()}"
                f" along route {route}, the pieces combine step by step."
            )
            text = render_answer_text(self.fmt, explanation, answer)
            lp = math.log(p) if correct else math.log((1.0 - p) / self.wrong_alternatives())
            lp -= 0.05 * stable_unit(self._seed, "jitter", request.prompt, text)
            completions.append(
                Completion(text=text, total_logprob=lp, token_count=count_tokens(text))
            )
        self.usage.add(
            count_tokens(request.prompt),
            sum(c.token_count for c in completions),
            request.example_count,
        )
        return completions

    def score_continuation(
        self, prompt: str, continuation: str, *, example_count: int = 2
    ) -> float:
        if not continuation:
            raise ValueError("continuation must be non-empty")
        self.calls += 1
        p = self.correct_probability(prompt)
        _, query = parse_prompt(self.fmt, prompt)
        gold = self.gold_answer(query)
        predicted = extract_answer(self.fmt, continuation)
        if predicted == gold:
            score = math.log(p)
        else:
            score = math.log((1.0 - p) / self.wrong_alternatives())
        score -= 0.05 * stable_unit(self._seed, "jitter", prompt, continuation)
        self.usage.add(count_tokens(prompt), count_tokens(continuation), example_count)
        return score
