"""Bundled simulated benchmark: a small arithmetic task with planted structure.

The generator is fully deterministic given a seed. Seed explanations get a
fixed middling quality, sampled explanations get hash-derived qualities, and
question difficulties are drawn from a narrow band, so different combinations
genuinely differ in downstream accuracy and proxy-guided search has signal to
find.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .formats import TRAILING_NUMBER, Exemplar, Task, TaskFormat
from .silver import DevSet
from .simulated import SimulatedModelSpec, stable_unit

TOY_FORMAT = TaskFormat(
    task_id="toy-arithmetic",
    question_prefix="Q: ",
    answer_prefix="A:",
    answer_cue="The answer is",
    answer_pattern=TRAILING_NUMBER,
)

BASE_ACCURACY = 0.5
QUALITY_WEIGHT = 0.35
DIFFICULTY_SCALE = 0.35
SEED_EXPLANATION_QUALITY = 0.45

_TEMPLATES = (
    ("A market stall sold {a} apples in the morning and {b} apples in the afternoon. "
     "How many apples did it sell that day?",
     "The stall sold {a} apples and then {b} more, and {a} + {b} = {c}."),
    ("A reading group finished {a} pages on Monday and {b} pages on Tuesday. "
     "How many pages did the group finish over the two days?",
     "Across the two days the group read {a} + {b} = {c} pages."),
    ("A crate held {a} bottles before {b} more bottles were packed into it. "
     "How many bottles does the crate hold now?",
     "Starting from {a} bottles and adding {b} gives {a} + {b} = {c}."),
    ("A library shelved {a} books on the top shelf and {b} books on the bottom shelf. "
     "How many books are on the two shelves together?",
     "The shelves hold {a} + {b} = {c} books in total."),
    ("A garden plot produced {a} tomatoes in the first picking and {b} tomatoes in the "
     "second picking. How many tomatoes were picked in all?",
     "Adding both pickings, {a} + {b} = {c} tomatoes."),
)


@dataclass
class ToyBenchmark:
    task: Task
    devset: DevSet
    test_questions: list[str]
    test_answers: list[str]
    sim_spec: SimulatedModelSpec


def _make_question(rng: random.Random, ordinal: int) -> tuple[str, str, str]:
    template_q, template_e = _TEMPLATES[ordinal % len(_TEMPLATES)]
    a = rng.randrange(11, 90)
    b = rng.randrange(11, 90)
    c = a + b
    question = f"[#{ordinal + 1}] " + template_q.format(a=a, b=b)
    explanation = template_e.format(a=a, b=b, c=c)
    return question, explanation, str(c)


def build_toy_benchmark(
    seed: int = 0,
    num_exemplars: int = 8,
    dev_size: int = 64,
    test_size: int = 128,
) -> ToyBenchmark:
    rng = random.Random(seed)
    questions: list[str] = []
    explanations: list[str] = []
    answers: list[str] = []
    total = num_exemplars + dev_size + test_size
    for ordinal in range(total):
        question, explanation, answer = _make_question(rng, ordinal)
        questions.append(question)
        explanations.append(explanation)
        answers.append(answer)

    exemplars = tuple(
        Exemplar(question=questions[i], gold_answer=answers[i], seed_explanation=explanations[i])
        for i in range(num_exemplars)
    )
    task = Task(format=TOY_FORMAT, exemplars=exemplars)

    dev_questions = tuple(questions[num_exemplars:num_exemplars + dev_size])
    test_questions = questions[num_exemplars + dev_size:]
    test_answers = answers[num_exemplars + dev_size:]

    seed_tag = str(seed)
    difficulty = {
        q: DIFFICULTY_SCALE * stable_unit(seed_tag, "toy-difficulty", q) for q in questions
    }
    quality = {" ".join(e.split()): SEED_EXPLANATION_QUALITY for e in explanations[:num_exemplars]}
    sim_spec = SimulatedModelSpec(
        rng_seed=seed,
        base_accuracy=BASE_ACCURACY,
        quality_weight=QUALITY_WEIGHT,
        explanation_quality=quality,
        question_difficulty=difficulty,
        answer_key=dict(zip(questions, answers)),
        default_difficulty_scale=DIFFICULTY_SCALE,
    )
    return ToyBenchmark(
        task=task,
        devset=DevSet(questions=dev_questions),
        test_questions=test_questions,
        test_answers=test_answers,
        sim_spec=sim_spec,
    )
