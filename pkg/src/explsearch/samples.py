"""Built-in task formats and small exemplar snippets for format tests.

Four common reasoning-benchmark layouts: grade-school math (trailing number),
multiple-choice commonsense QA (choice letter), NLI (three-way label), and
yes/no strategy questions (two-way label).
"""

from __future__ import annotations

from .formats import (
    CHOICE_LETTER,
    LABEL_SET,
    TRAILING_NUMBER,
    Exemplar,
    Task,
    TaskFormat,
)

GSM_FORMAT = TaskFormat(
    task_id="gsm",
    question_prefix="Q: ",
    answer_prefix="A:",
    answer_cue="The answer is",
    answer_pattern=TRAILING_NUMBER,
)

ECQA_FORMAT = TaskFormat(
    task_id="ecqa",
    question_prefix="Q: ",
    answer_prefix="A:",
    answer_cue="So the answer is",
    answer_pattern=CHOICE_LETTER,
)

ESNLI_FORMAT = TaskFormat(
    task_id="esnli",
    question_prefix="",
    answer_prefix="A:",
    answer_cue="The answer is",
    answer_pattern=LABEL_SET,
    label_set=("yes", "no", "not possible to tell"),
)

STRATEGYQA_FORMAT = TaskFormat(
    task_id="strategyqa",
    question_prefix="Q: ",
    answer_prefix="A:",
    answer_cue="So the answer is",
    answer_pattern=LABEL_SET,
    label_set=("yes", "no"),
)

GSM_EXEMPLARS = (
    Exemplar(
        question=(
            "In a basketball game, Tobee scored 4 points. Jay scored 6 more than Tobee "
            "and Sean scored 2 less than the points of Tobee and Jay together. If Tobee, "
            "Jay, and Sean are on the same team, how many points did they score for their team?"
        ),
        gold_answer="26",
        seed_explanation=(
            "Jay scored 4 + 6 = 10 points. Together, Tobee and Jay scores 4 + 10 = 14 points. "
            "So, Sean scored 14 - 2 = 12 points. Thus, Tobee, Jay, and Sean scored a total of "
            "4 + 10 + 12 = 26 points for their team."
        ),
    ),
    Exemplar(
        question=(
            "Bob has planted corn in his garden, and it has just started to sprout. A week "
            "after planting it, it had grown 2 inches. The next week, its height increased by "
            "twice as much as it had the first week. In the third week, it grew 4 times as "
            "much as it did the week before. How tall are the corn plants now?"
        ),
        gold_answer="22",
        seed_explanation=(
            "The second week it grew twice as much as the first week, so 2 * 2 inches = 4 inches. "
            "The third week it grew 4 times as much as in the second week, so 4 * 4 inches = 16 inches. "
            "In total, it grew 2 inches + 4 inches + 16 inches = 22 inches."
        ),
    ),
    Exemplar(
        question=(
            "Yanna baked twenty butter cookies and forty biscuits in the morning. In the "
            "afternoon, she baked ten butter cookies and twenty biscuits. How many more "
            "biscuits did she bake than butter cookies?"
        ),
        gold_answer="30",
        seed_explanation=(
            "There were 20 + 10 = 30 butter cookies. And, there were 40 + 20 = 60 biscuits. "
            "Therefore, she baked 60 - 30 = 30 more biscuits than butter cookies."
        ),
    ),
)

ECQA_EXEMPLARS = (
    Exemplar(
        question=(
            "The child was spiteful of his parents, what did he do?\n"
            "Answer Choices:\n(a) become adult\n(b) succeeded\n(c) grow up\n"
            "(d) ask questions\n(e) acting out"
        ),
        gold_answer="e",
        seed_explanation="Children act out. Acting out is a type of behaviour. Spiteful people act out.",
    ),
    Exemplar(
        question=(
            "Sally brought the ball when she visited Scott so that they could do what with it?\n"
            "Answer Choices:\n(a) bounces\n(b) play with\n(c) toy\n(d) charming\n(e) earball"
        ),
        gold_answer="b",
        seed_explanation="Ball is spherical toy. Toys can be played with.",
    ),
    Exemplar(
        question=(
            "What are most people trying to do when going on vacation?\n"
            "Answer Choices:\n(a) panic\n(b) debate\n(c) having fun\n(d) debt\n(e) peace"
        ),
        gold_answer="c",
        seed_explanation=(
            "Vacation is a holiday during which people relax and enjoy away from home. "
            "Relax and enjoy means having fun."
        ),
    ),
)

ESNLI_EXEMPLARS = (
    Exemplar(
        question=(
            'Premise:\n"A man at a flea market browsing."\n'
            'Based on this premise, can we conclude the hypothesis "A man is sleeping at a '
            'flea market." is true?\nOPTIONS:\n- yes\n- no\n- not possible to tell'
        ),
        gold_answer="no",
        seed_explanation="One cannot be sleeping and browsing at the same time.",
    ),
    Exemplar(
        question=(
            'Premise:\n"A mother and her child are out for a walk."\n'
            'Based on this premise, can we conclude the hypothesis "A mother and her child '
            'are bonding together." is true?\nOPTIONS:\n- yes\n- no\n- not possible to tell'
        ),
        gold_answer="not possible to tell",
        seed_explanation="going on a walk doesn't imply bonding together.",
    ),
    Exemplar(
        question=(
            'Premise:\n"A man in a red, black and white uniform is pursuing a soccer ball on '
            'a grassy field."\nBased on this premise, can we conclude the hypothesis "A man '
            'is playing soccer." is true?\nOPTIONS:\n- yes\n- no\n- not possible to tell'
        ),
        gold_answer="yes",
        seed_explanation="if your pursuing a soccer ball your also playing soccer.",
    ),
)

STRATEGYQA_EXEMPLARS = (
    Exemplar(
        question="Did Archduke Franz Ferdinand of Austria participate in the Pacific War?",
        gold_answer="no",
        seed_explanation=(
            "Archduke Franz Ferdinand of Austria was assassinated in 1914. The Pacific War "
            "took place between 1941 and 1945."
        ),
    ),
    Exemplar(
        question="Could Lil Wayne's children ride in a Chevrolet Corvette ZR1 together?",
        gold_answer="no",
        seed_explanation="Lil Wayne has four children. A Chevrolet Corvette ZR1 has 2 seats.",
    ),
    Exemplar(
        question="Can the Toyota Hilux tip the scales against Mr. Ed?",
        gold_answer="yes",
        seed_explanation=(
            "The current generation of Toyota Hilux weighs at least 4,310 lbs. Mr. Ed was "
            "portrayed by an adult horse. The average adult horse weighs up to 2,000 lbs."
        ),
    ),
)

SAMPLE_TASKS = {
    "gsm": Task(format=GSM_FORMAT, exemplars=GSM_EXEMPLARS),
    "ecqa": Task(format=ECQA_FORMAT, exemplars=ECQA_EXEMPLARS),
    "esnli": Task(format=ESNLI_FORMAT, exemplars=ESNLI_EXEMPLARS),
    "strategyqa": Task(format=STRATEGYQA_FORMAT, exemplars=STRATEGYQA_EXEMPLARS),
}
