"""Majority voting over answer tallies."""

from __future__ import annotations

from typing import Mapping


class NoVotesError(ValueError):
    """A vote was requested over an empty tally."""


def majority_vote(tally: Mapping[str, int]) -> str:
    """Answer with the maximal count; ties break to the lexicographically smallest.

    The result depends only on the tally multiset, never on insertion order.
    """
    if not tally:
        raise NoVotesError("cannot vote over an empty tally")
    return min(tally, key=lambda answer: (-tally[answer], answer))
