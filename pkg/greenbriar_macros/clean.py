"""Filtering rules for generic descriptions and backtracking actions."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from typing import FrozenSet, Iterable, Tuple

from .trace import Action, MacroCandidate
from .utils import tokenize


@lru_cache(maxsize=None)
def load_word_list(name: str) -> Tuple[str, ...]:
    text = resources.files("greenbriar_macros").joinpath("data").joinpath(f"{name}.txt").read_text(encoding="utf-8")
    return tuple(line.strip() for line in text.splitlines() if line.strip())


def common_phrases() -> FrozenSet[str]:
    return frozenset(load_word_list("common_phrases"))


def non_content_words() -> FrozenSet[str]:
    return frozenset(load_word_list("non_content_words"))


def action_keywords() -> Tuple[str, ...]:
    return load_word_list("action_keywords")


def filter_description(description: str) -> bool:
    """True to keep; False when only generic words remain."""
    skip = non_content_words()
    content = [tok for tok in tokenize(description) if tok not in skip]
    if not content:
        return False
    return not set(content) <= common_phrases()


def _identity_texts(action: Action) -> Iterable[str]:
    element = action.element
    if element is None:
        return ()
    return (element.text.lower(), element.content_description.lower(), element.resource_id.lower())


def action_is_backtracking(action: Action) -> bool:
    keywords = action_keywords()
    return any(keyword in text for text in _identity_texts(action) for keyword in keywords)


def filter_actions(candidate: MacroCandidate) -> bool:
    """True to keep; False when any action looks like cancel/back navigation."""
    actions = list(candidate.trace_actions)
    if candidate.predicted_final_action is not None:
        actions.append(candidate.predicted_final_action)
    return not any(action_is_backtracking(action) for action in actions)
