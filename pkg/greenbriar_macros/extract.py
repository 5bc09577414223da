"""Macro candidate extraction by chained prompting over screen HTML."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import regex as re

from .errors import ExtractionStepError
from .layout import HtmlScreen, to_html
from .llm import GenerationBackend
from .trace import Action, MacroCandidate, Parameter, Screen, Trace, find_element
from .utils import normalize_line, parallel_map

logger = logging.getLogger(__name__)

T = TypeVar("T")

DEFAULT_MAX_COMPLETIONS = 8
PROMPT_HEADER = "Below is a simplified HTML code of a mobile app:"

_NONE_RE = re.compile(r"(?i)^\s*none\s*\.?\s*$")
_DASH_SPLIT_RE = re.compile(r"(?m)^[ \t]*-[ \t]*")
_IDS_RE = re.compile(r"^\d+(?:\s*[,\s]\s*\d+)*$")
_SINGLE_ID_RE = re.compile(r"^\d+$")
_PARAM_LINE_RE = re.compile(r"^\s*-\s*(.*?)\s*$")


class _Rejected(ValueError):
    pass


@dataclass(frozen=True)
class GroundingResult:
    element_ids: Tuple[int, ...]
    is_terminal: bool


@dataclass
class ExtractionStats:
    screens_total: int = 0
    screens_duplicate: int = 0
    discovery_failures: int = 0
    descriptions: int = 0
    grounding_attempts: int = 0
    grounding_failures: int = 0
    terminal: int = 0
    parameter_failures: int = 0
    parameters_dropped: int = 0
    grounding_ids_ignored: int = 0

    @property
    def failure_rate(self) -> Optional[float]:
        if not self.grounding_attempts:
            return None
        return self.grounding_failures / self.grounding_attempts

    def as_dict(self) -> dict:
        return {
            "screens_total": self.screens_total,
            "screens_duplicate": self.screens_duplicate,
            "discovery_failures": self.discovery_failures,
            "descriptions": self.descriptions,
            "grounding_attempts": self.grounding_attempts,
            "grounding_failures": self.grounding_failures,
            "terminal": self.terminal,
            "parameter_failures": self.parameter_failures,
            "parameters_dropped": self.parameters_dropped,
            "grounding_ids_ignored": self.grounding_ids_ignored,
            "llm_failure_rate": self.failure_rate,
        }


def _sentence_case(text: str) -> str:
    return text[:1].upper() + text[1:]


def _inline_case(text: str) -> str:
    return text[:1].lower() + text[1:]


def discovery_prompt(screen_html: HtmlScreen) -> str:
    return "\n".join(
        [PROMPT_HEADER, screen_html.html, "What can a user do with the prompt?", "The user can: -"]
    )


def grounding_prompt(screen_html: HtmlScreen, description: str) -> str:
    return "\n".join(
        [
            PROMPT_HEADER,
            screen_html.html,
            f"Which element id(s) should the user click on next to accomplish the task {description}?",
            'Respond with only the number(s), or "None" if the user can already complete the task on the current page.',
        ]
    )


def parameter_prompt(screen_html: HtmlScreen, description: str, element_ids: Sequence[int]) -> str:
    if len(element_ids) == 1:
        target = f"the element with id {element_ids[0]}"
    else:
        target = "the elements with ids " + ", ".join(str(i) for i in element_ids)
    return "\n".join(
        [
            PROMPT_HEADER,
            screen_html.html,
            f"The user is trying to complete the task {_inline_case(description)}.",
            f"Other than clicking on {target}, list the additional information the user needs to enter "
            'in the format of (- (info)). Answer "None" if no additional information is needed.',
        ]
    )


def locate_prompt(screen_html: HtmlScreen, param_description: str) -> str:
    return "\n".join(
        [
            PROMPT_HEADER,
            screen_html.html,
            f"Where can the user enter the {param_description}? Answer with only the element id, "
            'or "None" if no element matches.',
        ]
    )


def parse_task_list(completion: str) -> List[str]:
    """Items of a ``task - task - ...`` answer primed with a leading dash."""
    if _NONE_RE.match(completion or ""):
        return []
    primed = "-" + (completion or "")
    items = []
    for chunk in _DASH_SPLIT_RE.split(primed):
        first_line = next((line for line in chunk.splitlines() if line.strip()), "")
        item = normalize_line(first_line)
        if item:
            items.append(item)
    if not items:
        raise _Rejected("no task items")
    return items


def parse_grounding(completion: str, screen_html: HtmlScreen) -> GroundingResult:
    text = (completion or "").strip()
    if _NONE_RE.match(text):
        return GroundingResult(element_ids=(), is_terminal=True)
    if not _IDS_RE.match(text):
        raise _Rejected(f"not an id list: {text[:40]!r}")
    ids: List[int] = []
    for token in re.split(r"[,\s]+", text):
        value = int(token)
        if value not in screen_html.index_map:
            raise _Rejected(f"hallucinated element id {value}")
        if value not in ids:
            ids.append(value)
    return GroundingResult(element_ids=tuple(ids), is_terminal=False)


def parse_parameter_list(completion: str) -> List[str]:
    text = (completion or "").strip()
    if _NONE_RE.match(text):
        return []
    params = []
    for line in text.splitlines():
        match = _PARAM_LINE_RE.match(line)
        if not match:
            continue
        value = match.group(1)
        if value.startswith("(") and value.endswith(")"):
            value = value[1:-1]
        value = normalize_line(value)
        if value:
            params.append(value)
    if not params:
        raise _Rejected("no parameter items")
    return params


def parse_element_id(completion: str, screen_html: HtmlScreen) -> Optional[int]:
    text = (completion or "").strip()
    if _NONE_RE.match(text):
        return None
    if not _SINGLE_ID_RE.match(text):
        raise _Rejected(f"not a single id: {text[:40]!r}")
    value = int(text)
    if value not in screen_html.index_map:
        raise _Rejected(f"hallucinated element id {value}")
    return value


def _first_valid(
    backend: GenerationBackend,
    prompt: str,
    parse: Callable[[str], T],
    max_completions: int,
    step: str,
) -> T:
    completions = backend.generate(prompt, max_completions)
    for rank, completion in enumerate(completions[:max_completions]):
        try:
            return parse(completion)
        except _Rejected as exc:
            logger.debug("%s: rejected completion rank %d: %s", step, rank, exc)
    raise ExtractionStepError(f"{step}: none of {len(completions)} completions was usable")


def discover_tasks(
    screen_html: HtmlScreen,
    backend: GenerationBackend,
    max_completions: int = DEFAULT_MAX_COMPLETIONS,
) -> List[str]:
    return _first_valid(backend, discovery_prompt(screen_html), parse_task_list, max_completions, "discovery")


def ground_action(
    screen_html: HtmlScreen,
    description: str,
    backend: GenerationBackend,
    max_completions: int = DEFAULT_MAX_COMPLETIONS,
) -> GroundingResult:
    return _first_valid(
        backend,
        grounding_prompt(screen_html, description),
        lambda c: parse_grounding(c, screen_html),
        max_completions,
        "grounding",
    )


def find_parameters(
    screen_html: HtmlScreen,
    description: str,
    grounded_ids: Sequence[int],
    backend: GenerationBackend,
    max_completions: int = DEFAULT_MAX_COMPLETIONS,
) -> List[str]:
    """Extra information the task needs; unparseable answers mean none."""
    try:
        return _first_valid(
            backend,
            parameter_prompt(screen_html, description, grounded_ids),
            parse_parameter_list,
            max_completions,
            "parameters",
        )
    except ExtractionStepError as exc:
        logger.debug("Treating parameters of %r as empty: %s", description, exc)
        return []


def locate_parameter_element(
    screen_html: HtmlScreen,
    param_description: str,
    backend: GenerationBackend,
    max_completions: int = DEFAULT_MAX_COMPLETIONS,
) -> Optional[int]:
    try:
        return _first_valid(
            backend,
            locate_prompt(screen_html, param_description),
            lambda c: parse_element_id(c, screen_html),
            max_completions,
            "parameter element",
        )
    except ExtractionStepError as exc:
        logger.debug("No element for parameter %r: %s", param_description, exc)
        return None


def extract_candidates(
    trace: Trace,
    backend: GenerationBackend,
    max_completions: int = DEFAULT_MAX_COMPLETIONS,
    workers: int = 1,
    stats: Optional[ExtractionStats] = None,
) -> List[MacroCandidate]:
    """Discover tasks on every screen of ``trace`` and pair them with the trace prefix.

    A screen whose HTML equals the previous screen's is skipped; its tasks are
    already attributed to the earliest screen of the run.
    """
    stats = stats if stats is not None else ExtractionStats()
    screens = trace.screens
    actions = trace.actions
    unique: List[Tuple[int, HtmlScreen]] = []
    previous_html = None
    for position, screen in enumerate(screens):
        stats.screens_total += 1
        screen_html = to_html(screen)
        if screen_html.html == previous_html:
            stats.screens_duplicate += 1
            continue
        previous_html = screen_html.html
        if screen_html.is_empty:
            continue
        unique.append((position, screen_html))

    def _discover(item: Tuple[int, HtmlScreen]) -> Optional[List[str]]:
        try:
            return discover_tasks(item[1], backend, max_completions)
        except ExtractionStepError as exc:
            logger.debug("Discovery failed on %s screen %d: %s", trace.trace_id, item[1].screen.index, exc)
            return None

    results = parallel_map(_discover, unique, workers)

    candidates: List[MacroCandidate] = []
    for (position, screen_html), tasks in zip(unique, results):
        if tasks is None:
            stats.discovery_failures += 1
            continue
        prefix = tuple(actions[:position])
        for task in tasks:
            stats.descriptions += 1
            candidates.append(
                MacroCandidate(
                    description=_sentence_case(task),
                    trace_actions=prefix,
                    source=(trace.trace_id, screen_html.screen.index),
                )
            )
    return candidates


def source_screen(trace: Trace, candidate: MacroCandidate) -> Screen:
    for screen in trace.screens:
        if screen.index == candidate.source[1]:
            return screen
    raise KeyError(f"Screen {candidate.source[1]} not in trace {trace.trace_id!r}")


def _click(screen_html: HtmlScreen, element_id: int) -> Action:
    screen = screen_html.screen
    path = screen_html.index_map[element_id]
    return Action(
        kind="click",
        target_path=path,
        screen_index=screen.index,
        element=find_element(screen.root, path).descriptor(),
    )


def ground_candidate(
    candidate: MacroCandidate,
    screen_html: HtmlScreen,
    backend: GenerationBackend,
    max_completions: int = DEFAULT_MAX_COMPLETIONS,
) -> Tuple[MacroCandidate, GroundingResult]:
    """Attach the predicted final action; raises ExtractionStepError on failure.

    Only the first grounded id becomes the final click. Callers count the rest
    through ``ExtractionStats.grounding_ids_ignored``.
    """
    grounding = ground_action(screen_html, candidate.description, backend, max_completions)
    if grounding.is_terminal or not grounding.element_ids:
        return candidate, grounding
    final_action = _click(screen_html, grounding.element_ids[0])
    return replace(candidate, predicted_final_action=final_action), grounding


def attach_parameters(
    candidate: MacroCandidate,
    grounding: GroundingResult,
    screen_html: HtmlScreen,
    backend: GenerationBackend,
    max_completions: int = DEFAULT_MAX_COMPLETIONS,
    stats: Optional[ExtractionStats] = None,
) -> MacroCandidate:
    if grounding.is_terminal or candidate.predicted_final_action is None:
        return candidate
    names = find_parameters(screen_html, candidate.description, grounding.element_ids, backend, max_completions)
    parameters = []
    for name in names:
        element_id = locate_parameter_element(screen_html, name, backend, max_completions)
        if element_id is None:
            if stats is not None:
                stats.parameters_dropped += 1
            continue
        path = screen_html.index_map[element_id]
        parameters.append(
            Parameter(
                description=name,
                element=screen_html.element(element_id).descriptor(),
                element_id=element_id,
                target_path=path,
            )
        )
    return replace(candidate, parameters=tuple(parameters))
