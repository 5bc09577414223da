"""Macro replay with Jaccard fuzzy matching and future-step skipping."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Protocol, Sequence

from .errors import MacroMinerError
from .trace import Action, Element, ElementPath, Macro, Screen, iter_elements, make_action
from .utils import parallel_map, resource_words, short_class_name, tokenize

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.5


class DeviceBackend(Protocol):
    def current_screen(self) -> Screen:
        ...

    def perform(self, action: Action) -> bool:
        ...

    def reset(self) -> Screen:
        ...


@dataclass(frozen=True)
class ElementMatch:
    path: ElementPath
    element: Element
    similarity: float


@dataclass
class StepRecord:
    index: int
    kind: str
    matched_path: Optional[ElementPath]
    similarity: Optional[float]
    skipped: List[int] = field(default_factory=list)


@dataclass
class ParameterEntry:
    description: str
    matched_path: Optional[ElementPath]
    similarity: Optional[float]


@dataclass
class ReplayReport:
    description: str
    total_steps: int
    success: bool = False
    reason: Optional[str] = None
    steps: List[StepRecord] = field(default_factory=list)
    skipped: List[int] = field(default_factory=list)
    parameter_entries: List[ParameterEntry] = field(default_factory=list)

    @property
    def steps_executed(self) -> int:
        return len(self.steps)

    @property
    def remaining(self) -> int:
        return self.total_steps - self.steps_executed - len(self.skipped)


@dataclass
class BatchReplayResult:
    success_rate: Optional[float]
    reports: List[ReplayReport]


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    """|a ∩ b| / |a ∪ b|; two empty sets count as identical."""
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def element_tokens(element: Element) -> FrozenSet[str]:
    tokens = set(resource_words(element.resource_id))
    tokens.update(tokenize(element.text))
    tokens.update(tokenize(element.content_description))
    tokens.update(tokenize(short_class_name(element.class_name)))
    return frozenset(tokens)


def match_element(screen: Screen, target: Element, threshold: float = DEFAULT_THRESHOLD) -> Optional[ElementMatch]:
    """Most similar visible element at or above ``threshold``; earliest in pre-order on ties."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    wanted = element_tokens(target)
    best: Optional[ElementMatch] = None
    for path, element in iter_elements(screen.root):
        if not element.visible:
            continue
        sim = jaccard(element_tokens(element), wanted)
        if sim >= threshold and (best is None or sim > best.similarity):
            best = ElementMatch(path=path, element=element, similarity=sim)
    return best


def _match_step(screen: Screen, action: Action, threshold: float) -> Optional[ElementMatch]:
    if action.element is None:
        return None
    return match_element(screen, action.element, threshold)


def _concrete(action: Action, screen: Screen, match: ElementMatch) -> Action:
    return make_action(
        action.kind, screen, match.path, input_text=action.input_text, scroll_amount=action.scroll_amount
    )


def _enter_parameters(
    macro: Macro,
    device: DeviceBackend,
    threshold: float,
    values: Mapping[str, str],
    report: ReplayReport,
) -> None:
    for parameter in macro.parameters:
        if parameter.description not in values:
            continue
        screen = device.current_screen()
        match = match_element(screen, parameter.element, threshold)
        if match is None:
            logger.debug("Parameter %r has no element on screen", parameter.description)
            report.parameter_entries.append(ParameterEntry(parameter.description, None, None))
            continue
        device.perform(make_action("input", screen, match.path, input_text=values[parameter.description]))
        report.parameter_entries.append(ParameterEntry(parameter.description, match.path, match.similarity))


def replay(
    macro: Macro,
    device: DeviceBackend,
    threshold: float = DEFAULT_THRESHOLD,
    parameter_values: Optional[Mapping[str, str]] = None,
) -> ReplayReport:
    """Execute ``macro`` from the device's current (landing) screen."""
    steps = list(macro.actions)
    total = len(steps)
    report = ReplayReport(description=macro.description, total_steps=total)
    i = 0
    try:
        while i < total:
            screen = device.current_screen()
            action = steps[i]
            match = None
            skipped: List[int] = []
            if action.element is not None:
                match = _match_step(screen, action, threshold)
                if match is None:
                    jump = next(
                        (k for k in range(i + 1, total) if _match_step(screen, steps[k], threshold) is not None),
                        None,
                    )
                    if jump is None:
                        report.reason = f"stuck at step {i + 1} of {total}"
                        return report
                    skipped = list(range(i, jump))
                    logger.debug("%s: skipping steps %s", macro.description, [s + 1 for s in skipped])
                    report.skipped.extend(skipped)
                    i = jump
                    action = steps[i]
                    match = _match_step(screen, action, threshold)
            if i == total - 1 and parameter_values:
                _enter_parameters(macro, device, threshold, parameter_values, report)
                screen = device.current_screen()
                if action.element is not None:
                    match = _match_step(screen, action, threshold)
                    if match is None:
                        report.reason = f"final step {total} lost after parameter entry"
                        return report
            concrete = _concrete(action, screen, match) if match is not None else action
            if not device.perform(concrete):
                report.reason = f"step {i + 1} could not be performed"
                return report
            report.steps.append(
                StepRecord(
                    index=i,
                    kind=action.kind,
                    matched_path=match.path if match else None,
                    similarity=match.similarity if match else None,
                    skipped=skipped,
                )
            )
            i += 1
    except MacroMinerError as exc:
        report.reason = f"device error: {exc}"
        return report
    report.success = True
    return report


def batch_replay(
    macros: Sequence[Macro],
    device_factory: Callable[[Macro], DeviceBackend],
    threshold: float = DEFAULT_THRESHOLD,
    parameter_values: Optional[Mapping[str, str]] = None,
    workers: int = 1,
) -> BatchReplayResult:

    def _run(macro: Macro) -> ReplayReport:
        device = device_factory(macro)
        device.reset()
        return replay(macro, device, threshold, parameter_values)

    reports = parallel_map(_run, list(macros), workers)
    rate = sum(r.success for r in reports) / len(reports) if reports else None
    return BatchReplayResult(success_rate=rate, reports=reports)


def report_to_dict(report: ReplayReport) -> Dict:
    return {
        "description": report.description,
        "success": report.success,
        "reason": report.reason,
        "total_steps": report.total_steps,
        "steps_executed": report.steps_executed,
        "skipped": [s + 1 for s in report.skipped],
        "remaining": report.remaining,
        "steps": [
            {
                "step": s.index + 1,
                "kind": s.kind,
                "matched_path": list(s.matched_path) if s.matched_path is not None else None,
                "similarity": s.similarity,
                "skipped_before": [k + 1 for k in s.skipped],
            }
            for s in report.steps
        ],
        "parameters": [
            {
                "description": p.description,
                "matched_path": list(p.matched_path) if p.matched_path is not None else None,
                "similarity": p.similarity,
            }
            for p in report.parameter_entries
        ],
    }
