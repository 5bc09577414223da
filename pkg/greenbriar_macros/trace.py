"""Trace, screen, element and macro types plus their JSON documents."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

from .errors import TraceFormatError
from .utils import json_read, json_write, jsonl_read

ElementPath = Tuple[int, ...]

ACTION_KINDS = ("click", "scroll", "input", "system")
TARGETED_KINDS = frozenset({"click", "scroll", "input"})


@dataclass(frozen=True)
class Bounds:
    left: int
    top: int
    right: int
    bottom: int

    def __post_init__(self) -> None:
        if self.left > self.right or self.top > self.bottom:
            raise TraceFormatError(f"Inverted bounds {self.as_list()}")

    @property
    def center(self) -> Tuple[float, float]:
        return (self.left + self.right) / 2.0, (self.top + self.bottom) / 2.0

    def as_list(self) -> List[int]:
        return [self.left, self.top, self.right, self.bottom]


@dataclass(frozen=True)
class Element:
    resource_id: str = ""
    text: str = ""
    content_description: str = ""
    class_name: str = ""
    semantic_class: str = ""
    bounds: Bounds = Bounds(0, 0, 0, 0)
    clickable: bool = False
    visible: bool = True
    children: Tuple["Element", ...] = ()

    def descriptor(self) -> "Element":
        """The element without its subtree, as stored on actions and macros."""
        return replace(self, children=())

    @property
    def actionable(self) -> bool:
        return self.clickable and self.visible


@dataclass(frozen=True)
class Screen:
    index: int
    root: Element
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise TraceFormatError(f"Screen {self.index} has non-positive size {self.width}x{self.height}")


@dataclass(frozen=True)
class Action:
    kind: str
    target_path: Optional[ElementPath] = None
    screen_index: Optional[int] = None
    element: Optional[Element] = None
    input_text: Optional[str] = None
    scroll_amount: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in ACTION_KINDS:
            raise TraceFormatError(f"Unknown action kind {self.kind!r}")
        if self.kind in TARGETED_KINDS and self.target_path is None:
            raise TraceFormatError(f"{self.kind} action requires a target")
        if self.kind == "input" and self.input_text is None:
            raise TraceFormatError("input action requires input_text")


@dataclass(frozen=True)
class TraceStep:
    screen: Screen
    action: Action


@dataclass(frozen=True)
class Trace:
    app_id: str
    steps: Tuple[TraceStep, ...]
    final_screen: Optional[Screen] = None
    trace_id: str = ""

    def __post_init__(self) -> None:
        previous = None
        for step in self.steps:
            index = step.screen.index
            if previous is not None and index <= previous:
                raise TraceFormatError(f"Screen index {index} does not follow {previous} in trace {self.trace_id!r}")
            previous = index
            action = step.action
            if action.target_path is not None and find_element(step.screen.root, action.target_path) is None:
                raise TraceFormatError(
                    f"Action on screen {index} targets missing element {list(action.target_path)}"
                )
        if self.final_screen is not None and previous is not None and self.final_screen.index <= previous:
            raise TraceFormatError(f"Final screen index {self.final_screen.index} does not follow {previous}")

    @property
    def actions(self) -> List[Action]:
        return [step.action for step in self.steps]

    @property
    def screens(self) -> List[Screen]:
        screens = [step.screen for step in self.steps]
        if self.final_screen is not None:
            screens.append(self.final_screen)
        return screens


@dataclass(frozen=True)
class Parameter:
    description: str
    element: Element
    element_id: Optional[int] = None
    target_path: Optional[ElementPath] = None


@dataclass(frozen=True)
class MacroCandidate:
    description: str
    trace_actions: Tuple[Action, ...]
    source: Tuple[str, int]
    predicted_final_action: Optional[Action] = None
    parameters: Tuple[Parameter, ...] = ()
    group_traces: Tuple[str, ...] = ()

    @property
    def action_count(self) -> int:
        return len(self.trace_actions) + (1 if self.predicted_final_action is not None else 0)


@dataclass(frozen=True)
class Macro:
    description: str
    actions: Tuple[Action, ...]
    app_id: str
    parameters: Tuple[Parameter, ...] = ()
    source_traces: Tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.actions:
            raise TraceFormatError(f"Macro {self.description!r} has no actions")


def iter_elements(root: Element, path: ElementPath = ()) -> Iterator[Tuple[ElementPath, Element]]:
    """Depth-first pre-order walk yielding ``(path, element)``."""
    yield path, root
    for i, child in enumerate(root.children):
        yield from iter_elements(child, path + (i,))


def find_element(root: Element, path: Sequence[int]) -> Optional[Element]:
    node = root
    for i in path:
        if i < 0 or i >= len(node.children):
            return None
        node = node.children[i]
    return node


def make_action(
    kind: str,
    screen: Screen,
    path: Optional[Sequence[int]] = None,
    input_text: Optional[str] = None,
    scroll_amount: Optional[int] = None,
) -> Action:
    element = None
    target = None
    if path is not None:
        target = tuple(path)
        found = find_element(screen.root, target)
        if found is None:
            raise TraceFormatError(f"Action on screen {screen.index} targets missing element {list(target)}")
        element = found.descriptor()
    if kind == "scroll" and scroll_amount is None:
        scroll_amount = screen.height // 2
    return Action(
        kind=kind,
        target_path=target,
        screen_index=screen.index,
        element=element,
        input_text=input_text,
        scroll_amount=scroll_amount,
    )


def _require(doc: Any, key: str, where: str):
    if not isinstance(doc, dict):
        raise TraceFormatError(f"{where}: expected an object")
    if key not in doc:
        raise TraceFormatError(f"{where}: missing {key!r}")
    return doc[key]


def _as_str(value: Any, where: str) -> str:
    if value is None:
        return ""
    if not isinstance(value, str):
        raise TraceFormatError(f"{where}: expected a string, got {type(value).__name__}")
    return value


def _as_int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise TraceFormatError(f"{where}: expected an integer, got {value!r}")
    return value


def _as_bool(value: Any, default: bool, where: str) -> bool:
    if value is None:
        return default
    if not isinstance(value, bool):
        raise TraceFormatError(f"{where}: expected true or false, got {value!r}")
    return value


def _as_opt_str(value: Any, where: str) -> Optional[str]:
    return None if value is None else _as_str(value, where)


def _as_opt_int(value: Any, where: str) -> Optional[int]:
    return None if value is None else _as_int(value, where)


def _as_path(value: Any, where: str) -> ElementPath:
    if not isinstance(value, list):
        raise TraceFormatError(f"{where}: target_path must be a list of integers")
    return tuple(_as_int(v, where) for v in value)


def element_from_dict(doc: Any, where: str = "element") -> Element:
    if not isinstance(doc, dict):
        raise TraceFormatError(f"{where}: expected an object")
    raw_bounds = doc.get("bounds", [0, 0, 0, 0])
    if not isinstance(raw_bounds, list) or len(raw_bounds) != 4:
        raise TraceFormatError(f"{where}: bounds must be [left, top, right, bottom]")
    bounds = Bounds(*(_as_int(v, where) for v in raw_bounds))
    children = doc.get("children", []) or []
    if not isinstance(children, list):
        raise TraceFormatError(f"{where}: children must be a list")
    return Element(
        resource_id=_as_str(doc.get("resource_id"), where),
        text=_as_str(doc.get("text"), where),
        content_description=_as_str(doc.get("content_description"), where),
        class_name=_as_str(doc.get("class_name"), where),
        semantic_class=_as_str(doc.get("semantic_class"), where),
        bounds=bounds,
        clickable=_as_bool(doc.get("clickable"), False, where),
        visible=_as_bool(doc.get("visible"), True, where),
        children=tuple(element_from_dict(c, f"{where}.{i}") for i, c in enumerate(children)),
    )


def element_to_dict(element: Element, with_children: bool = True) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "resource_id": element.resource_id,
        "text": element.text,
        "content_description": element.content_description,
        "class_name": element.class_name,
        "semantic_class": element.semantic_class,
        "bounds": element.bounds.as_list(),
        "clickable": element.clickable,
        "visible": element.visible,
    }
    if with_children:
        doc["children"] = [element_to_dict(c) for c in element.children]
    return doc


def screen_from_dict(doc: Any, default_index: int, where: str = "screen") -> Screen:
    index = doc.get("index", default_index) if isinstance(doc, dict) else default_index
    return Screen(
        index=_as_int(index, where),
        root=element_from_dict(_require(doc, "root", where), f"{where}.root"),
        width=_as_int(_require(doc, "width", where), where),
        height=_as_int(_require(doc, "height", where), where),
    )


def screen_to_dict(screen: Screen) -> Dict[str, Any]:
    return {
        "index": screen.index,
        "width": screen.width,
        "height": screen.height,
        "root": element_to_dict(screen.root),
    }


def action_from_dict(doc: Any, screen: Screen, where: str = "action") -> Action:
    kind = _as_str(_require(doc, "kind", where), where)
    if kind not in ACTION_KINDS:
        raise TraceFormatError(f"{where}: unknown action kind {kind!r}")
    raw_path = doc.get("target_path")
    path = _as_path(raw_path, where) if raw_path is not None else None
    input_text = _as_opt_str(doc.get("input_text"), where)
    scroll_amount = _as_opt_int(doc.get("scroll_amount"), where)
    try:
        return make_action(kind, screen, path, input_text=input_text, scroll_amount=scroll_amount)
    except TraceFormatError as exc:
        raise TraceFormatError(f"{where}: {exc}") from exc


def action_to_dict(action: Action, with_element: bool = False) -> Dict[str, Any]:
    doc: Dict[str, Any] = {"kind": action.kind}
    if action.target_path is not None:
        doc["target_path"] = list(action.target_path)
    if action.input_text is not None:
        doc["input_text"] = action.input_text
    if action.scroll_amount is not None:
        doc["scroll_amount"] = action.scroll_amount
    if with_element:
        doc["screen_index"] = action.screen_index
        doc["element"] = element_to_dict(action.element, with_children=False) if action.element else None
    return doc


def parse_trace(document: Any, trace_id: Optional[str] = None) -> Trace:
    """Validate a trace document and resolve every action target."""
    app_id = _as_str(_require(document, "app_id", "trace"), "trace.app_id")
    if not app_id:
        raise TraceFormatError("trace: app_id is empty")
    raw_steps = _require(document, "steps", "trace")
    if not isinstance(raw_steps, list) or not raw_steps:
        raise TraceFormatError("trace: steps must be a non-empty list")
    steps = []
    for i, raw in enumerate(raw_steps):
        where = f"trace.steps[{i}]"
        screen = screen_from_dict(_require(raw, "screen", where), i, f"{where}.screen")
        action = action_from_dict(_require(raw, "action", where), screen, f"{where}.action")
        steps.append(TraceStep(screen=screen, action=action))
    final_screen = None
    if document.get("final_screen") is not None:
        next_index = steps[-1].screen.index + 1
        final_screen = screen_from_dict(document["final_screen"], next_index, "trace.final_screen")
    return Trace(
        app_id=app_id,
        steps=tuple(steps),
        final_screen=final_screen,
        trace_id=_as_str(document.get("trace_id"), "trace.trace_id") or (trace_id or ""),
    )


def serialize_trace(trace: Trace) -> Dict[str, Any]:
    doc: Dict[str, Any] = {"app_id": trace.app_id}
    if trace.trace_id:
        doc["trace_id"] = trace.trace_id
    doc["steps"] = [
        {"screen": screen_to_dict(step.screen), "action": action_to_dict(step.action)} for step in trace.steps
    ]
    if trace.final_screen is not None:
        doc["final_screen"] = screen_to_dict(trace.final_screen)
    return doc


def load_trace(path: str) -> Trace:
    try:
        document = json_read(path)
    except (OSError, ValueError) as exc:
        raise TraceFormatError(f"Cannot read trace {path}: {exc}") from exc
    stem = os.path.splitext(os.path.basename(path))[0]
    return parse_trace(document, trace_id=stem)


def save_trace(path: str, trace: Trace) -> None:
    json_write(path, serialize_trace(trace))


def parameter_to_dict(parameter: Parameter) -> Dict[str, Any]:
    return {
        "description": parameter.description,
        "element_id": parameter.element_id,
        "target_path": list(parameter.target_path) if parameter.target_path is not None else None,
        "element": element_to_dict(parameter.element, with_children=False),
    }


def macro_to_dict(macro: Macro) -> Dict[str, Any]:
    return {
        "app_id": macro.app_id,
        "description": macro.description,
        "actions": [action_to_dict(a, with_element=True) for a in macro.actions],
        "parameters": [parameter_to_dict(p) for p in macro.parameters],
        "source_traces": list(macro.source_traces),
    }


def _macro_action_from_dict(doc: Any, where: str) -> Action:
    kind = _as_str(_require(doc, "kind", where), where)
    raw_path = doc.get("target_path")
    raw_element = doc.get("element")
    try:
        return Action(
            kind=kind,
            target_path=_as_path(raw_path, where) if raw_path is not None else None,
            screen_index=_as_opt_int(doc.get("screen_index"), where),
            element=element_from_dict(raw_element, where).descriptor() if raw_element else None,
            input_text=_as_opt_str(doc.get("input_text"), where),
            scroll_amount=_as_opt_int(doc.get("scroll_amount"), where),
        )
    except TraceFormatError as exc:
        raise TraceFormatError(f"{where}: {exc}") from exc


def macro_from_dict(document: Any) -> Macro:
    where = "macro"
    actions = _require(document, "actions", where)
    if not isinstance(actions, list):
        raise TraceFormatError(f"{where}: actions must be a list")
    parameters = []
    for i, raw in enumerate(document.get("parameters", []) or []):
        pw = f"{where}.parameters[{i}]"
        raw_path = raw.get("target_path") if isinstance(raw, dict) else None
        parameters.append(
            Parameter(
                description=_as_str(_require(raw, "description", pw), pw),
                element=element_from_dict(_require(raw, "element", pw), pw).descriptor(),
                element_id=_as_opt_int(raw.get("element_id"), pw),
                target_path=_as_path(raw_path, pw) if raw_path is not None else None,
            )
        )
    return Macro(
        description=_as_str(_require(document, "description", where), where),
        actions=tuple(_macro_action_from_dict(a, f"{where}.actions[{i}]") for i, a in enumerate(actions)),
        app_id=_as_str(_require(document, "app_id", where), where),
        parameters=tuple(parameters),
        source_traces=tuple(document.get("source_traces", []) or []),
    )


def load_macros(path: str) -> List[Macro]:
    try:
        if path.endswith(".jsonl"):
            records = jsonl_read(path)
        else:
            payload = json_read(path)
            records = payload if isinstance(payload, list) else [payload]
    except (OSError, ValueError) as exc:
        raise TraceFormatError(f"Cannot read macros {path}: {exc}") from exc
    return [macro_from_dict(r) for r in records]
