"""State-machine app simulator and a random crawler over it."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

from .errors import CrawlError, DeviceError, TraceFormatError
from .trace import (
    Action,
    ElementPath,
    Screen,
    Trace,
    TraceStep,
    find_element,
    iter_elements,
    make_action,
    screen_from_dict,
    screen_to_dict,
)
from .utils import json_read, stage_rng

logger = logging.getLogger(__name__)

EXIT_STATE = "EXIT"


def path_key(path: ElementPath) -> str:
    return ".".join(str(i) for i in path)


def parse_path_key(key: str) -> ElementPath:
    if not key:
        return ()
    try:
        return tuple(int(part) for part in key.split("."))
    except ValueError as exc:
        raise TraceFormatError(f"Bad element key {key!r}; expected dotted child indices") from exc


@dataclass
class SimulatedApp:
    app_id: str
    states: Dict[str, Screen]
    initial: str
    transitions: Dict[Tuple[str, str], str] = field(default_factory=dict)

    def validate(self) -> "SimulatedApp":
        if EXIT_STATE in self.states:
            raise TraceFormatError(f"State id {EXIT_STATE!r} is reserved")
        if self.initial not in self.states:
            raise TraceFormatError(f"Initial state {self.initial!r} is not defined")
        for (src, key), dst in self.transitions.items():
            if src not in self.states:
                raise TraceFormatError(f"Transition from unknown state {src!r}")
            if dst != EXIT_STATE and dst not in self.states:
                raise TraceFormatError(f"Transition to unknown state {dst!r}")
            if find_element(self.states[src].root, parse_path_key(key)) is None:
                raise TraceFormatError(f"Element key {key!r} does not resolve on state {src!r}")
        return self

    def device(self) -> "SimulatedDevice":
        return SimulatedDevice(self)


class SimulatedDevice:
    def __init__(self, app: SimulatedApp):
        self.app = app
        self.state = app.initial
        self.inputs: List[Tuple[str, ElementPath, str]] = []

    @property
    def exited(self) -> bool:
        return self.state == EXIT_STATE

    def reset(self) -> Screen:
        self.state = self.app.initial
        self.inputs = []
        return self.current_screen()

    def current_screen(self) -> Screen:
        if self.exited:
            raise DeviceError(f"{self.app.app_id} has exited")
        return self.app.states[self.state]

    def perform(self, action: Action) -> bool:
        if action.kind == "system":
            return True
        screen = self.current_screen()
        path = tuple(action.target_path or ())
        if action.target_path is None or find_element(screen.root, path) is None:
            return False
        if action.kind == "click":
            self.state = self.app.transitions.get((self.state, path_key(path)), self.state)
        elif action.kind == "input":
            self.inputs.append((self.state, path, action.input_text or ""))
        return True


def load_app(document: Any) -> SimulatedApp:
    if not isinstance(document, dict):
        raise TraceFormatError("app spec: expected an object")
    for key in ("app_id", "initial", "states"):
        if key not in document:
            raise TraceFormatError(f"app spec: missing {key!r}")
    raw_states = document["states"]
    if not isinstance(raw_states, dict):
        raise TraceFormatError("app spec: states must map ids to screens")
    states = {sid: screen_from_dict(doc, 0, f"states.{sid}") for sid, doc in raw_states.items()}
    transitions: Dict[Tuple[str, str], str] = {}
    for i, raw in enumerate(document.get("transitions", []) or []):
        try:
            transitions[(raw["from"], str(raw["element_key"]))] = raw["to"]
        except (KeyError, TypeError) as exc:
            raise TraceFormatError(f"app spec: transitions[{i}] needs from/element_key/to") from exc
    return SimulatedApp(
        app_id=document["app_id"], states=states, initial=document["initial"], transitions=transitions
    ).validate()


def load_app_file(path: str) -> SimulatedApp:
    try:
        document = json_read(path)
    except (OSError, ValueError) as exc:
        raise TraceFormatError(f"Cannot read app spec {path}: {exc}") from exc
    return load_app(document)


def app_to_dict(app: SimulatedApp) -> Dict[str, Any]:
    return {
        "app_id": app.app_id,
        "initial": app.initial,
        "states": {sid: screen_to_dict(screen) for sid, screen in app.states.items()},
        "transitions": [
            {"from": src, "element_key": key, "to": dst} for (src, key), dst in sorted(app.transitions.items())
        ],
    }


def random_crawl(app: SimulatedApp, max_steps: int = 30, seed: int = 0, trace_id: Optional[str] = None) -> Trace:
    """Click uniformly random actionable elements until the cap or an app exit."""
    if max_steps < 1:
        raise CrawlError(f"max_steps must be at least 1, got {max_steps}")
    rng = stage_rng(seed, "crawl")
    device = app.device()
    device.reset()
    steps: List[TraceStep] = []
    for t in range(max_steps):
        screen = replace(device.current_screen(), index=t)
        choices = [path for path, element in iter_elements(screen.root) if element.actionable]
        if not choices:
            break
        path = choices[int(rng.integers(len(choices)))]
        action = make_action("click", screen, path)
        steps.append(TraceStep(screen=screen, action=action))
        device.perform(action)
        if device.exited:
            break
    if not steps:
        raise CrawlError(f"Initial state {app.initial!r} of {app.app_id} has nothing to click")
    final_screen = None if device.exited else replace(device.current_screen(), index=len(steps))
    logger.debug("Crawled %s: %d steps, exited=%s", app.app_id, len(steps), device.exited)
    return Trace(
        app_id=app.app_id,
        steps=tuple(steps),
        final_screen=final_screen,
        trace_id=trace_id or f"{app.app_id}-crawl-{seed}",
    )
