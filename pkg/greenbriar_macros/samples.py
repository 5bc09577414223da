"""Demo calendar app: a reminder-creation trace, its scripted completions and a simulator spec."""

from __future__ import annotations

from typing import Dict, List, Optional

from .extract import discovery_prompt, grounding_prompt, locate_prompt, parameter_prompt
from .layout import to_html
from .llm import ScriptedBackend
from .simulator import SimulatedApp
from .trace import Bounds, Element, Screen, Trace, TraceStep, make_action

APP_ID = "com.google.android.calendar"
TRACE_ID = "calendar-reminder"
WIDTH, HEIGHT = 1080, 1920

GROUND_TRUTH = {TRACE_ID: "add a reminder"}


def _rid(name: str) -> str:
    return f"{APP_ID}:id/{name}"


def _el(
    name: str = "",
    text: str = "",
    desc: str = "",
    cls: str = "android.widget.TextView",
    semantic: str = "TEXT",
    bounds=(0, 0, 0, 0),
    clickable: bool = False,
    children=(),
) -> Element:
    return Element(
        resource_id=_rid(name) if name else "",
        text=text,
        content_description=desc,
        class_name=cls,
        semantic_class=semantic,
        bounds=Bounds(*bounds),
        clickable=clickable,
        children=tuple(children),
    )


def _frame(*children: Element) -> Element:
    return _el(cls="android.widget.FrameLayout", semantic="CONTAINER", bounds=(0, 0, WIDTH, HEIGHT), children=children)


def _pager() -> Element:
    image = _el("onboarding_image", cls="android.widget.ImageView", semantic="IMAGE", bounds=(100, 500, 980, 1400))
    return _el(
        "onboarding_pager",
        cls="androidx.viewpager.widget.ViewPager",
        semantic="CONTAINER",
        bounds=(0, 400, WIDTH, 1600),
        children=[image],
    )


def _title(text: str) -> Element:
    return _el("onboarding_title", text=text, bounds=(0, 200, WIDTH, 400))


def _next_arrow() -> Element:
    return _el(
        "next_arrow",
        desc="Next",
        cls="android.widget.ImageButton",
        semantic="BUTTON",
        bounds=(900, 1700, WIDTH, 1900),
        clickable=True,
    )


def _got_it() -> Element:
    return _el(
        "done_button",
        text="Got it",
        cls="android.widget.Button",
        semantic="BUTTON",
        bounds=(60, 1700, 400, 1900),
        clickable=True,
    )


def onboarding_screen(page: int, index: int = 0) -> Screen:
    titles = {1: "Welcome to Calendar", 2: "Plan your day", 3: "Stay on track"}
    children = [_title(titles[page]), _pager()]
    if page < 3:
        children.append(_next_arrow())
    if page > 1:
        children.append(_got_it())
    return Screen(index=index, root=_frame(*children), width=WIDTH, height=HEIGHT)


def main_screen(index: int = 0) -> Screen:
    root = _frame(
        _el("date_header", text="December 2020", bounds=(0, 0, 700, 150)),
        _el(
            "today_button",
            text="Today",
            cls="android.widget.Button",
            semantic="BUTTON",
            bounds=(700, 0, WIDTH, 150),
            clickable=True,
        ),
        _el("help_link", text="Help", bounds=(0, 1750, 300, 1900), clickable=True),
        _el(
            "fab",
            desc="Create new event",
            cls="android.widget.ImageButton",
            semantic="BUTTON",
            bounds=(880, 1720, 1060, 1900),
            clickable=True,
        ),
    )
    return Screen(index=index, root=root, width=WIDTH, height=HEIGHT)


def speed_dial_screen(index: int = 0) -> Screen:
    options = []
    for row, label in enumerate(("Goal", "Reminder", "Task", "Event")):
        top = 1000 + row * 160
        options.append(
            _el(
                f"speed_dial_{label.lower()}",
                cls="android.widget.LinearLayout",
                semantic="CONTAINER",
                bounds=(600, top, WIDTH, top + 150),
                clickable=True,
                children=[_el(text=label, bounds=(620, top + 20, 900, top + 130))],
            )
        )
    return Screen(index=index, root=_frame(*options), width=WIDTH, height=HEIGHT)


def reminder_screen(index: int = 0, save_label: str = "Save") -> Screen:
    icon = dict(cls="android.widget.ImageView", semantic="ICON", clickable=True)
    root = _frame(
        _el("cancel_image", cls="android.widget.ImageView", semantic="IMAGE", bounds=(0, 0, 150, 150), clickable=True),
        _el(
            save_label.lower(),
            text=save_label,
            cls="android.widget.Button",
            semantic="BUTTON",
            bounds=(900, 0, WIDTH, 150),
            clickable=True,
        ),
        _el(
            "title_edit",
            text="Remind me to",
            cls="android.widget.EditText",
            semantic="INPUT",
            bounds=(150, 160, 930, 260),
            clickable=True,
        ),
        _el("first_line", text="All day", bounds=(150, 270, 900, 350)),
        _el("tile_icon", bounds=(0, 360, 150, 440), **icon),
        _el("first_line", text="Sun, Dec 13, 2020", bounds=(150, 360, 700, 440)),
        _el(
            text="8:00 AM",
            desc="Start time 8:00 AM",
            cls="android.widget.Button",
            semantic="BUTTON",
            bounds=(750, 360, WIDTH, 440),
            clickable=True,
        ),
        _el("first_line", text="Does not repeat", desc="Does not repeat.", bounds=(150, 450, 900, 530)),
        _el("tile_icon", bounds=(0, 450, 150, 530), **icon),
    )
    return Screen(index=index, root=root, width=WIDTH, height=HEIGHT)


def calendar_trace(trace_id: str = TRACE_ID) -> Trace:
    """Nine screens ending on the reminder form; eight actions, one of them a system event."""
    s = [
        onboarding_screen(1, 1),
        onboarding_screen(1, 2),
        onboarding_screen(1, 3),
        onboarding_screen(1, 4),
        onboarding_screen(2, 5),
        onboarding_screen(3, 6),
        main_screen(7),
        speed_dial_screen(8),
    ]
    actions = [
        make_action("scroll", s[0], (1,)),
        make_action("system", s[1]),
        make_action("scroll", s[2], (1,)),
        make_action("click", s[3], (2,)),
        make_action("click", s[4], (2,)),
        make_action("click", s[5], (2,)),
        make_action("click", s[6], (3,)),
        make_action("click", s[7], (1,)),
    ]
    steps = tuple(TraceStep(screen=screen, action=action) for screen, action in zip(s, actions))
    return Trace(app_id=APP_ID, steps=steps, final_screen=reminder_screen(9), trace_id=trace_id)


REMINDER_TASKS = (
    " create a reminder\n"
    "- edit the reminder title\n"
    "- set the reminder time\n"
    "- set the reminder date\n"
    "- choose whether the reminder repeats"
)

GENERIC_TASKS = {
    1: " tap the next button\n- close the screen",
    5: " press the button\n- tap next",
    6: " press the button",
    7: " navigate to settings\n- tap the button",
    8: " tap the button\n- close the screen",
}

# ranked grounding completions for the reminder screen; only the first task survives
REMINDER_GROUNDING = {
    "Create a reminder": ["1"],
    "Edit the reminder title": ["12", "0"],
    "Set the reminder time": ["99"],
    "Set the reminder date": ["0"],
    "Choose whether the reminder repeats": ["42", "forty"],
}


def calendar_script(trace: Optional[Trace] = None) -> ScriptedBackend:
    trace = trace or calendar_trace()
    prompts: Dict[str, List[str]] = {}
    for screen in trace.screens:
        html = to_html(screen)
        if screen.index in GENERIC_TASKS:
            prompts[discovery_prompt(html)] = [GENERIC_TASKS[screen.index]]
    reminder = to_html(trace.final_screen)
    prompts[discovery_prompt(reminder)] = [REMINDER_TASKS]
    for description, completions in REMINDER_GROUNDING.items():
        prompts[grounding_prompt(reminder, description)] = completions
    prompts[parameter_prompt(reminder, "Create a reminder", (1,))] = ["- (title)\n- (date)"]
    prompts[locate_prompt(reminder, "title")] = ["2"]
    prompts[locate_prompt(reminder, "date")] = ["5"]
    return ScriptedBackend.from_prompts(prompts)


def calendar_app(app_id: str = APP_ID, skip_onboarding: bool = False, save_label: str = "Save") -> SimulatedApp:
    states = {
        "onboarding_1": onboarding_screen(1),
        "onboarding_2": onboarding_screen(2),
        "onboarding_3": onboarding_screen(3),
        "main": main_screen(),
        "speed_dial": speed_dial_screen(),
        "reminder": reminder_screen(save_label=save_label),
    }
    transitions = {
        ("onboarding_1", "2"): "onboarding_2",
        ("onboarding_2", "2"): "onboarding_3",
        ("onboarding_2", "3"): "main",
        ("onboarding_3", "2"): "main",
        ("main", "2"): "EXIT",
        ("main", "3"): "speed_dial",
        ("speed_dial", "0"): "main",
        ("speed_dial", "1"): "reminder",
        ("speed_dial", "2"): "main",
        ("speed_dial", "3"): "main",
        ("reminder", "0"): "main",
        ("reminder", "1"): "main",
    }
    initial = "main" if skip_onboarding else "onboarding_1"
    return SimulatedApp(app_id=app_id, states=states, initial=initial, transitions=transitions).validate()
