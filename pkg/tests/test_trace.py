import json

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from greenbriar_macros.errors import TraceFormatError
from greenbriar_macros.samples import calendar_trace
from greenbriar_macros.trace import (
    ACTION_KINDS,
    Action,
    Bounds,
    Element,
    Macro,
    Screen,
    Trace,
    TraceStep,
    iter_elements,
    load_macros,
    load_trace,
    macro_from_dict,
    macro_to_dict,
    make_action,
    parse_trace,
    save_trace,
    serialize_trace,
)


def _screen_doc(index, children):
    return {
        "index": index,
        "width": 1080,
        "height": 1920,
        "root": {"class_name": "android.widget.FrameLayout", "bounds": [0, 0, 1080, 1920], "children": children},
    }


def _leaf(text, bounds=(0, 0, 100, 100), clickable=True):
    return {"text": text, "class_name": "android.widget.Button", "bounds": list(bounds), "clickable": clickable}


def _two_step_doc():
    row = {"class_name": "android.widget.LinearLayout", "bounds": [0, 0, 1080, 200], "children": [_leaf("A"), _leaf("B")]}
    return {
        "app_id": "com.example.app",
        "trace_id": "t1",
        "steps": [
            {"screen": _screen_doc(0, [row]), "action": {"kind": "click", "target_path": [0, 1]}},
            {"screen": _screen_doc(1, [_leaf("C")]), "action": {"kind": "system"}},
        ],
    }


def test_parse_two_step_trace_resolves_target():
    trace = parse_trace(_two_step_doc())
    assert trace.app_id == "com.example.app"
    assert len(trace.steps) == 2
    first = trace.steps[0].action
    assert first.target_path == (0, 1)
    assert first.element.text == "B"
    assert first.element.children == ()
    assert trace.steps[1].action.target_path is None


def test_dangling_target_rejected():
    doc = _two_step_doc()
    doc["steps"][0]["action"]["target_path"] = [0, 7]
    with pytest.raises(TraceFormatError):
        parse_trace(doc)


def test_non_increasing_indices_rejected():
    doc = _two_step_doc()
    doc["steps"][1]["screen"]["index"] = 0
    with pytest.raises(TraceFormatError):
        parse_trace(doc)


def test_empty_steps_rejected():
    with pytest.raises(TraceFormatError):
        parse_trace({"app_id": "com.example.app", "steps": []})


def test_inverted_bounds_rejected():
    doc = _two_step_doc()
    doc["steps"][1]["screen"]["root"]["children"][0]["bounds"] = [100, 0, 50, 10]
    with pytest.raises(TraceFormatError):
        parse_trace(doc)


def test_action_invariants():
    with pytest.raises(TraceFormatError):
        Action(kind="click")
    with pytest.raises(TraceFormatError):
        Action(kind="input", target_path=(0,))
    with pytest.raises(TraceFormatError):
        Action(kind="swipe")
    assert Action(kind="system").target_path is None


def test_scroll_defaults_to_half_screen():
    screen = Screen(index=0, root=Element(bounds=Bounds(0, 0, 1080, 1920)), width=1080, height=1920)
    action = make_action("scroll", screen, ())
    assert action.scroll_amount == 960


def test_iter_elements_is_pre_order():
    root = Element(
        text="root",
        children=(
            Element(text="a", children=(Element(text="a0"), Element(text="a1"))),
            Element(text="b"),
        ),
    )
    visited = [(path, el.text) for path, el in iter_elements(root)]
    assert visited == [((), "root"), ((0,), "a"), ((0, 0), "a0"), ((0, 1), "a1"), ((1,), "b")]


def test_calendar_trace_round_trip(tmp_path):
    trace = calendar_trace()
    assert len(trace.screens) == 9
    assert [a.kind for a in trace.actions] == ["scroll", "system", "scroll", "click", "click", "click", "click", "click"]

    path = tmp_path / "calendar.json"
    save_trace(str(path), trace)
    assert load_trace(str(path)) == trace
    assert parse_trace(serialize_trace(trace)) == trace


def test_load_trace_uses_file_stem_without_trace_id(tmp_path):
    doc = _two_step_doc()
    del doc["trace_id"]
    path = tmp_path / "session-7.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    assert load_trace(str(path)).trace_id == "session-7"


def test_macro_requires_actions():
    with pytest.raises(TraceFormatError):
        Macro(description="Empty", actions=(), app_id="com.example.app")


def test_load_macros_jsonl(tmp_path):
    trace = calendar_trace()
    macro = Macro(
        description="Open reminder",
        actions=tuple(trace.actions[3:]),
        app_id=trace.app_id,
        source_traces=(trace.trace_id,),
    )
    path = tmp_path / "m.macros.jsonl"
    path.write_text(json.dumps(macro_to_dict(macro)) + "\n", encoding="utf-8")
    [loaded] = load_macros(str(path))
    assert loaded == macro


_words = st.text(alphabet="abc xyz:", max_size=8)


@st.composite
def _elements(draw, depth=0):
    children = ()
    if depth < 2:
        children = tuple(draw(st.lists(_elements(depth + 1), max_size=3)))
    left, top = draw(st.integers(0, 800)), draw(st.integers(0, 800))
    return Element(
        resource_id=draw(st.sampled_from(["", "com.example:id/save_button", "fab"])),
        text=draw(_words),
        content_description=draw(_words),
        class_name=draw(st.sampled_from(["", "android.widget.Button", "android.widget.EditText"])),
        semantic_class=draw(st.sampled_from(["", "BUTTON", "INPUT", "TEXT"])),
        bounds=Bounds(left, top, left + draw(st.integers(0, 400)), top + draw(st.integers(0, 400))),
        clickable=draw(st.booleans()),
        visible=draw(st.booleans()),
        children=children,
    )


@st.composite
def _traces(draw):
    indices = sorted(draw(st.lists(st.integers(0, 60), min_size=2, max_size=5, unique=True)))
    screens = [
        Screen(index=i, root=draw(_elements()), width=draw(st.integers(1, 2000)), height=draw(st.integers(1, 2000)))
        for i in indices
    ]
    steps = []
    for screen in screens[:-1]:
        kind = draw(st.sampled_from(ACTION_KINDS))
        path = None
        if kind != "system":
            path = draw(st.sampled_from([p for p, _ in iter_elements(screen.root)]))
        text = draw(_words) if kind == "input" else None
        steps.append(TraceStep(screen=screen, action=make_action(kind, screen, path, input_text=text)))
    final = screens[-1] if draw(st.booleans()) else None
    return Trace(app_id="com.example.app", steps=tuple(steps), final_screen=final, trace_id="t")


_SLOW = [HealthCheck.too_slow, HealthCheck.data_too_large]


@settings(max_examples=200, deadline=None, suppress_health_check=_SLOW)
@given(_traces())
def test_any_trace_round_trips(trace):
    document = json.loads(json.dumps(serialize_trace(trace)))
    assert parse_trace(document) == trace


def test_non_boolean_flags_rejected():
    doc = _two_step_doc()
    doc["steps"][0]["screen"]["root"]["children"][0]["children"][1]["clickable"] = "false"
    with pytest.raises(TraceFormatError, match="true or false"):
        parse_trace(doc)
    doc = _two_step_doc()
    doc["steps"][1]["screen"]["root"]["visible"] = 0
    with pytest.raises(TraceFormatError):
        parse_trace(doc)


def test_input_text_must_be_a_string():
    doc = _two_step_doc()
    doc["steps"][0]["action"] = {"kind": "input", "target_path": [0, 1], "input_text": 42}
    with pytest.raises(TraceFormatError):
        parse_trace(doc)


def test_macro_screen_index_must_be_an_integer():
    doc = macro_to_dict(Macro(description="Poke", actions=(Action(kind="system", screen_index=3),), app_id="a"))
    assert macro_from_dict(doc).actions[0].screen_index == 3
    doc["actions"][0]["screen_index"] = "3"
    with pytest.raises(TraceFormatError):
        macro_from_dict(doc)


def test_final_screen_index_follows_last_step():
    doc = _two_step_doc()
    doc["steps"][0]["screen"]["index"] = 10
    doc["steps"][1]["screen"]["index"] = 20
    final = _screen_doc(0, [_leaf("D")])
    del final["index"]
    doc["final_screen"] = final
    trace = parse_trace(doc)
    assert trace.final_screen.index == 21
    assert [s.index for s in trace.screens] == [10, 20, 21]
