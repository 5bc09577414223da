import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from greenbriar_macros.errors import CrawlError, TraceFormatError
from greenbriar_macros.replay import (
    batch_replay,
    element_tokens,
    jaccard,
    match_element,
    replay,
    report_to_dict,
)
from greenbriar_macros.samples import (
    APP_ID,
    calendar_app,
    calendar_trace,
    main_screen,
    reminder_screen,
)
from greenbriar_macros.simulator import SimulatedApp, app_to_dict, load_app, load_app_file, random_crawl
from greenbriar_macros.trace import Action, Bounds, Element, Macro, Parameter, Screen, make_action


def _calendar_macro(app_id=APP_ID, parameters=()):
    a = calendar_trace().actions
    save = make_action("click", reminder_screen(9), (1,))
    return Macro(
        description="Create a reminder",
        actions=(a[3], a[5], a[6], a[7], save),
        app_id=app_id,
        parameters=parameters,
    )


def _one_button_app(transitions):
    button = Element(text="Again", class_name="android.widget.Button", clickable=True, bounds=Bounds(0, 0, 100, 100))
    screen = Screen(index=0, root=Element(bounds=Bounds(0, 0, 100, 100), children=(button,)), width=100, height=100)
    return SimulatedApp(app_id="loop", states={"only": screen}, initial="only", transitions=transitions).validate()


def test_jaccard():
    assert jaccard({"save", "button", "top"}, {"save", "button", "bottom"}) == 0.5
    assert jaccard(set(), set()) == 1.0
    assert jaccard({"a"}, set()) == 0.0


def test_element_tokens():
    fab = Element(
        resource_id="com.example:id/fab_create",
        content_description="Create new event",
        class_name="android.widget.ImageButton",
    )
    assert element_tokens(fab) == {"fab", "create", "new", "event", "imagebutton"}
    assert element_tokens(Element()) == frozenset()


def test_match_element_fuzzy_and_earliest():
    recorded = Element(text="Save", class_name="android.widget.Button")
    changed = Element(text="Save changes", class_name="android.widget.Button")
    screen = Screen(index=0, root=Element(children=(Element(text="Cancel"), changed, changed)), width=1, height=1)
    match = match_element(screen, recorded)
    assert match.path == (1,)
    assert match.similarity == pytest.approx(2 / 3)
    assert match_element(screen, Element(text="Delete everything")) is None
    with pytest.raises(ValueError):
        match_element(screen, recorded, threshold=0.0)


def test_replay_calendar_macro():
    report = replay(_calendar_macro(), calendar_app().device())
    assert report.success
    assert report.steps_executed == 5
    assert report.skipped == []
    assert report.remaining == 0
    assert all(s.similarity == 1.0 for s in report.steps)


def test_replay_skips_onboarding_steps():
    report = replay(_calendar_macro(), calendar_app(skip_onboarding=True).device())
    assert report.success
    assert report.skipped == [0, 1]
    assert report.steps_executed == 3
    doc = report_to_dict(report)
    assert doc["skipped"] == [1, 2]
    assert doc["steps"][0]["step"] == 3
    assert doc["steps"][0]["skipped_before"] == [1, 2]


def test_replay_stuck_when_final_button_renamed():
    report = replay(_calendar_macro(), calendar_app(save_label="Done").device())
    assert not report.success
    assert report.reason == "stuck at step 5 of 5"
    assert report.steps_executed == 4
    assert report.remaining == 1


def test_replay_enters_parameters_before_final_step():
    form = reminder_screen(9)
    parameters = (
        Parameter("title", form.root.children[2].descriptor(), element_id=2, target_path=(2,)),
        Parameter("date", form.root.children[5].descriptor(), element_id=5, target_path=(5,)),
    )
    device = calendar_app().device()
    report = replay(_calendar_macro(parameters=parameters), device, parameter_values={"title": "Buy milk"})
    assert report.success
    assert device.inputs == [("reminder", (2,), "Buy milk")]
    assert [p.description for p in report.parameter_entries] == ["title"]
    assert device.state == "main"


def test_replay_reports_unperformable_step():
    macro = Macro(description="Poke", actions=(Action(kind="click", target_path=(9,)),), app_id=APP_ID)
    report = replay(macro, calendar_app().device())
    assert report.reason == "step 1 could not be performed"


def test_replay_device_error_after_exit():
    main = main_screen()
    help_click = make_action("click", main, (2,))
    fab = make_action("click", main, (3,))
    macro = Macro(description="Leave", actions=(help_click, fab), app_id=APP_ID)
    report = replay(macro, calendar_app(skip_onboarding=True).device())
    assert not report.success
    assert report.reason.startswith("device error:")


def test_batch_replay_success_rate():
    apps = {f"app-{i}": calendar_app(app_id=f"app-{i}", save_label="Done" if i < 3 else "Save") for i in range(10)}
    macros = [_calendar_macro(app_id=app_id) for app_id in apps]
    result = batch_replay(macros, lambda m: apps[m.app_id].device(), workers=4)
    assert result.success_rate == pytest.approx(0.7)
    assert [r.success for r in result.reports] == [False] * 3 + [True] * 7
    assert batch_replay([], lambda m: None).success_rate is None


def test_random_crawl_self_loop_and_exit():
    looping = random_crawl(_one_button_app({}), max_steps=30, seed=5)
    assert len(looping.steps) == 30
    assert looping.final_screen is not None
    exiting = random_crawl(_one_button_app({("only", "0"): "EXIT"}), max_steps=30, seed=5)
    assert len(exiting.steps) == 1
    assert exiting.final_screen is None


def test_random_crawl_is_deterministic():
    app = calendar_app()
    trace = random_crawl(app, seed=7)
    assert trace == random_crawl(app, seed=7)
    assert [s.screen.index for s in trace.steps] == list(range(len(trace.steps)))


def test_random_crawl_rejects_bad_caps():
    with pytest.raises(CrawlError):
        random_crawl(calendar_app(), max_steps=0)


def test_app_spec_round_trip(tmp_path):
    doc = app_to_dict(calendar_app())
    path = tmp_path / "calendar.app.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    loaded = load_app_file(str(path))
    assert loaded.initial == "onboarding_1"
    assert app_to_dict(loaded) == json.loads(json.dumps(doc))


def test_app_spec_validation():
    doc = app_to_dict(calendar_app())
    with pytest.raises(TraceFormatError):
        load_app({**doc, "initial": "nowhere"})
    with pytest.raises(TraceFormatError):
        load_app({k: v for k, v in doc.items() if k != "states"})
    bad_key = {**doc, "transitions": [{"from": "main", "element_key": "9", "to": "main"}]}
    with pytest.raises(TraceFormatError):
        load_app(bad_key)
    reserved = {**doc, "states": {**doc["states"], "EXIT": doc["states"]["main"]}}
    with pytest.raises(TraceFormatError):
        load_app(reserved)


_vocab = st.sampled_from(["save", "button", "title", "date", "reminder", "next", "done"])
_token_sets = st.sets(_vocab, max_size=5)


@given(_token_sets, _token_sets)
def test_jaccard_is_symmetric_and_bounded(a, b):
    assert jaccard(a, b) == jaccard(b, a)
    assert 0.0 <= jaccard(a, b) <= 1.0
    assert jaccard(a, a) == 1.0


@given(
    st.lists(st.lists(_vocab, max_size=3), min_size=1, max_size=6),
    st.lists(_vocab, max_size=3),
    st.floats(min_value=0.01, max_value=1.0),
    st.floats(min_value=0.01, max_value=1.0),
)
def test_raising_the_threshold_never_creates_a_match(labels, wanted, t1, t2):
    low, high = sorted((t1, t2))
    children = tuple(Element(text=" ".join(words), class_name="android.widget.Button") for words in labels)
    screen = Screen(index=0, root=Element(class_name="android.widget.FrameLayout", children=children), width=1, height=1)
    target = Element(text=" ".join(wanted), class_name="android.widget.Button")
    strict = match_element(screen, target, threshold=high)
    loose = match_element(screen, target, threshold=low)
    if strict is not None:
        assert loose is not None
        assert loose.similarity >= strict.similarity >= high


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.booleans(), st.booleans(), st.data())
def test_replay_accounts_for_every_step(seed, skip_onboarding, rename_save, data):
    trace = random_crawl(calendar_app(), max_steps=12, seed=seed)
    actions = trace.actions
    start = data.draw(st.integers(0, len(actions) - 1))
    stop = data.draw(st.integers(start + 1, len(actions)))
    macro = Macro(description="Walk", actions=tuple(actions[start:stop]), app_id=APP_ID)
    device = calendar_app(skip_onboarding=skip_onboarding, save_label="Done" if rename_save else "Save").device()
    report = replay(macro, device)

    executed = [s.index for s in report.steps]
    touched = sorted(executed + report.skipped)
    assert touched == list(range(len(touched)))
    assert report.steps_executed + len(report.skipped) + report.remaining == len(macro.actions)
    assert report.remaining >= 0
    assert report.success == (report.remaining == 0)
    for step in report.steps:
        assert all(k < step.index for k in step.skipped)
