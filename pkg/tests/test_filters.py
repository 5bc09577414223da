from greenbriar_macros.clean import (
    action_is_backtracking,
    action_keywords,
    common_phrases,
    filter_actions,
    filter_description,
    load_word_list,
    non_content_words,
)
from greenbriar_macros.samples import TRACE_ID, calendar_trace, reminder_screen
from greenbriar_macros.trace import Action, Bounds, Element, MacroCandidate, Screen, make_action


def _candidate(actions, final=None):
    return MacroCandidate(
        description="Do something",
        trace_actions=tuple(actions),
        source=(TRACE_ID, 0),
        predicted_final_action=final,
    )


def _single_button_screen(**attrs):
    button = Element(clickable=True, bounds=Bounds(0, 0, 100, 100), **attrs)
    return Screen(index=0, root=Element(bounds=Bounds(0, 0, 1080, 1920), children=(button,)), width=1080, height=1920)


def test_word_lists():
    assert load_word_list("common_phrases") == (
        "setting", "settings", "app", "apps", "element", "elements", "text", "input", "field", "button",
        "image", "screen", "left", "right", "top", "bottom", "top-left", "top-right", "bottom-left",
        "bottom-right", "previous", "next", "close", "cancel", "tap", "press", "click", "confirm", "set",
        "enter", "navigate",
    )  # fmt: skip
    assert load_word_list("non_content_words") == (
        "is", "the", "are", "and", "else", "with", "to", "on", "in", "at", "off", "within", "without",
        "below", "above", "up",
    )  # fmt: skip
    assert action_keywords() == (
        "cancel", "go back", "back", "go_back", "prev", "previous", "navigate up", "navigate_up", "try again",
        "(id=",
    )  # fmt: skip
    assert "tap" in common_phrases()
    assert "the" in non_content_words()


def test_filter_description():
    assert not filter_description("tap on the button")
    assert filter_description("create a reminder")
    assert not filter_description("")
    assert not filter_description("Navigate to settings")
    assert not filter_description("press the top-left button")
    assert filter_description("Set the reminder date")


def test_navigate_up_action_dropped():
    screen = _single_button_screen(content_description="Navigate up", class_name="android.widget.ImageButton")
    candidate = _candidate([make_action("click", screen, (0,))])
    assert action_is_backtracking(candidate.trace_actions[0])
    assert not filter_actions(candidate)


def test_keyword_in_resource_id_or_final_action():
    screen = _single_button_screen(resource_id="com.example:id/btn_go_back")
    assert not filter_actions(_candidate([], final=make_action("click", screen, (0,))))
    cancel = make_action("click", reminder_screen(9), (0,))
    assert not filter_actions(_candidate([], final=cancel))


def test_calendar_actions_kept():
    trace = calendar_trace()
    save = make_action("click", reminder_screen(9), (1,))
    assert filter_actions(_candidate(trace.actions, final=save))


def test_vacuous_and_system_actions_kept():
    assert filter_actions(_candidate([]))
    assert filter_actions(_candidate([Action(kind="system")]))
