import os

from greenbriar_macros import Miner, PipelineConfig, load_macros
from greenbriar_macros.extract import grounding_prompt, parameter_prompt
from greenbriar_macros.layout import to_html
from greenbriar_macros.samples import APP_ID, TRACE_ID, calendar_script, calendar_trace, reminder_screen
from greenbriar_macros.trace import make_action


def _mine(out_dir, **opts):
    miner = Miner(backend=calendar_script())
    [result] = miner.mine([calendar_trace()], PipelineConfig(out_dir=str(out_dir), quiet=True, **opts))
    return result


def _read_bytes(path):
    with open(path, "rb") as f:
        return f.read()


def test_smoke_calendar_reminder(tmp_path):
    result = _mine(tmp_path / "out")

    assert os.path.exists(result.macros_path)
    assert os.path.exists(result.report_path)
    assert result.app_id == APP_ID

    [macro] = result.macros
    a = calendar_trace().actions
    save = make_action("click", reminder_screen(9), (1,))
    assert macro.description == "Create a reminder"
    assert macro.actions == (a[3], a[5], a[6], a[7], save)
    assert [(p.description, p.element_id, p.target_path) for p in macro.parameters] == [
        ("title", 2, (2,)),
        ("date", 5, (5,)),
    ]
    assert macro.source_traces == (TRACE_ID,)
    assert load_macros(result.macros_path) == [macro]


def test_smoke_report(tmp_path):
    report = _mine(tmp_path / "out").report
    assert report["counts"]["macros"] == 1
    assert report["counts"]["after_action_filter"] == 1
    assert report["extraction"]["screens_total"] == 9
    assert report["extraction"]["grounding_failures"] == 2
    assert report["extraction"]["grounding_ids_ignored"] == 0
    assert report["action_counts"] == [{"description": "Create a reminder", "pre": 9, "post": 5}]
    reasons = {d["description"]: d["reason"] for d in report["dropped"]}
    assert reasons["Set the reminder time"] == "unusable grounding completions"
    assert reasons["Set the reminder date"] == "backtracking action"
    assert reasons["Edit the reminder title"] == "backtracking action"


def test_smoke_reruns_are_byte_identical(tmp_path):
    outputs = [_mine(tmp_path / f"run{i}", workers=1 + i) for i in range(3)]
    for result in outputs[1:]:
        assert _read_bytes(result.macros_path) == _read_bytes(outputs[0].macros_path)
        assert _read_bytes(result.report_path) == _read_bytes(outputs[0].report_path)


def test_smoke_counts_ignored_grounding_ids(tmp_path):
    reminder = to_html(reminder_screen(9))
    backend = calendar_script()
    backend.add(grounding_prompt(reminder, "Create a reminder"), ["1, 6"])
    backend.add(parameter_prompt(reminder, "Create a reminder", (1, 6)), ["- (title)\n- (date)"])
    [result] = Miner(backend=backend).mine([calendar_trace()], PipelineConfig(out_dir=str(tmp_path), quiet=True))
    assert result.report["extraction"]["grounding_ids_ignored"] == 1
    [macro] = result.macros
    assert macro.actions[-1] == make_action("click", reminder_screen(9), (1,))
