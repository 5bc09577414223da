"""Output writers for macro, report and graph artifacts."""

from __future__ import annotations

import os
from typing import Iterable

from .graph import InteractionGraph, to_dot
from .trace import Macro, Trace, macro_to_dict, save_trace
from .utils import ensure_dir, json_write, jsonl_write


def macros_path(out_dir: str, app_id: str) -> str:
    return os.path.join(out_dir, f"{app_id}.macros.jsonl")


def report_path(out_dir: str, app_id: str) -> str:
    return os.path.join(out_dir, f"{app_id}.report.json")


def graph_path(out_dir: str, app_id: str) -> str:
    return os.path.join(out_dir, f"{app_id}.graph.dot")


def fixture_path(out_dir: str, app_id: str, number: int) -> str:
    return os.path.join(out_dir, f"{app_id}-trace-{number:04d}.json")


def write_macros_jsonl(path: str, macros: Iterable[Macro]) -> None:
    jsonl_write(path, (macro_to_dict(m) for m in macros))


def write_report(path: str, report: dict) -> None:
    json_write(path, report)


def write_graph_dot(path: str, graph: InteractionGraph) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(to_dot(graph))


def write_trace(path: str, trace: Trace) -> None:
    save_trace(path, trace)


def ensure_out_dir(out_dir: str) -> None:
    ensure_dir(out_dir)
