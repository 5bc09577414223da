"""Command line interface for Greenbriar Macros."""

from __future__ import annotations

import argparse
import os
from typing import Dict, List, Optional

from . import samples
from .core import Miner, aggregate_reports
from .errors import BackendError, ConfigError, DeviceError, EvaluationError, MacroMinerError
from .evaluate import (
    EvalPair,
    baseline_element_text,
    dataset_eval,
    load_eval_pairs,
    load_ground_truth,
    pairs_from_macros,
    random_trace_resampler,
)
from .graph import build_graph
from .options import PipelineConfig, load_config
from .output import ensure_out_dir, fixture_path, graph_path, write_graph_dot, write_trace
from .replay import batch_replay, report_to_dict
from .simulator import app_to_dict, load_app_file, random_crawl
from .trace import Trace, load_macros, load_trace
from .utils import derive_seed, json_read, json_write, setup_logger

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_BACKEND = 3


# non-trace JSON written next to traces by this tool
_NOT_TRACES = (".app.json", ".report.json", ".script.json", ".truth.json", ".replay.json", "eval.json", "stats.json")


def _collect_files(inputs: List[str], suffix: str, recursive: bool = False, exclude: tuple = ()) -> List[str]:
    files: List[str] = []
    for input_path in inputs:
        if os.path.isfile(input_path):
            files.append(input_path)
            continue
        if not os.path.isdir(input_path):
            continue
        if recursive:
            found = [os.path.join(root, n) for root, _, names in os.walk(input_path) for n in names]
        else:
            found = [os.path.join(input_path, n) for n in os.listdir(input_path)]
        files.extend(p for p in found if p.lower().endswith(suffix) and not p.endswith(exclude))
    return sorted(files)


def _trace_files(inputs: List[str], recursive: bool) -> List[str]:
    return _collect_files(inputs, ".json", recursive, exclude=_NOT_TRACES)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="Root random seed")
    parser.add_argument("--out", dest="out_dir", default=None, help="Output directory")
    parser.add_argument("--workers", type=int, default=None, help="Worker threads")
    parser.add_argument("--quiet", action="store_true", default=None, help="Reduce logging")
    parser.add_argument("--verbose", action="store_true", default=None, help="Verbose logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="greenbriar-macros")
    sub = parser.add_subparsers(dest="command", required=True)

    mine = sub.add_parser("mine", help="Mine macros from trace files")
    mine.add_argument("inputs", nargs="+", help="Trace files or directories")
    mine.add_argument("--recursive", action="store_true", help="Recurse into directories")
    mine.add_argument("--backend", default=None, help="Generation backend: scripted|live")
    mine.add_argument("--script", dest="script_path", default=None, help="Scripted completions file")
    mine.add_argument("--base-url", default=None, help="Live completion endpoint")
    mine.add_argument("--model", default=None)
    mine.add_argument("--threshold", dest="dedup_threshold", type=float, default=None, help="Grouping threshold")
    mine.add_argument("--max-completions", type=int, default=None)
    _add_common(mine)

    rep = sub.add_parser("replay", help="Replay macros on a simulated app")
    rep.add_argument("macros", nargs="+", help="Macro files (.jsonl or .json)")
    rep.add_argument("--app", required=True, help="Simulated app spec (JSON)")
    rep.add_argument("--threshold", dest="fuzzy_threshold", type=float, default=None, help="Jaccard threshold")
    rep.add_argument("--param", action="append", default=[], help="Parameter value as name=value")
    _add_common(rep)

    ev = sub.add_parser("eval", help="Score mined descriptions against ground truth")
    ev.add_argument("--pairs", default=None, help="Eval pairs (JSON or JSONL)")
    ev.add_argument("--macros", nargs="*", default=[], help="Mined macro files")
    ev.add_argument("--ground-truth", default=None, help="trace_id -> description (JSON)")
    ev.add_argument("--traces", nargs="*", default=[], help="Trace files (element-text baseline)")
    ev.add_argument("--baseline", choices=("none", "element-text", "random-trace"), default="none")
    ev.add_argument("--repeats", type=int, default=1)
    _add_common(ev)

    st = sub.add_parser("stats", help="Action-count reduction over mining reports")
    st.add_argument("reports", nargs="+", help="Mining report files or directories")
    _add_common(st)

    gr = sub.add_parser("export-graph", help="Write the interaction graph of each app as DOT")
    gr.add_argument("inputs", nargs="+", help="Trace files or directories")
    gr.add_argument("--recursive", action="store_true")
    _add_common(gr)

    fx = sub.add_parser("fixtures", help="Generate crawl traces from a simulated app")
    fx.add_argument("app", nargs="?", default=None, help="Simulated app spec (JSON)")
    fx.add_argument("--sample", choices=("calendar",), default=None, help="Write a bundled demo app instead")
    fx.add_argument("-n", "--traces", dest="n_traces", type=int, default=1)
    fx.add_argument("--max-steps", type=int, default=None)
    _add_common(fx)
    return parser


def _config(args: argparse.Namespace) -> PipelineConfig:
    overrides = {
        key: getattr(args, key, None)
        for key in (
            "seed",
            "out_dir",
            "workers",
            "quiet",
            "verbose",
            "backend",
            "script_path",
            "base_url",
            "model",
            "dedup_threshold",
            "fuzzy_threshold",
            "max_completions",
            "max_steps",
        )
    }
    return load_config(args.config, **overrides).validate()


def _load_traces(paths: List[str]) -> List[Trace]:
    return [load_trace(p) for p in paths]


def cmd_mine(args: argparse.Namespace, config: PipelineConfig) -> int:
    logger = setup_logger(config.quiet, config.verbose, config.log_level)
    paths = _trace_files(args.inputs, args.recursive)
    if not paths:
        logger.error("No trace files found in %s", ", ".join(args.inputs))
        return EXIT_INPUT
    results = Miner().mine(_load_traces(paths), config)
    for result in results:
        logger.info("%s: wrote %d macros to %s", result.app_id, len(result.macros), result.macros_path)
    return EXIT_OK


def _parameter_values(raw: List[str]) -> Dict[str, str]:
    values = {}
    for item in raw:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise ConfigError(f"--param expects name=value, got {item!r}")
        values[name] = value
    return values


def cmd_replay(args: argparse.Namespace, config: PipelineConfig) -> int:
    logger = setup_logger(config.quiet, config.verbose, config.log_level)
    app = load_app_file(args.app)
    macros = [m for path in _collect_files(args.macros, ".jsonl") for m in load_macros(path)]
    if not macros:
        logger.error("No macros found in %s", ", ".join(args.macros))
        return EXIT_INPUT
    values = _parameter_values(args.param)
    result = batch_replay(
        macros, lambda _: app.device(), config.fuzzy_threshold, values or None, config.workers
    )
    for report in result.reports:
        if not report.success:
            logger.warning("%s: %s", report.description, report.reason)
    logger.info("Replayed %d macros, success rate %.3f", len(result.reports), result.success_rate)
    ensure_out_dir(config.out_dir)
    json_write(
        os.path.join(config.out_dir, f"{app.app_id}.replay.json"),
        {
            "app_id": app.app_id,
            "threshold": config.fuzzy_threshold,
            "success_rate": result.success_rate,
            "reports": [report_to_dict(r) for r in result.reports],
        },
    )
    return EXIT_OK


def _eval_pairs(args: argparse.Namespace) -> List[EvalPair]:
    if args.pairs:
        pairs = load_eval_pairs(args.pairs)
    elif args.ground_truth:
        truth = load_ground_truth(args.ground_truth)
        macros = [m for path in args.macros for m in load_macros(path)]
        pairs = pairs_from_macros(macros, truth)
    else:
        raise EvaluationError("eval needs --pairs or --ground-truth")
    if args.baseline == "element-text":
        traces = {t.trace_id: t for t in _load_traces(_trace_files(args.traces, False))}
        missing = [p.trace_id for p in pairs if p.trace_id not in traces]
        if missing:
            raise EvaluationError(f"No trace file for {', '.join(missing)}")
        pairs = [
            EvalPair(p.ground_truth, tuple(baseline_element_text(traces[p.trace_id])), p.trace_id) for p in pairs
        ]
    return pairs


def cmd_eval(args: argparse.Namespace, config: PipelineConfig) -> int:
    logger = setup_logger(config.quiet, config.verbose, config.log_level)
    pairs = _eval_pairs(args)
    resample = random_trace_resampler(config.seed) if args.baseline == "random-trace" else None
    result = dataset_eval(pairs, args.repeats, resample)
    logger.info(
        "ROUGE-L %.3f (std %.3f), METEOR %.3f (std %.3f) over %d traces",
        result.mean_rouge_l,
        result.std_rouge_l,
        result.mean_meteor,
        result.std_meteor,
        len(pairs),
    )
    report = {"baseline": args.baseline, "seed": config.seed, "meteor_variant": "exact match only"}
    report.update(result.as_dict())
    ensure_out_dir(config.out_dir)
    json_write(os.path.join(config.out_dir, "eval.json"), report)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace, config: PipelineConfig) -> int:
    logger = setup_logger(config.quiet, config.verbose, config.log_level)
    paths = _collect_files(args.reports, ".report.json")
    if not paths:
        logger.error("No mining reports found in %s", ", ".join(args.reports))
        return EXIT_INPUT
    try:
        reports = [json_read(p) for p in paths]
    except (OSError, ValueError) as exc:
        logger.error("Cannot read report: %s", exc)
        return EXIT_INPUT
    summary = aggregate_reports(reports)
    reduction = summary["reduction"]
    if reduction is not None:
        logger.info(
            "%d macros: mean actions %.2f -> %.2f (%.1f%% shorter)",
            summary["macros"],
            reduction["mean_pre"],
            reduction["mean_post"],
            reduction["percent_reduction"],
        )
    ensure_out_dir(config.out_dir)
    json_write(os.path.join(config.out_dir, "stats.json"), summary)
    return EXIT_OK


def cmd_export_graph(args: argparse.Namespace, config: PipelineConfig) -> int:
    logger = setup_logger(config.quiet, config.verbose, config.log_level)
    paths = _trace_files(args.inputs, args.recursive)
    if not paths:
        logger.error("No trace files found in %s", ", ".join(args.inputs))
        return EXIT_INPUT
    by_app: Dict[str, List[Trace]] = {}
    for trace in _load_traces(paths):
        by_app.setdefault(trace.app_id, []).append(trace)
    ensure_out_dir(config.out_dir)
    for app_id, traces in sorted(by_app.items()):
        graph = build_graph(sorted(traces, key=lambda t: t.trace_id), app_id)
        write_graph_dot(graph_path(config.out_dir, app_id), graph)
        logger.info("%s: %d nodes, %d edges", app_id, len(graph.nodes), len(graph.edges()))
    return EXIT_OK


def cmd_fixtures(args: argparse.Namespace, config: PipelineConfig) -> int:
    logger = setup_logger(config.quiet, config.verbose, config.log_level)
    ensure_out_dir(config.out_dir)
    if args.sample == "calendar":
        app = samples.calendar_app()
        trace = samples.calendar_trace()
        json_write(os.path.join(config.out_dir, f"{app.app_id}.app.json"), app_to_dict(app))
        write_trace(os.path.join(config.out_dir, f"{trace.trace_id}.json"), trace)
        samples.calendar_script(trace).save(os.path.join(config.out_dir, "calendar.script.json"))
        json_write(os.path.join(config.out_dir, "calendar.truth.json"), samples.GROUND_TRUTH)
        logger.info("Wrote the calendar demo to %s", config.out_dir)
        return EXIT_OK
    if not args.app:
        logger.error("fixtures needs an app spec or --sample")
        return EXIT_INPUT
    app = load_app_file(args.app)
    for number in range(args.n_traces):
        seed = derive_seed(config.seed, number)
        trace_id = f"{app.app_id}-trace-{number:04d}"
        trace = random_crawl(app, config.max_steps, seed, trace_id=trace_id)
        write_trace(fixture_path(config.out_dir, app.app_id, number), trace)
    logger.info("Wrote %d traces of %s to %s", args.n_traces, app.app_id, config.out_dir)
    return EXIT_OK


COMMANDS = {
    "mine": cmd_mine,
    "replay": cmd_replay,
    "eval": cmd_eval,
    "stats": cmd_stats,
    "export-graph": cmd_export_graph,
    "fixtures": cmd_fixtures,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logger = setup_logger(bool(args.quiet), bool(args.verbose))
    try:
        config = _config(args)
        return COMMANDS[args.command](args, config)
    except (BackendError, DeviceError) as exc:
        logger.error("Backend failure: %s", exc)
        return EXIT_BACKEND
    except MacroMinerError as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    except Exception as exc:
        logger.exception("Unexpected failure: %s", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
