"""Core macro-mining pipeline."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .clean import filter_actions, filter_description
from .dedup import BagOfTokensEmbedder, Embedder, group_by_similarity, sample_representatives
from .errors import ConfigError, ExtractionStepError, TraceFormatError
from .extract import ExtractionStats, attach_parameters, extract_candidates, ground_candidate, source_screen
from .graph import InteractionGraph, build_graph, optimize, reduction_from_counts
from .layout import to_html
from .llm import GenerationBackend, HttpBackendOptions, HttpCompletionBackend, ScriptedBackend
from .options import PipelineConfig
from .output import ensure_out_dir, macros_path, report_path, write_macros_jsonl, write_report
from .trace import Macro, MacroCandidate, Trace
from .utils import parallel_map, setup_logger


@dataclass
class MineResult:
    app_id: str
    macros: List[Macro]
    report: dict
    graph: InteractionGraph
    macros_path: Optional[str] = None
    report_path: Optional[str] = None


def make_backend(config: PipelineConfig) -> GenerationBackend:
    if config.backend == "scripted":
        if not config.script_path:
            raise ConfigError("The scripted backend needs script_path (--script)")
        return ScriptedBackend.load(config.script_path)
    if not config.base_url:
        raise ConfigError("The live backend needs base_url or GREENBRIAR_LLM_URL")
    return HttpCompletionBackend(
        HttpBackendOptions(
            base_url=config.base_url,
            model=config.model,
            token=config.api_token,
            top_p=config.top_p,
            temperature=config.temperature,
            qps=config.qps,
            max_retries=config.max_retries,
            timeout_sec=config.timeout_sec,
        )
    )


def _drop(candidate: MacroCandidate, reason: str) -> dict:
    return {
        "description": candidate.description,
        "trace_id": candidate.source[0],
        "screen_index": candidate.source[1],
        "reason": reason,
    }


def group_by_app(traces: Sequence[Trace]) -> Dict[str, List[Trace]]:
    apps: Dict[str, List[Trace]] = {}
    for trace in traces:
        apps.setdefault(trace.app_id, []).append(trace)
    return {app: sorted(items, key=lambda t: t.trace_id) for app, items in sorted(apps.items())}


class Miner:
    def __init__(self, backend: Optional[GenerationBackend] = None, embedder: Optional[Embedder] = None) -> None:
        self.logger = setup_logger()
        self.backend = backend
        self.embedder = embedder

    def mine(self, traces: Sequence[Trace], config: Optional[PipelineConfig] = None) -> List[MineResult]:
        """Mine every app present in ``traces``, writing outputs when ``config.out_dir`` is set."""
        config = (config or PipelineConfig()).validate()
        self.logger = setup_logger(config.quiet, config.verbose, config.log_level)
        if not traces:
            raise TraceFormatError("No traces to mine")
        seen: Dict[str, str] = {}
        for trace in traces:
            if not trace.trace_id:
                raise TraceFormatError(f"A trace of {trace.app_id} has no trace_id")
            if trace.trace_id in seen:
                raise TraceFormatError(f"Duplicate trace_id {trace.trace_id!r}")
            seen[trace.trace_id] = trace.app_id
        backend = self.backend if self.backend is not None else make_backend(config)
        results = []
        for app_id, app_traces in group_by_app(traces).items():
            result = self.mine_app(app_id, app_traces, backend, config)
            if config.out_dir:
                ensure_out_dir(config.out_dir)
                result.macros_path = macros_path(config.out_dir, app_id)
                result.report_path = report_path(config.out_dir, app_id)
                write_macros_jsonl(result.macros_path, result.macros)
                write_report(result.report_path, result.report)
            results.append(result)
        return results

    def mine_app(
        self,
        app_id: str,
        traces: Sequence[Trace],
        backend: GenerationBackend,
        config: PipelineConfig,
    ) -> MineResult:
        stats = ExtractionStats()
        dropped: List[dict] = []
        counts: Dict[str, int] = {}
        by_id = {t.trace_id: t for t in traces}

        candidates: List[MacroCandidate] = []
        for trace in traces:
            candidates.extend(
                extract_candidates(trace, backend, config.max_completions, config.workers, stats)
            )
        counts["candidates"] = len(candidates)
        self.logger.info("%s: %d candidates from %d traces", app_id, len(candidates), len(traces))

        kept = []
        for candidate in candidates:
            if filter_description(candidate.description):
                kept.append(candidate)
            else:
                dropped.append(_drop(candidate, "generic description"))
        counts["after_description_filter"] = len(kept)

        embedder = self.embedder or BagOfTokensEmbedder(config.embedding_dim)
        groups = group_by_similarity([c.description for c in kept], embedder, config.dedup_threshold)
        chosen = sample_representatives(groups, config.seed)
        sampled = []
        for pick, (_, members) in zip(chosen, groups.groups):
            member_traces = tuple(sorted({kept[m].source[0] for m in members}))
            sampled.append(replace(kept[pick], group_traces=member_traces))
        counts["groups"] = len(sampled)
        self.logger.info("%s: %d description groups", app_id, len(sampled))

        def _ground(candidate: MacroCandidate) -> Union[Tuple[MacroCandidate, object], ExtractionStepError]:
            screen_html = to_html(source_screen(by_id[candidate.source[0]], candidate))
            try:
                return ground_candidate(candidate, screen_html, backend, config.max_completions)
            except ExtractionStepError as exc:
                return exc

        grounded = []
        for candidate, outcome in zip(sampled, parallel_map(_ground, sampled, config.workers)):
            stats.grounding_attempts += 1
            if isinstance(outcome, ExtractionStepError):
                stats.grounding_failures += 1
                self.logger.debug("Grounding failed for %r: %s", candidate.description, outcome)
                dropped.append(_drop(candidate, "unusable grounding completions"))
                continue
            candidate, grounding = outcome
            if grounding.is_terminal:
                stats.terminal += 1
            elif len(grounding.element_ids) > 1:
                stats.grounding_ids_ignored += len(grounding.element_ids) - 1
                self.logger.debug(
                    "Grounding for %r named ids %s; clicking %d",
                    candidate.description,
                    list(grounding.element_ids),
                    grounding.element_ids[0],
                )
            if not filter_actions(candidate):
                dropped.append(_drop(candidate, "backtracking action"))
                continue
            grounded.append((candidate, grounding))
        counts["after_action_filter"] = len(grounded)

        def _parameters(item) -> Tuple[MacroCandidate, int]:
            candidate, grounding = item
            local = ExtractionStats()
            screen_html = to_html(source_screen(by_id[candidate.source[0]], candidate))
            candidate = attach_parameters(candidate, grounding, screen_html, backend, config.max_completions, local)
            return candidate, local.parameters_dropped

        finished = []
        for candidate, lost in parallel_map(_parameters, grounded, config.workers):
            stats.parameters_dropped += lost
            finished.append(candidate)

        graph = build_graph(traces, app_id)
        optimized = optimize(finished, graph)
        dropped.extend(optimized.dropped)
        counts["macros"] = len(optimized.macros)
        reduction = reduction_from_counts(optimized.pre_counts, optimized.post_counts)
        self.logger.info("%s: %d macros", app_id, len(optimized.macros))
        if reduction is not None:
            self.logger.info(
                "%s: mean actions %.2f -> %.2f (%.1f%% shorter)",
                app_id,
                reduction.mean_pre,
                reduction.mean_post,
                reduction.percent_reduction,
            )

        report = {
            "app_id": app_id,
            "traces": [t.trace_id for t in traces],
            "counts": counts,
            "extraction": stats.as_dict(),
            "graph": {"nodes": len(graph.nodes), "edges": len(graph.edges())},
            "reduction": None
            if reduction is None
            else {
                "mean_pre": reduction.mean_pre,
                "mean_post": reduction.mean_post,
                "percent_reduction": reduction.percent_reduction,
            },
            "action_counts": [
                {"description": m.description, "pre": pre, "post": post}
                for m, pre, post in zip(optimized.macros, optimized.pre_counts, optimized.post_counts)
            ],
            "dropped": dropped,
            "config": {
                "backend": config.backend,
                "seed": config.seed,
                "dedup_threshold": config.dedup_threshold,
                "max_completions": config.max_completions,
                "embedding_dim": config.embedding_dim,
            },
        }
        return MineResult(app_id=app_id, macros=optimized.macros, report=report, graph=graph)


def aggregate_reports(reports: Sequence[dict]) -> dict:
    pre: List[int] = []
    post: List[int] = []
    apps = []
    for report in reports:
        entries = report.get("action_counts", [])
        pre.extend(int(e["pre"]) for e in entries)
        post.extend(int(e["post"]) for e in entries)
        apps.append({"app_id": report.get("app_id"), "macros": len(entries)})
    reduction = reduction_from_counts(pre, post)
    return {
        "apps": apps,
        "macros": len(pre),
        "reduction": None
        if reduction is None
        else {
            "mean_pre": reduction.mean_pre,
            "mean_post": reduction.mean_post,
            "percent_reduction": reduction.percent_reduction,
        },
    }
