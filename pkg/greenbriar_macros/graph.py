"""Per-app interaction graphs: actions as nodes, screens as edges."""

from __future__ import annotations

import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .trace import Action, ElementPath, Macro, MacroCandidate, Screen, Trace, find_element, iter_elements

logger = logging.getLogger(__name__)

_SEP = "|"
ROOT_CLASS = "<root>"

# sample_action preference: performed actions first, then the earliest sighting
_PERFORMED = 0
_SIGHTED = 1


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace(_SEP, "\\" + _SEP)


@dataclass(frozen=True)
class NodeId:
    resource_id: str
    adopted_text: str
    adopted_content_description: str
    class_name: str

    @property
    def canonical(self) -> str:
        return _SEP.join(
            _escape(v)
            for v in (self.resource_id, self.adopted_text, self.adopted_content_description, self.class_name)
        )


ROOT_ID = NodeId("", "", "", ROOT_CLASS)


@dataclass
class GraphNode:
    id: NodeId
    sample_action: Optional[Action] = None
    out_edges: Set[NodeId] = field(default_factory=set)
    sample_key: Tuple = ()


@dataclass
class InteractionGraph:
    app_id: str
    root: NodeId = ROOT_ID
    nodes: Dict[NodeId, GraphNode] = field(default_factory=dict)
    # (trace_id, step index) of every performed targeted action -> its node
    action_nodes: Dict[Tuple[str, int], NodeId] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.nodes.setdefault(self.root, GraphNode(id=self.root))

    def edges(self) -> Set[Tuple[NodeId, NodeId]]:
        return {(n.id, dst) for n in self.nodes.values() for dst in n.out_edges}

    def successors(self, node_id: NodeId) -> List[NodeId]:
        return sorted(self.nodes[node_id].out_edges, key=lambda n: n.canonical)

    def add_edge(self, src: NodeId, dst: NodeId) -> None:
        self.nodes[src].out_edges.add(dst)

    def observe(self, node_id: NodeId, action: Action, key: Tuple) -> None:
        node = self.nodes.get(node_id)
        if node is None:
            node = self.nodes[node_id] = GraphNode(id=node_id)
        if node.sample_action is None or key < node.sample_key:
            node.sample_action = action
            node.sample_key = key


@dataclass(frozen=True)
class ReductionStats:
    mean_pre: float
    mean_post: float
    percent_reduction: float


@dataclass
class OptimizationResult:
    macros: List[Macro]
    dropped: List[dict]
    pre_counts: List[int]
    post_counts: List[int]


def node_identity(screen: Screen, path: Sequence[int]) -> NodeId:
    """Composite identity of the element at ``path``, adopting nearby text when it has none."""
    path = tuple(path)
    element = find_element(screen.root, path)
    if element is None:
        raise KeyError(f"No element at {list(path)} on screen {screen.index}")
    rid, cls = element.resource_id, element.class_name
    if element.text or element.content_description:
        return NodeId(rid, element.text, element.content_description, cls)

    texts: List[str] = []
    descs: List[str] = []
    for sub_path, descendant in iter_elements(element):
        if not sub_path:
            continue
        if descendant.text:
            texts.append(descendant.text)
        if descendant.content_description:
            descs.append(descendant.content_description)
    if texts or descs:
        return NodeId(rid, " ".join(texts), " ".join(descs), cls)

    for depth in range(len(path) - 1, -1, -1):
        ancestor = find_element(screen.root, path[:depth])
        if ancestor.text or ancestor.content_description:
            return NodeId(rid, ancestor.text, ancestor.content_description, cls)
    return NodeId(rid, "", "", cls)


def _on_screen(screen: Screen, path: ElementPath) -> bool:
    bounds = find_element(screen.root, path).bounds
    return bounds.left <= screen.width and bounds.right >= 0 and bounds.top <= screen.height and bounds.bottom >= 0


def _connect_screen(graph: InteractionGraph, previous: NodeId, screen: Screen, trace_id: str) -> None:
    for path, element in iter_elements(screen.root):
        if not element.actionable or not _on_screen(screen, path):
            continue
        node_id = node_identity(screen, path)
        click = Action(kind="click", target_path=path, screen_index=screen.index, element=element.descriptor())
        graph.observe(node_id, click, (_SIGHTED, trace_id, screen.index, path))
        graph.add_edge(previous, node_id)


def trace_graph(trace: Trace) -> InteractionGraph:
    graph = InteractionGraph(app_id=trace.app_id)
    previous = graph.root
    for step_index, step in enumerate(trace.steps):
        _connect_screen(graph, previous, step.screen, trace.trace_id)
        action = step.action
        if action.target_path is None:
            continue
        node_id = node_identity(step.screen, action.target_path)
        graph.observe(node_id, action, (_PERFORMED, trace.trace_id, step.screen.index, action.target_path))
        graph.add_edge(previous, node_id)
        graph.action_nodes[(trace.trace_id, step_index)] = node_id
        previous = node_id
    if trace.final_screen is not None:
        _connect_screen(graph, previous, trace.final_screen, trace.trace_id)
    return graph


def merge_graphs(a: InteractionGraph, b: InteractionGraph) -> InteractionGraph:
    if a.app_id != b.app_id:
        raise ValueError(f"Cannot merge graphs of {a.app_id!r} and {b.app_id!r}")
    merged = InteractionGraph(app_id=a.app_id)
    for source in (a, b):
        for node in source.nodes.values():
            if node.sample_action is not None:
                merged.observe(node.id, node.sample_action, node.sample_key)
            else:
                merged.nodes.setdefault(node.id, GraphNode(id=node.id))
        for node in source.nodes.values():
            merged.nodes[node.id].out_edges.update(node.out_edges)
        merged.action_nodes.update(source.action_nodes)
    return merged


def build_graph(traces: Sequence[Trace], app_id: Optional[str] = None) -> InteractionGraph:
    app_ids = {t.app_id for t in traces}
    if len(app_ids) > 1:
        raise ValueError(f"Traces span several apps: {', '.join(sorted(app_ids))}")
    app = app_ids.pop() if app_ids else (app_id or "")
    graph = reduce(merge_graphs, (trace_graph(t) for t in traces), InteractionGraph(app_id=app))
    logger.debug("Graph for %s: %d nodes, %d edges", app, len(graph.nodes), len(graph.edges()))
    return graph


class PathFinder:
    """BFS distances from the root, reused for many targets."""

    def __init__(self, graph: InteractionGraph):
        self.graph = graph
        self.dist: Dict[NodeId, int] = {graph.root: 0}
        self.preds: Dict[NodeId, List[NodeId]] = defaultdict(list)
        queue = deque([graph.root])
        while queue:
            node = queue.popleft()
            for succ in graph.successors(node):
                self.preds[succ].append(node)
                if succ not in self.dist:
                    self.dist[succ] = self.dist[node] + 1
                    queue.append(succ)

    def node_path(self, target: NodeId) -> Optional[List[NodeId]]:
        """Nodes root..target along a shortest path; smallest predecessor wins ties."""
        if target not in self.dist:
            return None
        path = [target]
        node = target
        while node != self.graph.root:
            level = self.dist[node] - 1
            node = min((p for p in self.preds[node] if self.dist.get(p) == level), key=lambda n: n.canonical)
            path.append(node)
        path.reverse()
        return path

    def path_to(self, target: NodeId) -> Optional[List[Action]]:
        nodes = self.node_path(target)
        if nodes is None:
            return None
        return [self.graph.nodes[n].sample_action for n in nodes[1:]]


def shortest_path(graph: InteractionGraph, target: NodeId) -> Optional[List[Action]]:
    return PathFinder(graph).path_to(target)


def optimize(candidates: Iterable[MacroCandidate], graph: InteractionGraph) -> OptimizationResult:
    """Replace each candidate's trace prefix with the shortest path to its last action."""
    finder = PathFinder(graph)
    result = OptimizationResult(macros=[], dropped=[], pre_counts=[], post_counts=[])
    for candidate in candidates:
        final = candidate.predicted_final_action
        tail = (final,) if final is not None else ()
        targeted = [i for i, a in enumerate(candidate.trace_actions) if a.target_path is not None]
        reason = None
        if not targeted:
            actions = tail
            if not actions:
                reason = "no actions"
        else:
            node_id = graph.action_nodes.get((candidate.source[0], targeted[-1]))
            path = finder.path_to(node_id) if node_id is not None else None
            if path is None:
                reason = "target unreachable from root"
                actions = ()
            else:
                actions = tuple(path) + tail
        if reason is not None:
            logger.debug("Dropping %r from %s: %s", candidate.description, candidate.source, reason)
            result.dropped.append(
                {
                    "description": candidate.description,
                    "trace_id": candidate.source[0],
                    "screen_index": candidate.source[1],
                    "reason": reason,
                }
            )
            continue
        sources = tuple(sorted({candidate.source[0], *candidate.group_traces}))
        result.macros.append(
            Macro(
                description=candidate.description,
                actions=actions,
                app_id=graph.app_id,
                parameters=candidate.parameters,
                source_traces=sources,
            )
        )
        result.pre_counts.append(candidate.action_count)
        result.post_counts.append(len(actions))
    return result


def reduction_from_counts(pre_counts: Sequence[float], post_counts: Sequence[float]) -> Optional[ReductionStats]:
    if not pre_counts or not post_counts:
        return None
    mean_pre = sum(pre_counts) / len(pre_counts)
    mean_post = sum(post_counts) / len(post_counts)
    if mean_pre <= 0:
        return None
    return ReductionStats(mean_pre, mean_post, 100.0 * (1.0 - mean_post / mean_pre))


def reduction_stats(pre: Sequence[MacroCandidate], post: Sequence[Macro]) -> Optional[ReductionStats]:
    return reduction_from_counts([c.action_count for c in pre], [len(m.actions) for m in post])


def _dot_quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(graph: InteractionGraph) -> str:
    lines = [f"digraph {_dot_quote(graph.app_id)} {{"]
    ordered = sorted(graph.nodes, key=lambda n: n.canonical)
    for node_id in ordered:
        attrs = ' shape="doublecircle"' if node_id == graph.root else ""
        lines.append(f"  {_dot_quote(node_id.canonical)} [label={_dot_quote(node_id.canonical)}{attrs}];")
    for node_id in ordered:
        for succ in graph.successors(node_id):
            lines.append(f"  {_dot_quote(node_id.canonical)} -> {_dot_quote(succ.canonical)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
