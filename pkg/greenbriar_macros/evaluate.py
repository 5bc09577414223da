"""Description-quality metrics and the per-trace max-pairing protocol.

METEOR here is the exact-match stage only (no stemming or synonyms), with
alpha=0.9, beta=3, gamma=0.5. Scores are not comparable to toolkits that
run the full matcher.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import EvaluationError
from .trace import Macro, Trace, iter_elements
from .utils import json_read, jsonl_read, stage_rng
from .utils import tokenize as _tokenize

logger = logging.getLogger(__name__)

METEOR_ALPHA = 0.9
METEOR_BETA = 3.0
METEOR_GAMMA = 0.5
EXHAUSTIVE_ALIGNMENT_LIMIT = 10


@dataclass(frozen=True)
class EvalPair:
    ground_truth: str
    extracted: Tuple[str, ...] = ()
    trace_id: str = ""

    def __post_init__(self) -> None:
        if not self.ground_truth.strip():
            raise EvaluationError(f"Empty ground truth for trace {self.trace_id!r}")


@dataclass
class PairScore:
    trace_id: str
    rouge_l: float
    meteor: float
    best_rouge_index: Optional[int]
    best_meteor_index: Optional[int]


@dataclass
class EvalResult:
    mean_rouge_l: float
    std_rouge_l: float
    mean_meteor: float
    std_meteor: float
    repeats: int
    per_repeat: List[Tuple[float, float]] = field(default_factory=list)
    pairs: List[PairScore] = field(default_factory=list)

    def as_dict(self) -> Dict:
        return {
            "repeats": self.repeats,
            "rouge_l": {"mean": self.mean_rouge_l, "std": self.std_rouge_l},
            "meteor": {"mean": self.mean_meteor, "std": self.std_meteor},
            "per_repeat": [{"rouge_l": r, "meteor": m} for r, m in self.per_repeat],
            "pairs": [
                {
                    "trace_id": p.trace_id,
                    "rouge_l": p.rouge_l,
                    "meteor": p.meteor,
                    "best_rouge_index": p.best_rouge_index,
                    "best_meteor_index": p.best_meteor_index,
                }
                for p in self.pairs
            ],
        }


def tokenize(text: str) -> List[str]:
    return _tokenize(text)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    row = [0] * (len(b) + 1)
    for x in a:
        diag = 0
        for j, y in enumerate(b, start=1):
            keep = row[j]
            row[j] = diag + 1 if x == y else max(row[j], row[j - 1])
            diag = keep
    return row[-1]


def rouge_l_f(reference: str, hypothesis: str) -> float:
    ref, hyp = tokenize(reference), tokenize(hypothesis)
    lcs = lcs_length(ref, hyp)
    if not ref or not hyp or lcs == 0:
        return 0.0
    precision = lcs / len(hyp)
    recall = lcs / len(ref)
    return 2 * precision * recall / (precision + recall)


def _max_matches(ref: Sequence[str], hyp: Sequence[str]) -> int:
    ref_counts, hyp_counts = Counter(ref), Counter(hyp)
    return sum(min(n, ref_counts[tok]) for tok, n in hyp_counts.items())


def _min_chunks_exhaustive(ref: Sequence[str], hyp: Sequence[str], target: int) -> int:
    positions: Dict[str, List[int]] = {}
    for j, tok in enumerate(ref):
        positions.setdefault(tok, []).append(j)
    # matches still obtainable from hyp[i:], ignoring ref usage
    suffix_room = [0] * (len(hyp) + 1)
    for i in range(len(hyp) - 1, -1, -1):
        suffix_room[i] = suffix_room[i + 1] + (1 if hyp[i] in positions else 0)

    best = [len(hyp) + 1]
    used = [False] * len(ref)

    def search(i: int, matched: int, chunks: int, prev_ref: Optional[int]) -> None:
        if chunks >= best[0] or matched + suffix_room[i] < target:
            return
        if i == len(hyp):
            if matched == target:
                best[0] = chunks
            return
        for j in positions.get(hyp[i], ()):
            if used[j]:
                continue
            used[j] = True
            extends = prev_ref is not None and j == prev_ref + 1
            search(i + 1, matched + 1, chunks + (0 if extends else 1), j)
            used[j] = False
        search(i + 1, matched, chunks, None)

    search(0, 0, 0, None)
    return best[0]


def _min_chunks_greedy(ref: Sequence[str], hyp: Sequence[str]) -> int:
    used = [False] * len(ref)
    chunks = 0
    prev_ref: Optional[int] = None
    for tok in hyp:
        choice = None
        if prev_ref is not None and prev_ref + 1 < len(ref) and not used[prev_ref + 1] and ref[prev_ref + 1] == tok:
            choice = prev_ref + 1
        else:
            choice = next((j for j, r in enumerate(ref) if r == tok and not used[j]), None)
            if choice is not None:
                chunks += 1
        if choice is not None:
            used[choice] = True
        prev_ref = choice
    return chunks


def meteor_exact(reference: str, hypothesis: str) -> float:
    ref, hyp = tokenize(reference), tokenize(hypothesis)
    m = _max_matches(ref, hyp)
    if m == 0:
        return 0.0
    if len(hyp) <= EXHAUSTIVE_ALIGNMENT_LIMIT:
        chunks = _min_chunks_exhaustive(ref, hyp, m)
    else:
        chunks = _min_chunks_greedy(ref, hyp)
    precision = m / len(hyp)
    recall = m / len(ref)
    f_mean = precision * recall / (METEOR_ALPHA * precision + (1 - METEOR_ALPHA) * recall)
    penalty = METEOR_GAMMA * (chunks / m) ** METEOR_BETA
    return f_mean * (1 - penalty)


def _argmax(scores: Sequence[float]) -> Optional[int]:
    if not scores:
        return None
    return int(np.argmax(scores))


def score_pair(pair: EvalPair) -> PairScore:
    rouges = [rouge_l_f(pair.ground_truth, d) for d in pair.extracted]
    meteors = [meteor_exact(pair.ground_truth, d) for d in pair.extracted]
    best_r, best_m = _argmax(rouges), _argmax(meteors)
    return PairScore(
        trace_id=pair.trace_id,
        rouge_l=rouges[best_r] if best_r is not None else 0.0,
        meteor=meteors[best_m] if best_m is not None else 0.0,
        best_rouge_index=best_r,
        best_meteor_index=best_m,
    )


def trace_score(pair: EvalPair) -> Tuple[float, float]:
    """Independent maxima of ROUGE-L and METEOR over the extracted descriptions."""
    score = score_pair(pair)
    return score.rouge_l, score.meteor


def baseline_element_text(trace: Trace) -> List[str]:
    seen: Dict[str, None] = {}
    for screen in trace.screens:
        for _, element in iter_elements(screen.root):
            for value in (element.text, element.content_description):
                if value and value not in seen:
                    seen[value] = None
    return list(seen)


def baseline_random_trace(all_extractions: Mapping[str, Sequence[str]], seed: int) -> Dict[str, Tuple[str, ...]]:
    """Give every trace the extraction set of some other trace (a seeded derangement)."""
    keys = sorted(all_extractions)
    if len(keys) < 2:
        raise EvaluationError("Random-trace baseline needs at least two traces")
    rng = stage_rng(seed, "baseline")
    n = len(keys)
    identity = np.arange(n)
    while True:
        perm = rng.permutation(n)
        if not np.any(perm == identity):
            break
    return {keys[i]: tuple(all_extractions[keys[int(perm[i])]]) for i in range(n)}


def dataset_eval(
    pairs: Sequence[EvalPair],
    repeats: int = 1,
    resample: Optional[Callable[[int, Sequence[EvalPair]], Sequence[EvalPair]]] = None,
) -> EvalResult:
    """Mean/std over ``repeats`` runs of the per-trace average score.

    ``resample(r, pairs)`` supplies the pairs for repeat ``r``; without it every
    repeat scores the same pairs and the std is zero.
    """
    if not pairs:
        raise EvaluationError("No evaluation pairs")
    if repeats < 1:
        raise EvaluationError(f"repeats must be at least 1, got {repeats}")
    per_repeat: List[Tuple[float, float]] = []
    first_scores: List[PairScore] = []
    for r in range(repeats):
        batch = list(resample(r, pairs)) if resample is not None else list(pairs)
        scores = [score_pair(p) for p in batch]
        if r == 0:
            first_scores = scores
        per_repeat.append(
            (float(np.mean([s.rouge_l for s in scores])), float(np.mean([s.meteor for s in scores])))
        )
        logger.debug("Repeat %d: rouge_l=%.4f meteor=%.4f", r, *per_repeat[-1])
    rouge = np.array([r for r, _ in per_repeat])
    meteor = np.array([m for _, m in per_repeat])
    return EvalResult(
        mean_rouge_l=float(rouge.mean()),
        std_rouge_l=float(rouge.std()),
        mean_meteor=float(meteor.mean()),
        std_meteor=float(meteor.std()),
        repeats=repeats,
        per_repeat=per_repeat,
        pairs=first_scores,
    )


def pair_from_dict(doc: Mapping, where: str = "pair") -> EvalPair:
    if not isinstance(doc, Mapping) or "ground_truth" not in doc:
        raise EvaluationError(f"{where}: expected an object with ground_truth")
    extracted = doc.get("extracted", []) or []
    if not isinstance(extracted, list) or not all(isinstance(d, str) for d in extracted):
        raise EvaluationError(f"{where}: extracted must be a list of strings")
    return EvalPair(
        ground_truth=str(doc["ground_truth"]), extracted=tuple(extracted), trace_id=str(doc.get("trace_id", ""))
    )


def load_eval_pairs(path: str) -> List[EvalPair]:
    """Pairs from a JSON list, a ``{"pairs": [...]}`` object, or JSON-lines."""
    try:
        document = jsonl_read(path) if path.endswith(".jsonl") else json_read(path)
    except (OSError, ValueError) as exc:
        raise EvaluationError(f"Cannot read eval input {path}: {exc}") from exc
    if isinstance(document, dict):
        document = document.get("pairs", [])
    if not isinstance(document, list):
        raise EvaluationError(f"{path}: expected a list of pairs")
    return [pair_from_dict(doc, f"{path}[{i}]") for i, doc in enumerate(document)]


def load_ground_truth(path: str) -> Dict[str, str]:
    try:
        document = json_read(path)
    except (OSError, ValueError) as exc:
        raise EvaluationError(f"Cannot read ground truth {path}: {exc}") from exc
    if isinstance(document, dict):
        return {str(k): str(v) for k, v in document.items()}
    if isinstance(document, list):
        try:
            return {str(d["trace_id"]): str(d["ground_truth"]) for d in document}
        except (KeyError, TypeError) as exc:
            raise EvaluationError(f"{path}: records need trace_id and ground_truth") from exc
    raise EvaluationError(f"{path}: expected an object or a list")


def extractions_by_trace(macros: Sequence[Macro]) -> Dict[str, List[str]]:
    found: Dict[str, List[str]] = {}
    for macro in macros:
        for trace_id in macro.source_traces:
            descriptions = found.setdefault(trace_id, [])
            if macro.description not in descriptions:
                descriptions.append(macro.description)
    return found


def pairs_from_macros(macros: Sequence[Macro], ground_truth: Mapping[str, str]) -> List[EvalPair]:
    found = extractions_by_trace(macros)
    return [
        EvalPair(ground_truth=ground_truth[tid], extracted=tuple(found.get(tid, [])), trace_id=tid)
        for tid in sorted(ground_truth)
    ]


def random_trace_resampler(seed: int) -> Callable[[int, Sequence[EvalPair]], List[EvalPair]]:
    """Resampler for dataset_eval that re-deranges extractions on every repeat."""

    def _resample(repeat: int, pairs: Sequence[EvalPair]) -> List[EvalPair]:
        # keyed by position: trace ids may repeat or be empty
        keys = [f"{i:08d}" for i in range(len(pairs))]
        shuffled = baseline_random_trace({k: p.extracted for k, p in zip(keys, pairs)}, seed + repeat)
        return [EvalPair(p.ground_truth, shuffled[k], p.trace_id) for k, p in zip(keys, pairs)]

    return _resample
