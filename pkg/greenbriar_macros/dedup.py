"""Embedding-based grouping of near-duplicate macro descriptions."""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import List, Protocol, Sequence, Tuple

import numpy as np

from .utils import stage_rng, tokenize

# slack for float round-off when comparing cosines to a threshold of 1.0
_EPS = 1e-9


class Embedder(Protocol):
    def embed(self, text: str) -> np.ndarray:
        ...


class BagOfTokensEmbedder:
    """Hashed token counts, L2-normalised; the empty string maps to zeros."""

    def __init__(self, dimension: int = 256):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension

    def _bucket(self, token: str) -> int:
        return zlib.crc32(token.encode("utf-8")) % self.dimension

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        for token in tokenize(text):
            vec[self._bucket(token)] += 1.0
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a < 1e-12 or norm_b < 1e-12:
        return 0.0
    return float(np.dot(a, b) / (norm_a * norm_b))


@dataclass(frozen=True)
class SimilarityGroups:
    groups: Tuple[Tuple[int, Tuple[int, ...]], ...]
    threshold: float

    def members_of(self, group_index: int) -> Tuple[int, ...]:
        return self.groups[group_index][1]

    def __len__(self) -> int:
        return len(self.groups)


def group_by_similarity(descriptions: Sequence[str], embedder: Embedder, threshold: float) -> SimilarityGroups:
    """Single ordered pass: join the most similar group at or above ``threshold``.

    Group similarity is measured against the re-normalised mean of the
    members' vectors. Output depends on input order.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    members: List[List[int]] = []
    sums: List[np.ndarray] = []
    centroids: List[np.ndarray] = []
    for index, description in enumerate(descriptions):
        vec = embedder.embed(description)
        best, best_sim = -1, -1.0
        for g, centroid in enumerate(centroids):
            sim = cosine_similarity(vec, centroid)
            if sim > best_sim:
                best, best_sim = g, sim
        if best >= 0 and best_sim >= threshold - _EPS:
            members[best].append(index)
            sums[best] = sums[best] + vec
            norm = np.linalg.norm(sums[best])
            centroids[best] = sums[best] / norm if norm > 0 else sums[best]
        else:
            members.append([index])
            sums.append(vec.copy())
            centroids.append(vec.copy())
    groups = tuple((m[0], tuple(m)) for m in members)
    return SimilarityGroups(groups=groups, threshold=threshold)


def sample_representatives(groups: SimilarityGroups, seed: int) -> List[int]:
    """One uniformly chosen member per group, in group order."""
    rng = stage_rng(seed, "sample")
    chosen = []
    for _, group_members in groups.groups:
        if len(group_members) == 1:
            chosen.append(group_members[0])
        else:
            chosen.append(group_members[int(rng.integers(len(group_members)))])
    return chosen
