"""Utility helpers for Greenbriar Macros."""

from __future__ import annotations

import json
import logging
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

import numpy as np
import regex as re

T = TypeVar("T")
R = TypeVar("R")

_NON_ALNUM_RE = re.compile(r"[^\p{L}\p{N}]+")


def setup_logger(quiet: bool = False, verbose: bool = False, log_level: Optional[str] = None) -> logging.Logger:
    logger = logging.getLogger("greenbriar_macros")
    level = logging.INFO
    if quiet:
        level = logging.WARNING
    if verbose:
        level = logging.DEBUG
    if log_level:
        level = getattr(logging, log_level.upper(), level)
    logger.setLevel(level)
    if logger.handlers:
        return logger
    handler = logging.StreamHandler()
    formatter = logging.Formatter("%(asctime)s %(levelname)s %(message)s")
    handler.setFormatter(formatter)
    logger.addHandler(handler)
    return logger


def normalize_line(text: str) -> str:
    return re.sub(r"\s+", " ", text or "").strip()


def normalize_words(text: str) -> str:
    return _NON_ALNUM_RE.sub(" ", (text or "").lower()).strip()


def tokenize(text: str) -> List[str]:
    return [tok for tok in _NON_ALNUM_RE.split((text or "").lower()) if tok]


def resource_words(resource_id: str) -> List[str]:
    name = (resource_id or "").split(":id/")[-1]
    return tokenize(name)


def short_class_name(class_name: str) -> str:
    return (class_name or "").split(".")[-1]


def stage_rng(seed: int, stage: str) -> np.random.Generator:
    """Generator for one pipeline stage, derived from the root seed."""
    return np.random.default_rng([int(seed), zlib.crc32(stage.encode("utf-8"))])


def ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)


def jsonl_write(path: str, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


def jsonl_read(path: str) -> List[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if line.strip():
                records.append(json.loads(line))
    return records


def json_write(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, ensure_ascii=False, indent=2)
        f.write("\n")


def json_read(path: str):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def derive_seed(seed: int, *keys: int) -> int:
    """Independent child seed for the ``keys``-th sub-task of a seeded run."""
    state = np.random.SeedSequence([int(seed), *(int(k) for k in keys)]).generate_state(1)
    return int(state[0])


def parallel_map(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> List[R]:
    """``map`` over a bounded thread pool; results keep input order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
