"""Text-generation backends used by the extraction chain."""

from __future__ import annotations

import hashlib
import logging
import threading
import time
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Protocol, Sequence

from .errors import BackendError, ConfigError, ScriptMissError
from .utils import json_read, json_write, normalize_line

logger = logging.getLogger(__name__)


class GenerationBackend(Protocol):
    def generate(self, prompt: str, max_candidates: int) -> List[str]:
        """Return ranked completions for ``prompt`` (best first, at least one)."""
        ...


def fingerprint(prompt: str) -> str:
    """Stable key for a prompt; whitespace differences do not change it."""
    return hashlib.sha256(normalize_line(prompt).encode("utf-8")).hexdigest()


class ScriptedBackend:
    """Replays canned completions keyed by prompt fingerprint."""

    def __init__(self, script: Mapping[str, Sequence[str]]):
        self.script: Dict[str, List[str]] = {key: list(values) for key, values in script.items()}
        self.calls: List[str] = []
        self._lock = threading.Lock()

    @classmethod
    def from_prompts(cls, prompts: Mapping[str, Sequence[str]]) -> "ScriptedBackend":
        return cls({fingerprint(prompt): completions for prompt, completions in prompts.items()})

    @classmethod
    def load(cls, path: str) -> "ScriptedBackend":
        try:
            payload = json_read(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"Cannot read script {path}: {exc}") from exc
        if not isinstance(payload, dict):
            raise ConfigError(f"Script {path} must map fingerprints to completion lists")
        return cls(payload)

    def save(self, path: str) -> None:
        json_write(path, dict(sorted(self.script.items())))

    def add(self, prompt: str, completions: Sequence[str]) -> None:
        self.script[fingerprint(prompt)] = list(completions)

    def generate(self, prompt: str, max_candidates: int) -> List[str]:
        key = fingerprint(prompt)
        with self._lock:
            self.calls.append(key)
        if key not in self.script:
            raise ScriptMissError(f"No scripted completions for prompt {key[:12]}: {normalize_line(prompt)[-80:]!r}")
        completions = self.script[key][: max(1, max_candidates)]
        if not completions:
            raise ScriptMissError(f"Empty completion list for prompt {key[:12]}")
        return completions


@dataclass
class HttpBackendOptions:
    base_url: str
    model: str = "text-bison"
    token: Optional[str] = None
    top_p: float = 0.95
    temperature: float = 0.7
    qps: float = 1.0
    max_retries: int = 2
    timeout_sec: int = 60


class HttpCompletionBackend:
    """Text-completion endpoint over HTTP, sampled with top-p decoding.

    Accepts either ``{"choices": [{"text": ...}]}`` or
    ``{"candidates": [{"output": ...}]}`` responses; order is rank order.
    """

    def __init__(self, opts: HttpBackendOptions):
        if opts.max_retries < 0:
            raise ConfigError("max_retries must not be negative")
        self.opts = opts
        self._min_interval = 1.0 / max(opts.qps, 0.1)
        self._last_call_ts = 0.0
        self._lock = threading.Lock()

    def _sleep_if_needed(self) -> None:
        with self._lock:
            now = time.time()
            gap = now - self._last_call_ts
            if gap < self._min_interval:
                time.sleep(self._min_interval - gap)
            self._last_call_ts = time.time()

    def _post(self, prompt: str, max_candidates: int) -> dict:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.opts.token:
            headers["Authorization"] = f"Bearer {self.opts.token}"
        payload = {
            "model": self.opts.model,
            "prompt": prompt,
            "top_p": self.opts.top_p,
            "temperature": self.opts.temperature,
            "n": max_candidates,
        }
        self._sleep_if_needed()
        resp = requests.post(self.opts.base_url, headers=headers, json=payload, timeout=self.opts.timeout_sec)
        resp.raise_for_status()
        return resp.json()

    @staticmethod
    def _completions(res: dict) -> List[str]:
        if "choices" in res:
            return [c.get("text", "") for c in res["choices"]]
        if "candidates" in res:
            return [c.get("output", "") for c in res["candidates"]]
        if "completions" in res:
            return [str(c) for c in res["completions"]]
        raise ValueError(f"Unrecognised completion response keys: {sorted(res)}")

    def generate(self, prompt: str, max_candidates: int) -> List[str]:
        attempt = 0
        last_err = None
        while attempt <= self.opts.max_retries:
            try:
                completions = self._completions(self._post(prompt, max_candidates))
                if not completions:
                    raise ValueError("backend returned no completions")
                return completions[:max_candidates]
            except Exception as exc:
                last_err = str(exc)
                attempt += 1
                logger.debug("Completion request failed (attempt %d): %s", attempt, exc)
                if attempt <= self.opts.max_retries:
                    time.sleep(1.0 * attempt)
        raise BackendError(f"Completion backend failed after {attempt} attempts: {last_err}")
