"""Configuration dataclasses for Greenbriar Macros."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from typing import Optional

from .errors import ConfigError
from .utils import json_read

BACKENDS = ("scripted", "live")


@dataclass
class PipelineConfig:
    backend: str = "scripted"
    script_path: Optional[str] = None
    base_url: Optional[str] = None
    model: str = "text-bison"
    top_p: float = 0.95
    temperature: float = 0.7
    api_token: Optional[str] = None
    timeout_sec: int = 60
    max_retries: int = 2
    qps: float = 1.0
    max_completions: int = 8
    dedup_threshold: float = 0.9
    fuzzy_threshold: float = 0.5
    embedding_dim: int = 256
    seed: int = 0
    workers: int = 1
    max_steps: int = 30
    out_dir: str = "."
    quiet: bool = False
    verbose: bool = False
    log_level: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> "PipelineConfig":
        if self.backend not in BACKENDS:
            raise ConfigError(f"Unknown backend {self.backend!r}; expected one of {', '.join(BACKENDS)}")
        for name in ("dedup_threshold", "fuzzy_threshold"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ConfigError(f"{name} must be in (0, 1], got {value}")
        if self.max_completions < 1:
            raise ConfigError("max_completions must be at least 1")
        if self.embedding_dim < 1:
            raise ConfigError("embedding_dim must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be at least 1")
        if self.max_retries < 0:
            raise ConfigError("max_retries must not be negative")
        if self.qps <= 0:
            raise ConfigError(f"qps must be positive, got {self.qps}")
        if self.timeout_sec <= 0:
            raise ConfigError(f"timeout_sec must be positive, got {self.timeout_sec}")
        return self


def load_config(path: Optional[str] = None, **overrides) -> PipelineConfig:
    """Build a config from an optional JSON key-value file, env vars and overrides.

    Overrides whose value is ``None`` are ignored so argparse defaults do not
    clobber values read from the file.
    """
    values: dict = {}
    if path:
        try:
            payload = json_read(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"Cannot read config {path}: {exc}") from exc
        if not isinstance(payload, dict):
            raise ConfigError(f"Config {path} must be a JSON object")
        values.update(payload)
    values.update({k: v for k, v in overrides.items() if v is not None})

    known = {f.name for f in fields(PipelineConfig)}
    extra = dict(values.pop("extra", {}) or {})
    for key in list(values):
        if key not in known:
            extra[key] = values.pop(key)

    config = PipelineConfig(extra=extra, **values)
    if not config.base_url:
        config.base_url = os.environ.get("GREENBRIAR_LLM_URL")
    if not config.api_token:
        config.api_token = os.environ.get("GREENBRIAR_LLM_TOKEN")
    return config
