"""Greenbriar Macros package."""

from .core import MineResult, Miner
from .options import PipelineConfig, load_config
from .trace import Action, Element, Macro, Screen, Trace, load_macros, load_trace

__all__ = [
    "Miner",
    "MineResult",
    "PipelineConfig",
    "load_config",
    "Action",
    "Element",
    "Macro",
    "Screen",
    "Trace",
    "load_macros",
    "load_trace",
]
