"""Exception types for Greenbriar Macros."""

from __future__ import annotations


class MacroMinerError(Exception):
    """Base class for every error raised by this package."""


class TraceFormatError(MacroMinerError, ValueError):
    """A trace, macro or app-spec document does not match its format."""


class GeometryError(MacroMinerError, ValueError):
    pass


class ConfigError(MacroMinerError, ValueError):
    pass


class BackendError(MacroMinerError, RuntimeError):
    """The generation backend failed after exhausting its retries."""


class ScriptMissError(BackendError):
    """A scripted backend was asked for a prompt it has no completions for."""


class ExtractionStepError(MacroMinerError):
    """No ranked completion of a chain step could be parsed and validated."""


class DeviceError(MacroMinerError, RuntimeError):
    pass


class CrawlError(MacroMinerError, ValueError):
    pass


class EvaluationError(MacroMinerError, ValueError):
    pass
