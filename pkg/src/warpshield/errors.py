"""Exception types shared across the toolkit."""

from __future__ import annotations


class WarpshieldError(Exception):
    """Base class for all toolkit errors."""


class ParseError(WarpshieldError):
    """Kernel source text does not conform to the IR grammar."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(WarpshieldError):
    """A program, plan, profile, or buffer set violates a structural invariant."""


class ExecutionError(WarpshieldError):
    """An execution could not produce a usable result."""


class CampaignRefused(ExecutionError):
    """The fault-free run crashed or hung, so no injection campaign can be anchored to it."""


class ProtectionError(ExecutionError):
    """Replicated execution could not reach a majority agreement."""


class ArtifactError(WarpshieldError):
    """A persisted artifact (CSV/JSON file) is missing, malformed, or inconsistent."""


class FixtureError(WarpshieldError):
    """A fixture specification is unsatisfiable or failed its target-stat check."""
