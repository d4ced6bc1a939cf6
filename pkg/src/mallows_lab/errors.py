"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ModelGuardError(RuntimeError):
    """A model or estimator guard tripped (tail mass, zero variance, cost limit)."""


class ConfigError(ValueError):
    """Malformed experiment configuration.

    ``lineno`` is 1-based and ``None`` when the problem is not tied to a line.
    """

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
