"""Shared exception types."""
from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """A scenario configuration failed validation.

    Carries the dotted path of the offending field so CLI messages can point
    at it directly.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class SingularityError(RuntimeError):
    """The dynamics reached (or started on) a pole of the right-hand side."""

    def __init__(self, reason: str, tau: float | None = None, detail: str = ""):
        self.reason = reason
        self.tau = tau
        where = f" at tau={tau:.6g}" if tau is not None else ""
        msg = f"{reason}{where}"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class StepFailureError(RuntimeError):
    """An adaptive integrator could not meet its tolerance (step underflow)."""
