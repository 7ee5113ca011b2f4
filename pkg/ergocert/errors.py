"""
Exception hierarchy for ergocert.

Legitimate analysis outcomes (no certificate, a failed proof-chain step, an
inapplicable corollary) are returned as values. Exceptions are reserved for
malformed input, broken preconditions and internal inconsistencies.
"""

from typing import Any, Dict, Optional


class ErgocertError(Exception):
    """Base class for all ergocert errors."""


class ValidationError(ErgocertError, ValueError):
    """Input does not describe a valid object (shape, sign, mass, grid)."""


class NotIrreducibleError(ValidationError):
    """An operation that needs an irreducible model received a reducible one."""


class ConfigurationError(ErgocertError, ValueError):
    """An ERGOCERT_* environment variable holds an unusable value."""


class AuditError(ErgocertError):
    """
    A certificate audit failed at a specific time.

    Attributes:
        time: Audit time at which the check failed
        margin: Signed slack of the failed inequality (negative means violated)
    """

    def __init__(self, message: str, time: float, margin: float) -> None:
        super().__init__(f"{message} (t={time!r}, margin={margin:.3e})")
        self.time = time
        self.margin = margin


class ConsistencyError(ErgocertError):
    """
    Results that must agree did not.

    Attributes:
        evidence: Per-check values that disagreed
    """

    def __init__(self, message: str, evidence: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.evidence: Dict[str, Any] = dict(evidence or {})


class SearchExhaustedError(ErgocertError):
    """A search over a caller-supplied finite grid found no admissible point."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.diagnostics: Dict[str, Any] = dict(diagnostics or {})


__all__ = [
    "ErgocertError",
    "ValidationError",
    "NotIrreducibleError",
    "ConfigurationError",
    "AuditError",
    "ConsistencyError",
    "SearchExhaustedError",
]
