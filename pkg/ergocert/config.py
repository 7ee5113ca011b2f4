"""
Environment-driven settings.

Variables:
    ERGOCERT_THREADS: worker threads used by sweeps (default: CPU count, max 16)
    ERGOCERT_LOG_LEVEL: level of the ``ergocert`` logger (default: WARNING)
    ERGOCERT_TRUNCATION: uniformization truncation mass (default: 1e-14)
"""

import logging
import os
import threading
from dataclasses import dataclass
from typing import Mapping, Optional

from .errors import ConfigurationError

DEFAULT_TOL = 1e-10
DEFAULT_TRUNCATION = 1e-14
MAX_DEFAULT_THREADS = 16

_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class Settings:
    """Process-wide settings read from the environment."""

    threads: int
    log_level: str
    truncation: float

    @property
    def log_level_number(self) -> int:
        return int(getattr(logging, self.log_level))


def _default_threads() -> int:
    return max(1, min(MAX_DEFAULT_THREADS, os.cpu_count() or 1))


def load_settings(environ: Optional[Mapping[str, str]] = None) -> Settings:
    """
    Build settings from an environment mapping.

    Args:
        environ: Mapping to read from (default: ``os.environ``)

    Returns:
        Validated Settings

    Raises:
        ConfigurationError: If a variable cannot be parsed or is out of range
    """
    env = os.environ if environ is None else environ

    raw_threads = env.get("ERGOCERT_THREADS", "").strip()
    if raw_threads:
        try:
            threads = int(raw_threads)
        except ValueError as e:
            raise ConfigurationError(
                f"ERGOCERT_THREADS must be an integer, got {raw_threads!r}"
            ) from e
        if threads < 1:
            raise ConfigurationError(f"ERGOCERT_THREADS must be >= 1, got {threads}")
    else:
        threads = _default_threads()

    log_level = env.get("ERGOCERT_LOG_LEVEL", "WARNING").strip().upper() or "WARNING"
    if log_level not in _LEVELS:
        raise ConfigurationError(
            f"ERGOCERT_LOG_LEVEL must be one of {', '.join(_LEVELS)}, got {log_level!r}"
        )

    raw_trunc = env.get("ERGOCERT_TRUNCATION", "").strip()
    if raw_trunc:
        try:
            truncation = float(raw_trunc)
        except ValueError as e:
            raise ConfigurationError(
                f"ERGOCERT_TRUNCATION must be a float, got {raw_trunc!r}"
            ) from e
        if not 0.0 < truncation < 1e-3:
            raise ConfigurationError(
                f"ERGOCERT_TRUNCATION must lie in (0, 1e-3), got {truncation}"
            )
    else:
        truncation = DEFAULT_TRUNCATION

    return Settings(threads=threads, log_level=log_level, truncation=truncation)


_settings: Optional[Settings] = None
_lock = threading.Lock()


def get_settings() -> Settings:
    """Return the cached process-wide settings, loading them on first use."""
    global _settings
    with _lock:
        if _settings is None:
            _settings = load_settings()
        return _settings


def reload_settings() -> Settings:
    """Re-read the environment (mainly for testing)."""
    global _settings
    with _lock:
        _settings = load_settings()
        return _settings


__all__ = [
    "DEFAULT_TOL",
    "DEFAULT_TRUNCATION",
    "Settings",
    "load_settings",
    "get_settings",
    "reload_settings",
]
