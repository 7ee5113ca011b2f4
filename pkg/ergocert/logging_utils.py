"""
Logging setup for the ``ergocert`` logger namespace.

Library modules only call ``logging.getLogger(__name__)``; handlers are
installed here, by the CLI or by the embedding application.
"""

import logging
import sys
from typing import Optional, TextIO

from .config import get_settings

LOGGER_NAME = "ergocert"
_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"

_handler: Optional[logging.Handler] = None


def configure_logging(
    level: Optional[str] = None, stream: Optional[TextIO] = None
) -> logging.Logger:
    """
    Install (or replace) the stderr handler of the ``ergocert`` logger.

    Args:
        level: Level name; defaults to ERGOCERT_LOG_LEVEL
        stream: Output stream (default: sys.stderr)

    Returns:
        The configured package logger
    """
    global _handler

    logger = logging.getLogger(LOGGER_NAME)
    if _handler is not None:
        logger.removeHandler(_handler)

    _handler = logging.StreamHandler(stream or sys.stderr)
    _handler.setFormatter(logging.Formatter(_FORMAT))
    logger.addHandler(_handler)
    logger.setLevel((level or get_settings().log_level).upper())
    return logger


__all__ = ["LOGGER_NAME", "configure_logging"]
