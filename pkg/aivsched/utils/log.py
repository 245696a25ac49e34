"""
Logging setup for aivsched.

All modules log through children of the ``aivsched`` logger; the CLI decides
the level once, at start-up.
"""

import logging
from enum import Enum
from typing import Union

ROOT_LOGGER_NAME = "aivsched"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Engine trace lines are emitted at DEBUG, but only when trace logging is on.
_trace_enabled = False


class LogLevel(str, Enum):
    """Log levels for the CLI"""
    NONE = "none"  # critical errors only (default)
    INFO = "info"
    DEBUG = "debug"
    TRACE = "trace"  # DEBUG plus one line per simulation event


_LEVELS = {
    LogLevel.NONE: logging.CRITICAL,
    LogLevel.INFO: logging.INFO,
    LogLevel.DEBUG: logging.DEBUG,
    LogLevel.TRACE: logging.DEBUG,
}


def get_logger(name: str) -> logging.Logger:
    """Return the ``aivsched.<name>`` logger."""
    return logging.getLogger(f"{ROOT_LOGGER_NAME}.{name}")


def set_log_level(level: Union[int, LogLevel, str]):
    """Set the logging level for every aivsched logger.

    Args:
        level: A ``logging`` level number or a ``LogLevel`` value.
    """
    global _trace_enabled
    if not isinstance(level, int):
        level = LogLevel(level)
        _trace_enabled = level == LogLevel.TRACE
        level = _LEVELS[level]
    logging.getLogger(ROOT_LOGGER_NAME).setLevel(level)


def configure_logging(level: Union[int, LogLevel, str] = LogLevel.NONE) -> logging.Logger:
    """Install a single stream handler on the package logger.

    Calling it again only changes the level; handlers are never duplicated.
    """
    root = logging.getLogger(ROOT_LOGGER_NAME)
    if not any(getattr(h, "_aivsched", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._aivsched = True
        root.addHandler(handler)
        root.propagate = False
    set_log_level(level)
    return root


def trace_enabled() -> bool:
    return _trace_enabled
