"""
Logging module
"""

import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional


# Log directory
LOG_DIR = Path.home() / ".lcextension" / "logs"
LOG_FILE = LOG_DIR / "app.log"

DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Applied to loggers created after configure_logging
_defaults: Dict[str, Any] = {"level": "INFO", "log_file": None, "format_string": None}


def setup_logger(
    name: str,
    level: str = "INFO",
    log_file: Optional[Path] = None,
    format_string: Optional[str] = None,
) -> logging.Logger:
    """
    Setup logger

    Console output goes to stderr so that report data written to stdout stays clean.

    Args:
        name: Logger name
        level: Log level
        log_file: Log file path; falls back to console-only logging if it cannot be opened
        format_string: Log format string

    Returns:
        Configured logger
    """
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))
    for handler in logger.handlers:
        handler.close()
    logger.handlers.clear()
    logger.propagate = False

    formatter = logging.Formatter(format_string or DEFAULT_FORMAT)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(logging.WARNING)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file is None:
        log_file = LOG_FILE

    try:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
    except OSError:
        return logger
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)

    return logger


def get_logger(name: str) -> logging.Logger:
    """
    Get logger

    Args:
        name: Logger name

    Returns:
        Logger
    """
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger

    return setup_logger(name, **_defaults)


def configure_logging(
    level: str = "INFO",
    log_file: Optional[Path] = None,
    format_string: Optional[str] = None,
) -> None:
    """
    Apply level, log file and format to every package logger, existing or created later

    Args:
        level: Log level
        log_file: Log file path
        format_string: Log format string
    """
    _defaults.update(level=level, log_file=log_file, format_string=format_string)
    for name, existing in list(logging.root.manager.loggerDict.items()):
        if isinstance(existing, logging.Logger) and name.startswith("src."):
            setup_logger(name, level, log_file, format_string)
