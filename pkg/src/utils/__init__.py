"""
Utility functions module
"""

from src.utils.config import load_config, get_config, RuntimeSettings
from src.utils.logger import configure_logging, get_logger, setup_logger

__all__ = [
    "load_config",
    "get_config",
    "RuntimeSettings",
    "configure_logging",
    "get_logger",
    "setup_logger",
]
