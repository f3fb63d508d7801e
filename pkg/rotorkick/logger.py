import logging
import os
import sys
from typing import Optional, Union

logger = logging.getLogger("rotorkick")

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _resolve_level(level: Union[int, str, None]) -> int:
    if level is None:
        level = os.getenv("ROTORKICK_LOG_LEVEL", "WARNING")
    if isinstance(level, str):
        return getattr(logging, level.upper(), logging.WARNING)
    return int(level)


def configure_logging(level: Optional[Union[int, str]] = None) -> None:
    """Set the level of the rotorkick logger and attach a stderr handler once.

    Args:
        level: A logging level or level name. Falls back to ROTORKICK_LOG_LEVEL, then WARNING.
    """
    logger.setLevel(_resolve_level(level))
    if not logger.handlers:
        # stdout carries the command-line JSON
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
