"""Logging setup backed by rich."""

import logging

from rich.console import Console
from rich.logging import RichHandler

LOGGER_NAME = "chlattice"

err_console = Console(stderr=True)


def setup_logging(verbosity: int = 0) -> logging.Logger:
    """Attach a single RichHandler to the package logger."""
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level)
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        handler = RichHandler(
            console=err_console,
            show_path=False,
            markup=True,
            rich_tracebacks=True,
        )
        handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(handler)
    return logger
