# app/config/logging.py

import logging

from rich.logging import RichHandler

logger = logging.getLogger("app")
logger.setLevel(logging.INFO)


def configure_logging(level: str = "INFO") -> logging.Logger:
    """
    Attach a rich console handler to the package logger (once) and set its level.

    Module loggers are created with logging.getLogger(__name__) and propagate here.
    """
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        handler = RichHandler(rich_tracebacks=True, show_path=False)
        handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        logger.addHandler(handler)
    logger.setLevel(level.upper())
    return logger
