"""Logging setup shared by the CLI and library users."""

import logging
import sys

from .colors import paint

_HANDLER_NAME = "corridorflow"


class LevelColorFormatter(logging.Formatter):
    """Formatter that colours the level name of each record."""

    def format(self, record: logging.LogRecord) -> str:
        message = super().format(record)
        return f"{paint(record.levelname.lower(), record.levelname)} {message}"


def configure_logging(verbosity: int = 0) -> logging.Logger:
    """
    Install one stderr handler on the package logger.

    verbosity 0 -> WARNING, 1 -> INFO, 2+ -> DEBUG. Calling it again
    changes the level and rebinds the handler to the current sys.stderr.
    """
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    root = logging.getLogger("corridorflow")
    root.setLevel(level)

    handler = next((h for h in root.handlers if h.get_name() == _HANDLER_NAME), None)
    if handler is None:
        handler = logging.StreamHandler(sys.stderr)
        handler.set_name(_HANDLER_NAME)
        handler.setFormatter(LevelColorFormatter("%(name)s: %(message)s"))
        root.addHandler(handler)
    else:
        handler.setStream(sys.stderr)

    return root
