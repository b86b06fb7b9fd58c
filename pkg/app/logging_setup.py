# FILE: app/logging_setup.py
from __future__ import annotations

import logging
import sys

_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"
_HANDLER_NAME = "rotorflow-cli"


def configure_logging(verbosity: int = 0) -> logging.Logger:
    """verbosity > 0 selects DEBUG, < 0 WARNING, 0 INFO. Safe to call twice."""
    if verbosity > 0:
        level = logging.DEBUG
    elif verbosity < 0:
        level = logging.WARNING
    else:
        level = logging.INFO

    root = logging.getLogger()
    for h in list(root.handlers):
        if h.get_name() == _HANDLER_NAME:
            root.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.set_name(_HANDLER_NAME)
    handler.setFormatter(logging.Formatter(_FORMAT, datefmt="%H:%M:%S"))
    root.addHandler(handler)
    root.setLevel(level)
    # contour extraction goes through matplotlib; keep its font/backend chatter out
    logging.getLogger("matplotlib").setLevel(max(level, logging.WARNING))
    return root
