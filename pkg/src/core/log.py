"""
Lungtex Logging — root logger setup for the command line
"""

import logging
import sys

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def verbosity_level(verbosity: int, quiet: bool = False) -> int:
    if quiet:
        return logging.ERROR
    if verbosity >= 2:
        return logging.DEBUG
    if verbosity == 1:
        return logging.INFO
    return logging.WARNING


def setup_logging(verbosity: int = 0, quiet: bool = False) -> int:
    """Configure the root logger once; returns the level in effect.
    Library modules only ever call logging.getLogger(__name__)."""
    level = verbosity_level(verbosity, quiet)
    root = logging.getLogger()
    for h in list(root.handlers):
        root.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt="%H:%M:%S"))
    root.addHandler(handler)
    root.setLevel(level)
    return level


def progress_enabled(level: int) -> bool:
    return level <= logging.WARNING and sys.stderr.isatty()
