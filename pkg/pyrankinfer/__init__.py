#!/usr/bin/env python3
# -*- coding: utf-8 -*-


"""
Ranking inference from top-choice multiway comparisons.

Scores are estimated by maximum likelihood and ranks are inferred with a
Gaussian multiplier bootstrap: simultaneous rank confidence intervals,
top-K placement tests and sure screening sets.
"""


from __future__ import annotations
import logging
import os
import sys
from typing import Optional

from .defaults import ENV_LOG_FILE


__version__ = "0.1.0"

# Used in logging module
APP_NAME = os.path.splitext(os.path.basename(sys.argv[0]))[0] or "pyrankinfer"
LOG_FORMAT = "%(asctime)s [%(threadName)s] [%(levelname)s] - %(message)s"


def configure_logging(
        level: int = logging.INFO,
        log_file: Optional[str] = None) -> None:
    """
    Logging configuration section.

    Reports go to stdout, so log records are written to stderr.
    A log file is added when log_file is given or RANKINFER_LOG_FILE is set.

    params:
        | level: {int} - logging level {default: logging.INFO}
        | log_file: {str} - optional path of the log file
    """

    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file is None and os.environ.get(ENV_LOG_FILE):
        log_file = "{0}/{1}.log".format(os.getcwd(), APP_NAME)
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=level,
        format=LOG_FORMAT,
        handlers=handlers,
        force=True
    )
