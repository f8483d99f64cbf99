from __future__ import annotations

import logging
import os
from pathlib import Path


def resolve_out_dir(value: str | os.PathLike | None = None) -> Path:
    """Expand the output root, falling back to the current directory.

    :param value: A candidate root, usually taken from ``HELE_OUT_DIR``.
    :return: An absolute, user- and variable-expanded path.
    """
    if not value:
        return Path.cwd()
    return Path(os.path.expanduser(os.path.expandvars(str(value)))).absolute()


def log_level(value: str | int | None) -> int:
    if isinstance(value, int):
        return value
    if not value:
        return logging.WARNING
    level = logging.getLevelName(str(value).upper())
    return level if isinstance(level, int) else logging.WARNING


HELE_OUT_DIR = os.environ.get("HELE_OUT_DIR")
"""Root directory under which run, sweep and probe artifacts are written.

Unset by default, in which case the current working directory is used.
"""

WORKERS = int(os.environ.get("HELESHAW_WORKERS", 1))
"""The default number of sweep worker processes

Set to **1** by default, which runs sweep children sequentially in-process.
"""

LOG_LEVEL = log_level(os.environ.get("HELESHAW_LOG_LEVEL"))
