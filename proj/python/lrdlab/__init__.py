"""Partial sums of functionals of long-memory Gaussian series."""

import json as _json

from ._lrdlab import *  # noqa: F401,F403
from ._lrdlab import _run_command

__all__ = [name for name in dir() if not name.startswith("_")] + ["run"]


def run(command, config, *, seed=None, out=None, threads=1, format="csv"):
    """Run a CLI subcommand in-process.

    ``config`` is a dict or a JSON string. Returns ``(report, failures)``;
    the bundle is also written to ``out``.
    """
    text = config if isinstance(config, str) else _json.dumps(config)
    report, failures = _run_command(command, text, seed, out, threads, format)
    return _json.loads(report), list(failures)
