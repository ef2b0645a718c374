"""JSON run reports: tool version, full configuration, results, optional timing."""

from __future__ import annotations

import json
import os
import time
from fractions import Fraction

from . import __version__


def _plain(x):
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):  # numpy scalars
        return x.item()
    return x


def threads() -> int:
    """Parallelism cap from GAPFORGE_THREADS (default 1)."""
    raw = os.environ.get("GAPFORGE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def make_report(command: str, config: dict, result: dict, status: str, deterministic: bool,
                started: float | None = None) -> dict:
    rep = {
        "tool": "gapforge",
        "version": __version__,
        "command": command,
        "config": _plain(config),
        "status": status,
        "result": _plain(result),
        "threads": threads(),
    }
    if not deterministic:
        rep["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        if started is not None:
            rep["elapsed_seconds"] = round(time.time() - started, 3)
    return rep


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(_plain(obj), sort_keys=True, indent=1) + "\n")
