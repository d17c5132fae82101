"""Plot-ready series from an episode log (no plotting library needed).

Each output file is a small CSV keyed by simulation time, one row per
control cycle of the episode, so a figure of error, grip force, slip
tendencies and action activity can be redrawn with any tool.
"""

from __future__ import annotations

import csv
from pathlib import Path

from ..simulation.log import MalformedLog, read_episode_log

SERIES = {
    "error": ("sim_time", "error_deg"),
    "force": ("sim_time", "grip_force"),
    "tactile": ("sim_time", "s1_left", "s2_left", "s1_right", "s2_right"),
    "activity": ("sim_time", "finger", "task", "constraint", "coordinating", "probing"),
}

__all__ = ["SERIES", "MalformedLog", "emit_plots", "series"]


def series(log_path) -> dict[str, dict]:
    """``{series name: {column: array}}``; every array has one entry per logged cycle."""
    cycles, _ = read_episode_log(log_path)
    return {name: {c: cycles[c] for c in cols} for name, cols in SERIES.items()}


def _fmt(v) -> str:
    return v if isinstance(v, str) else repr(v.item() if hasattr(v, "item") else v)


def emit_plots(log_path, out_dir) -> dict[str, Path]:
    """Write ``<stem>_<series>.csv`` files next to each other in ``out_dir``.

    Raises :class:`MalformedLog` for a missing or corrupt log; an episode
    without cycles yields files holding just the header.
    """
    data = series(log_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(log_path).stem
    written = {}
    for name, cols in data.items():
        path = out_dir / f"{stem}_{name}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SERIES[name])
            for row in zip(*(cols[c] for c in SERIES[name])):
                w.writerow([_fmt(v) for v in row])
        written[name] = path
    return written
