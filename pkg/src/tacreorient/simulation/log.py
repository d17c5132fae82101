"""Episode log: one comma-separated file, one row per control cycle.

Rows are appended as the episode runs and never rewritten. The ``kind``
column separates control cycles (``cycle``) from optimizer records
(``opt``); each kind fills only its own columns and leaves the rest empty.

Cycle columns, in order:

    tick, sim_time            control-cycle index and time at its end, s
    qw, qx, qy, qz, x, y, z   object attitude (quaternion) and grasp-point
                              position in the ground frame, mm
    grip_force                commanded grip force, N
    s1_left, s2_left          |S1| (mm) and S2 (mm) of the left sensor
    s1_right, s2_right        same for the right sensor
    slip_left, slip_right     accumulated kinetic slip, mm
    error_deg                 orientation error to the target, degrees
    finger                    finger whose metrics drove the controller
    task, constraint, coordinating, probing
                              1 when that action changed the command

Optimizer columns: ``q_before_*``, ``q_after_*``, ``grad_*`` (components 0-2),
``loss_0`` .. ``loss_5`` (probe order +e1, -e1, +e2, -e2, +e3, -e3) and
``alpha`` after the update. ``tick`` is the cycle at which the step ended.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

CYCLE_COLUMNS = (
    "tick", "sim_time", "qw", "qx", "qy", "qz", "x", "y", "z", "grip_force",
    "s1_left", "s2_left", "s1_right", "s2_right", "slip_left", "slip_right", "error_deg",
    "finger", "task", "constraint", "coordinating", "probing",
)
OPT_COLUMNS = (
    tuple(f"q_before_{i}" for i in range(3)) + tuple(f"q_after_{i}" for i in range(3))
    + tuple(f"grad_{i}" for i in range(3)) + tuple(f"loss_{i}" for i in range(6)) + ("alpha",)
)
COLUMNS = ("kind",) + CYCLE_COLUMNS + OPT_COLUMNS


class MalformedLog(ValueError):
    pass


@dataclass
class CycleRecord:
    tick: int
    sim_time: float
    pose7: Sequence[float]
    grip_force: float
    s1_left: float
    s2_left: float
    s1_right: float
    s2_right: float
    slip_left: float
    slip_right: float
    error_deg: float
    finger: str
    task: bool
    constraint: bool
    coordinating: bool
    probing: bool

    def row(self) -> list:
        flags = [int(self.task), int(self.constraint), int(self.coordinating), int(self.probing)]
        values = [self.sim_time, *self.pose7, self.grip_force, self.s1_left, self.s2_left,
                  self.s1_right, self.s2_right, self.slip_left, self.slip_right, self.error_deg]
        return (["cycle", self.tick] + [repr(float(v)) for v in values] + [self.finger] + flags
                + [""] * len(OPT_COLUMNS))


class EpisodeLog:
    """Append-only writer. Use as a context manager or call :meth:`close`."""

    def __init__(self, path: str | os.PathLike | None):
        self.path = path
        self._fh = None
        self._writer = None
        self.rows = 0
        if path is not None:
            self._fh = open(path, "w", encoding="utf-8", newline="")
            self._writer = csv.writer(self._fh, lineterminator="\n")
            self._writer.writerow(COLUMNS)

    def cycle(self, record: CycleRecord) -> None:
        self.rows += 1
        if self._writer is not None:
            self._writer.writerow(record.row())

    def optimizer(self, tick: int, q_before, q_after, grad, losses, alpha: float) -> None:
        if self._writer is None:
            return
        values = [*q_before, *q_after, *grad, *losses, alpha]
        self._writer.writerow(["opt", tick] + [""] * (len(CYCLE_COLUMNS) - 1)
                              + [repr(float(v)) for v in values])

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None
            self._writer = None

    def __enter__(self) -> EpisodeLog:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_episode_log(path) -> tuple[dict[str, np.ndarray], list[dict[str, str]]]:
    """Parse a log into cycle columns (as arrays) and raw optimizer rows."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError as exc:
        raise MalformedLog(f"no log at {path}") from exc
    if not rows or tuple(rows[0]) != COLUMNS:
        raise MalformedLog(f"{path}: missing or unexpected header")
    cycles, opts = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(COLUMNS):
            raise MalformedLog(f"{path}:{lineno}: expected {len(COLUMNS)} fields, got {len(row)}")
        rec = dict(zip(COLUMNS, row))
        if rec["kind"] == "cycle":
            cycles.append(rec)
        elif rec["kind"] == "opt":
            opts.append(rec)
        else:
            raise MalformedLog(f"{path}:{lineno}: unknown record kind {rec['kind']!r}")
    out: dict[str, np.ndarray] = {}
    try:
        for name in CYCLE_COLUMNS:
            values = [c[name] for c in cycles]
            if name == "finger":
                out[name] = np.array(values, dtype=str)
            elif name in ("tick", "task", "constraint", "coordinating", "probing"):
                out[name] = np.array([int(v) for v in values], dtype=int)
            else:
                out[name] = np.array([float(v) for v in values], dtype=float)
    except ValueError as exc:
        raise MalformedLog(f"{path}: non-numeric cycle field") from exc
    return out, opts

