"""Marker-field tactile model and slip-tendency metrics.

A marker field is the set of tracked dots on one finger's gel: reference
positions, current displacements and local surface normals, all in that
finger's sensor frame (mm). Two numbers summarise it for the controller:

* ``s1``, the mean displacement (tangential slip tendency), and
* ``s2``, the mean moment of displacement about the contact normal, using
  the unit vector from each marker towards the marker centroid (rotational
  slip tendency).
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

LEFT = "left"
RIGHT = "right"
FINGERS = (LEFT, RIGHT)

TANGENT_FLOOR = 1e-6  # mm
CENTROID_EPS = 1e-9  # mm
NORMAL_EPS = 1e-9


class TactileError(ValueError):
    pass


class TooFewMarkers(TactileError):
    pass


class DegenerateNormal(TactileError):
    pass


class NoTangentialComponent(TactileError):
    pass


@dataclass(frozen=True, eq=False)
class MarkerField:
    finger: str
    ref_positions: np.ndarray  # (N, 3) mm
    displacements: np.ndarray  # (N, 3) mm
    normals: np.ndarray  # (N, 3) unit

    def __post_init__(self):
        if self.finger not in FINGERS:
            raise ValueError(f"unknown finger {self.finger!r}")
        arrays = []
        for name in ("ref_positions", "displacements", "normals"):
            a = np.array(getattr(self, name), dtype=float)
            if a.ndim != 2 or a.shape[1] != 3:
                raise ValueError(f"{name} must have shape (N, 3), got {a.shape}")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
            arrays.append(a)
        n = {len(a) for a in arrays}
        if len(n) != 1:
            raise ValueError("ref_positions, displacements and normals differ in length")
        norms = np.linalg.norm(self.normals, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("marker normals must be unit vectors")

    @property
    def n_markers(self) -> int:
        return len(self.ref_positions)

    def with_displacements(self, displacements) -> MarkerField:
        return MarkerField(self.finger, self.ref_positions, displacements, self.normals)


@dataclass(frozen=True, eq=False)
class SlipMetrics:
    s1: np.ndarray  # mm, sensor frame
    s2: float  # mm
    normal: np.ndarray  # unit mean normal the moment was taken about

    @property
    def s1_norm(self) -> float:
        return float(np.linalg.norm(self.s1))


def marker_grid(
    nx: int = 10,
    ny: int = 10,
    half_width: float = 8.0,
    half_height: float | None = None,
    curvature_radius: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform grid of marker reference positions and normals in a sensor frame.

    The grid lies in the sensor x-y plane with normal +z. With
    ``curvature_radius`` the normals are tilted as if the gel were pressed
    against a sphere of that radius, which is how a curved object shows up
    in the normal field.
    """
    half_height = half_width if half_height is None else half_height
    xs = np.linspace(-half_width, half_width, nx)
    ys = np.linspace(-half_height, half_height, ny)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    ref = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)])
    if curvature_radius is None:
        normals = np.tile([0.0, 0.0, 1.0], (len(ref), 1))
    else:
        normals = np.column_stack([-ref[:, 0], -ref[:, 1], np.full(len(ref), curvature_radius)])
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return ref, normals


def mean_normal(field: MarkerField) -> np.ndarray:
    n = field.normals.mean(axis=0)
    norm = np.linalg.norm(n)
    if norm < NORMAL_EPS:
        raise DegenerateNormal(f"mean marker normal has norm {norm:.3g}")
    return n / norm


def slip_metrics(field: MarkerField) -> SlipMetrics:
    if field.n_markers < 3:
        raise TooFewMarkers(f"need at least 3 markers, got {field.n_markers}")
    n = mean_normal(field)
    d = field.displacements
    s1 = d.mean(axis=0)

    to_centroid = field.ref_positions.mean(axis=0) - field.ref_positions
    dist = np.linalg.norm(to_centroid, axis=1)
    keep = dist >= CENTROID_EPS
    if not np.any(keep):
        return SlipMetrics(s1, 0.0, n)
    r_hat = to_centroid[keep] / dist[keep, None]
    moments = np.cross(r_hat, d[keep]) @ n
    s2 = float(moments.sum() / np.count_nonzero(keep))
    return SlipMetrics(s1, s2, n)


def tangential_direction(metrics: SlipMetrics, normal) -> np.ndarray:
    """Unit projection of ``s1`` onto the contact tangent plane."""
    n = np.asarray(normal, dtype=float)
    s1 = metrics.s1
    t = s1 - np.dot(s1, n) * n
    norm = np.linalg.norm(t)
    if norm <= TANGENT_FLOOR:
        raise NoTangentialComponent(f"tangential slip {norm:.3g} mm below floor")
    return t / norm


def select_signal_finger(left: SlipMetrics, right: SlipMetrics) -> tuple[str, SlipMetrics]:
    # ties go to the left finger
    if right.s1_norm > left.s1_norm:
        return RIGHT, right
    return LEFT, left


# -- marker trace replay ------------------------------------------------------
#
# One record per tick per finger:
#
#   tick,finger,N
#   ref_x,ref_y,ref_z,disp_x,disp_y,disp_z,normal_x,normal_y,normal_z   (N rows)
#
# Floats are written with repr(), which round-trips bit-exactly.


def _fmt(values: Iterable[float]) -> str:
    return ",".join(repr(float(v)) for v in values)


def write_marker_trace(dest, records: Iterable[tuple[int, MarkerField]]) -> None:
    """Write ``(tick, field)`` records to a path or text stream."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            write_marker_trace(fh, records)
        return
    for tick, field in records:
        dest.write(f"{int(tick)},{field.finger},{field.n_markers}\n")
        rows = np.hstack([field.ref_positions, field.displacements, field.normals])
        for row in rows:
            dest.write(_fmt(row) + "\n")


def iter_marker_trace(src) -> Iterator[tuple[int, MarkerField]]:
    if isinstance(src, (str, os.PathLike)):
        with open(src, encoding="utf-8") as fh:
            yield from iter_marker_trace(fh)
        return
    lines = (line.strip() for line in src)
    for header in lines:
        if not header:
            continue
        try:
            tick_s, finger, n_s = header.split(",")
            n = int(n_s)
            rows = np.array(
                [[float(x) for x in next(lines).split(",")] for _ in range(n)], dtype=float
            ).reshape(n, 9)
        except (ValueError, StopIteration) as exc:
            raise ValueError(f"malformed marker trace record at {header!r}") from exc
        yield int(tick_s), MarkerField(finger, rows[:, 0:3], rows[:, 3:6], rows[:, 6:9])


def read_marker_trace(src) -> list[tuple[int, MarkerField]]:
    return list(iter_marker_trace(src))


def dumps_marker_trace(records) -> str:
    buf = io.StringIO()
    write_marker_trace(buf, records)
    return buf.getvalue()
