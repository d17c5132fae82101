"""Object templates, environment geometry and scripted disturbances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..tactile import marker_grid

RIGID_PIN_STIFFNESS = 0.2  # N/mm per pin, tangential


@dataclass(frozen=True)
class PatchParams:
    """Compliant finger patch: a square grid of independent elastic pins."""

    k_t: float = RIGID_PIN_STIFFNESS  # N/mm per pin
    k_n: float = 5.0  # N/mm per pin
    mu: float = 0.8
    half_width: float = 8.0  # mm
    grid: int = 10
    curvature_radius: float | None = None  # mm; None for a flat contact
    texture_amp: float = 0.0  # relative friction variation
    texture_wavelength: float = 4.0  # mm

    @property
    def stiffness(self) -> float:
        """Total tangential stiffness of one patch, N/mm."""
        return self.k_t * self.grid * self.grid

    def markers(self) -> tuple[np.ndarray, np.ndarray]:
        return marker_grid(self.grid, self.grid, self.half_width,
                           curvature_radius=self.curvature_radius)


@dataclass(frozen=True)
class ObjectTemplate:
    """A prismatic object: an x-z outline extruded along the grasp axis."""

    name: str
    label: str
    outline: np.ndarray  # (M, 2) mm, object frame, counter-clockwise not required
    thickness: float  # mm along the grasp axis
    mass: float  # kg
    inertia: np.ndarray  # (3, 3) kg*mm^2 about the centre of mass
    com: np.ndarray  # (2,) mm, object frame x-z
    patch: PatchParams = field(default_factory=PatchParams)
    liquid_radius: float = 0.0  # mm, travel of the shifting centre of gravity
    liquid_tau: float = 0.5  # s

    def __post_init__(self):
        object.__setattr__(self, "outline", np.asarray(self.outline, dtype=float))
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float))
        object.__setattr__(self, "com", np.asarray(self.com, dtype=float))
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if np.any(np.linalg.eigvalsh(self.inertia) <= 0):
            raise ValueError("inertia must be positive definite")

    def with_patch(self, **changes) -> ObjectTemplate:
        return replace(self, patch=replace(self.patch, **changes))


@dataclass(frozen=True)
class Environment:
    """Static obstacles in the ground frame.

    ``planes`` rows are ``(nx, ny, nz, offset)`` with the free side where
    ``n . p >= offset``; ``boxes`` rows are ``(xmin, ymin, zmin, xmax, ymax, zmax)``.
    """

    planes: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    boxes: np.ndarray = field(default_factory=lambda: np.zeros((0, 6)))
    mu: float = 0.6
    stiffness: float = 20.0  # N/mm
    damping: float = 0.05  # N*s/mm
    slip_velocity: float = 0.1  # mm/s, tanh regularization scale

    def __post_init__(self):
        object.__setattr__(self, "planes", np.asarray(self.planes, dtype=float).reshape(-1, 4))
        object.__setattr__(self, "boxes", np.asarray(self.boxes, dtype=float).reshape(-1, 6))
        if self.mu < 0:
            raise ValueError("friction coefficient must be non-negative")

    @classmethod
    def floor(cls, height: float = 0.0, **kw) -> Environment:
        return cls(planes=[[0.0, 0.0, 1.0, height]], **kw)

    @classmethod
    def empty(cls) -> Environment:
        return cls()


@dataclass(frozen=True)
class CableDisturbance:
    """Slowly varying pull on a body point, like a charging cable.

    The force is ``amplitude * (bias + (1 - bias) * sin(2 pi t / period + phase))``
    along ``direction`` (ground frame).
    """

    amplitude: float  # N
    direction: tuple = (0.0, 0.0, -1.0)
    point: tuple = (0.0, 0.0, 0.0)  # mm, object frame (x, y, z)
    period: float = 2.0  # s
    phase: float = 0.0
    bias: float = 0.5

    def force(self, t: np.ndarray) -> np.ndarray:
        d = np.asarray(self.direction, dtype=float)
        d = d / np.linalg.norm(d)
        wave = self.bias + (1.0 - self.bias) * np.sin(2.0 * np.pi * t / self.period + self.phase)
        return self.amplitude * wave[:, None] * d[None, :]


# -- outlines -------------------------------------------------------------------

def box_outline(x0: float, x1: float, z0: float, z1: float) -> np.ndarray:
    return np.array([[x0, z0], [x1, z0], [x1, z1], [x0, z1]], dtype=float)


def superellipse_outline(a: float, b: float, exponent: float = 4.0, n: int = 64,
                         center=(0.0, 0.0)) -> np.ndarray:
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    c, s = np.cos(t), np.sin(t)
    x = a * np.sign(c) * np.abs(c) ** (2.0 / exponent)
    z = b * np.sign(s) * np.abs(s) ** (2.0 / exponent)
    return np.column_stack([x + center[0], z + center[1]])


def resample_outline(outline: np.ndarray, spacing: float) -> np.ndarray:
    """Points along the closed polygon no further apart than ``spacing``."""
    pts = []
    n = len(outline)
    for i in range(n):
        a, b = outline[i], outline[(i + 1) % n]
        k = max(1, int(math.ceil(np.linalg.norm(b - a) / spacing)))
        for j in range(k):
            pts.append(a + (b - a) * (j / k))
    return np.array(pts)


def points_in_polygon(outline: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Even-odd test, vectorized over points."""
    x, z = pts[:, 0:1], pts[:, 1:2]
    xi, zi = outline[:, 0], outline[:, 1]
    xj, zj = np.roll(xi, 1), np.roll(zi, 1)
    straddle = (zi > z) != (zj > z)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = xi + (z - zi) * (xj - xi) / (zj - zi)
    crossings = straddle & (x < xc)
    return (crossings.sum(axis=1) % 2) == 1


def polygon_area_centroid(outline: np.ndarray) -> tuple[float, np.ndarray]:
    x, z = outline[:, 0], outline[:, 1]
    xn, zn = np.roll(x, -1), np.roll(z, -1)
    cross = x * zn - xn * z
    area = cross.sum() / 2.0
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cz = ((z + zn) * cross).sum() / (6.0 * area)
    return abs(area), np.array([cx, cz])


def plate_inertia(outline: np.ndarray, mass: float, thickness: float, com=None) -> np.ndarray:
    """Inertia tensor (kg*mm^2) of a uniform prism, about ``com``."""
    area, centroid = polygon_area_centroid(outline)
    com = centroid if com is None else np.asarray(com, dtype=float)
    # sample the polygon densely; adequate for plausibility-level inertia
    lo, hi = outline.min(axis=0), outline.max(axis=0)
    gx, gz = np.meshgrid(np.linspace(lo[0], hi[0], 80), np.linspace(lo[1], hi[1], 80))
    pts = np.column_stack([gx.ravel(), gz.ravel()])
    p = pts[points_in_polygon(outline, pts)] - com
    iyy = mass * np.mean(p[:, 0] ** 2 + p[:, 1] ** 2)
    ixx = mass * (np.mean(p[:, 1] ** 2) + thickness ** 2 / 12.0)
    izz = mass * (np.mean(p[:, 0] ** 2) + thickness ** 2 / 12.0)
    return np.diag([ixx, iyy, izz])


def make_template(name, label, outline, thickness, mass, com=None, patch=None, **kw) -> ObjectTemplate:
    outline = np.asarray(outline, dtype=float)
    if com is None:
        com = polygon_area_centroid(outline)[1]
    inertia = plate_inertia(outline, mass, thickness, com)
    return ObjectTemplate(name, label, outline, thickness, mass, inertia, np.asarray(com, float),
                          patch or PatchParams(), **kw)


# -- the benchmark suite ----------------------------------------------------------

SUITE_IDS = ("soft", "shifting_com", "textured", "curved", "asymmetric")


def make_object_suite() -> list[ObjectTemplate]:
    """Five analogues of everyday test objects, grasp point at the body origin.

    All bodies extend mostly along +x from the grasp point so gravity has a
    lever arm and the far end is the one that meets the floor.
    """
    soft = make_template(
        "soft", "board-eraser analogue", box_outline(-20.0, 110.0, -14.0, 14.0), 30.0, 0.04,
        patch=PatchParams(k_t=RIGID_PIN_STIFFNESS / 5.0, k_n=1.0),
    )
    shifting = make_template(
        "shifting_com", "half-filled bottle analogue", box_outline(-20.0, 110.0, -20.0, 20.0), 40.0, 0.1,
        liquid_radius=12.0, liquid_tau=0.4,
    )
    textured = make_template(
        "textured", "knurled-handle analogue", box_outline(-20.0, 100.0, -15.0, 15.0), 25.0, 0.09,
        patch=PatchParams(mu=1.1, texture_amp=0.3, texture_wavelength=3.0),
    )
    curved = make_template(
        "curved", "rounded-shell analogue", superellipse_outline(65.0, 24.0, 2.5, center=(42.0, 0.0)), 35.0, 0.07,
        patch=PatchParams(half_width=6.0, curvature_radius=40.0),
    )
    bracket = np.array([[-20.0, -12.0], [105.0, -12.0], [105.0, 32.0], [80.0, 32.0], [80.0, 12.0], [-20.0, 12.0]])
    asymmetric = make_template("asymmetric", "angle-bracket analogue", bracket, 20.0, 0.08)
    return [soft, shifting, textured, curved, asymmetric]


def suite_template(name: str) -> ObjectTemplate:
    for t in make_object_suite():
        if t.name == name:
            return t
    raise KeyError(f"unknown object template {name!r}; choose from {SUITE_IDS}")
