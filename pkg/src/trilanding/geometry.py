"""Tri-antenna geometry, path differences and pairwise phase shifts.

Body frame: x to the right, y forward (towards antenna 3), z up.  The array
incenter sits at the origin and the landing point (LP) lies below it at
negative z.  Azimuths are measured counterclockwise from +x, in degrees.
Antenna pairs are always ordered (1, 2), (2, 3), (3, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import DomainError

SPEED_OF_LIGHT = 299_792_458.0  # m/s

_TAN30 = math.tan(math.pi / 6)
_COS30 = math.cos(math.pi / 6)


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise DomainError(f"non-finite vector {self!r}")

    def __sub__(self, other: Vec3) -> Vec3:
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __add__(self, other: Vec3) -> Vec3:
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class ArrayGeometry:
    """Equilateral receive array of side ``spacing_d`` at carrier ``frequency``."""

    spacing_d: float = 0.07
    frequency: float = 2.46e9
    propagation_speed: float = SPEED_OF_LIGHT

    def __post_init__(self) -> None:
        if not self.spacing_d > 0:
            raise DomainError(f"spacing_d must be > 0, got {self.spacing_d}")
        if not self.frequency > 0:
            raise DomainError(f"frequency must be > 0, got {self.frequency}")
        if not self.propagation_speed > 0:
            raise DomainError("propagation_speed must be > 0")

    @property
    def wavelength(self) -> float:
        return self.propagation_speed / self.frequency

    @property
    def degrees_per_metre(self) -> float:
        """Phase shift produced by one metre of path difference."""
        return 360.0 * self.frequency / self.propagation_speed

    @cached_property
    def antenna_xy(self) -> tuple[tuple[float, float], ...]:
        d = self.spacing_d
        return (
            (d / 2, -(d / 2) * _TAN30),
            (-d / 2, -(d / 2) * _TAN30),
            (0.0, d / (2 * _COS30)),
        )


@dataclass(frozen=True)
class RelativePose:
    """LP position in the drone body frame plus the drone yaw.

    ``drone_yaw`` is a heading: it grows when the drone turns right
    (clockwise seen from above).
    """

    lp_offset: Vec3
    drone_yaw: float = 0.0

    def __post_init__(self) -> None:
        if not self.lp_offset.z < 0:
            raise DomainError("LP must lie strictly below the array plane (z < 0)")
        if not math.isfinite(self.drone_yaw):
            raise DomainError("drone_yaw must be finite")

    @classmethod
    def from_polar(cls, r: float, phi_deg: float, altitude: float, yaw: float = 0.0) -> RelativePose:
        phi = math.radians(phi_deg)
        return cls(Vec3(r * math.cos(phi), r * math.sin(phi), -altitude), yaw)

    @property
    def drone_altitude(self) -> float:
        return -self.lp_offset.z

    @property
    def horizontal_distance(self) -> float:
        return math.hypot(self.lp_offset.x, self.lp_offset.y)

    @property
    def azimuth(self) -> float:
        """LP azimuth in [0, 360)."""
        return math.degrees(math.atan2(self.lp_offset.y, self.lp_offset.x)) % 360.0


class PathDiffTriplet(NamedTuple):
    dd12: float
    dd23: float
    dd31: float


class PhaseTriplet(NamedTuple):
    th12: float
    th23: float
    th31: float


def antenna_positions(geom: ArrayGeometry) -> tuple[Vec3, Vec3, Vec3]:
    p1, p2, p3 = geom.antenna_xy
    return (Vec3(*p1, 0.0), Vec3(*p2, 0.0), Vec3(*p3, 0.0))


def antenna_distances(geom: ArrayGeometry, x: float, y: float, z: float) -> tuple[float, float, float]:
    """Exact distances from an LP at (x, y, z) to the three antennas."""
    (x1, y1), (x2, y2), (x3, y3) = geom.antenna_xy
    zz = z * z
    return (
        math.sqrt((x - x1) ** 2 + (y - y1) ** 2 + zz),
        math.sqrt((x - x2) ** 2 + (y - y2) ** 2 + zz),
        math.sqrt((x - x3) ** 2 + (y - y3) ** 2 + zz),
    )


def path_differences(geom: ArrayGeometry, pose: RelativePose) -> PathDiffTriplet:
    lp = pose.lp_offset
    d1, d2, d3 = antenna_distances(geom, lp.x, lp.y, lp.z)
    return PathDiffTriplet(d1 - d2, d2 - d3, d3 - d1)


def phase_shifts(geom: ArrayGeometry, pose: RelativePose) -> PhaseTriplet:
    """Signed, unwrapped phase shifts in degrees."""
    k = geom.degrees_per_metre
    dd = path_differences(geom, pose)
    return PhaseTriplet(k * dd.dd12, k * dd.dd23, k * dd.dd31)


def phase_shift_arrays(geom: ArrayGeometry, x, y, z) -> np.ndarray:
    """Vectorised phase shifts; returns an array of shape (3, *broadcast(x, y, z))."""
    x, y, z = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z)))
    zz = z * z
    d = [np.sqrt((x - px) ** 2 + (y - py) ** 2 + zz) for px, py in geom.antenna_xy]
    k = geom.degrees_per_metre
    return k * np.stack([d[0] - d[1], d[1] - d[2], d[2] - d[0]])


def far_field_phase_shifts(geom: ArrayGeometry, pose: RelativePose) -> PhaseTriplet:
    """Plane-wave approximation, used only to cross-check the exact model."""
    lp = pose.lp_offset
    n = lp.norm()
    ux, uy = lp.x / n, lp.y / n
    (x1, y1), (x2, y2), (x3, y3) = geom.antenna_xy
    k = geom.degrees_per_metre
    return PhaseTriplet(
        k * (ux * (x2 - x1) + uy * (y2 - y1)),
        k * (ux * (x3 - x2) + uy * (y3 - y2)),
        k * (ux * (x1 - x3) + uy * (y1 - y3)),
    )


def wrap_phase(theta: float) -> float:
    """Wrap an angle in degrees into (-180, 180]."""
    w = math.fmod(theta, 360.0)
    if w <= -180.0:
        w += 360.0
    elif w > 180.0:
        w -= 360.0
    return w
