"""Amplitude side of the beacon link.

The LP transmits circular polarization and the drone receives with three
co-oriented linear patches, so the mean coupling loss is a fixed 3 dB and
only the beacon's axial ratio makes the received level ripple as the drone
yaws.  Antenna gains are treated as flat over the tracking cone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DomainError
from .geometry import SPEED_OF_LIGHT, ArrayGeometry, RelativePose, antenna_distances, wrap_phase

# Quadratic through AR(70 deg) = 2 dB with a 0.05 dB boresight value; keeps the
# axial ratio under 0.35 dB across the 26.5 deg tracking cone of the 7 cm array.
DEFAULT_AR0_DB = 0.05
DEFAULT_AR_QUAD = (2.0 - DEFAULT_AR0_DB) / 70.0**2


@dataclass(frozen=True)
class AxialRatioProfile:
    ar0_db: float = DEFAULT_AR0_DB
    quad_coeff: float = DEFAULT_AR_QUAD  # dB / deg^2
    table_override: Optional[tuple[tuple[float, float], ...]] = None

    def __post_init__(self) -> None:
        if self.ar0_db < 0 or self.quad_coeff < 0:
            raise DomainError("axial ratio profile must be non-negative and non-decreasing")
        if self.table_override is not None:
            table = tuple((float(a), float(v)) for a, v in self.table_override)
            angles = [a for a, _ in table]
            values = [v for _, v in table]
            if len(table) < 2 or any(b <= a for a, b in zip(angles, angles[1:])):
                raise DomainError("table_override needs >= 2 points with increasing angles")
            if angles[0] < 0 or any(v < 0 for v in values):
                raise DomainError("table_override angles and values must be >= 0")
            if any(b < a for a, b in zip(values, values[1:])):
                raise DomainError("table_override must be non-decreasing in angle")
            object.__setattr__(self, "table_override", table)


@dataclass(frozen=True)
class LinkBudgetModel:
    tx_power: float = 0.0  # dBm
    tx_gain: float = 5.0  # dBi, not given by the hardware description
    rx_gain: float = 5.0  # dBi
    pol_mismatch_mean: float = 3.0  # dB
    ar_profile: AxialRatioProfile = field(default_factory=AxialRatioProfile)

    def __post_init__(self) -> None:
        for name in ("tx_power", "tx_gain", "rx_gain"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if not self.pol_mismatch_mean >= 0:
            raise DomainError("pol_mismatch_mean must be >= 0")


class ReceivedSignal(NamedTuple):
    amplitude_dbm: tuple[float, float, float]
    phase_deg: tuple[float, float, float]

    def pair_power(self) -> tuple[float, float, float]:
        """Detector input level per pair (12, 23, 31): the weaker of the two inputs."""
        a1, a2, a3 = self.amplitude_dbm
        return (min(a1, a2), min(a2, a3), min(a3, a1))


def free_space_loss(distance: float, frequency: float, propagation_speed: float = SPEED_OF_LIGHT) -> float:
    """Friis spreading loss in dB."""
    if not distance > 0:
        raise DomainError(f"distance must be > 0, got {distance}")
    if not frequency > 0:
        raise DomainError(f"frequency must be > 0, got {frequency}")
    return 20.0 * math.log10(4.0 * math.pi * distance * frequency / propagation_speed)


def axial_ratio(profile: AxialRatioProfile, pointing_angle: float) -> float:
    """Beacon axial ratio in dB at ``pointing_angle`` degrees off boresight."""
    if not abs(pointing_angle) <= 90.0:
        raise DomainError(f"pointing angle must be within +-90 deg, got {pointing_angle}")
    theta = abs(pointing_angle)
    if profile.table_override is not None:
        angles, values = zip(*profile.table_override)
        ar = float(np.interp(theta, angles, values))
    else:
        ar = profile.ar0_db + profile.quad_coeff * theta * theta
    return max(ar, 0.0)


def polarization_ripple(ar_db: float, yaw: float) -> float:
    """Deviation from the mean CP-to-LP loss; peak-to-peak equals ``ar_db``."""
    if ar_db < 0:
        raise DomainError("axial ratio must be >= 0 dB")
    return 0.5 * ar_db * math.cos(math.radians(2.0 * yaw))


def pointing_angles(geom: ArrayGeometry, pose: RelativePose) -> tuple[float, float, float]:
    lp = pose.lp_offset
    dists = antenna_distances(geom, lp.x, lp.y, lp.z)
    return tuple(math.degrees(math.acos(min(1.0, -lp.z / d))) for d in dists)


def received_signal(geom: ArrayGeometry, pose: RelativePose, budget: LinkBudgetModel) -> ReceivedSignal:
    lp = pose.lp_offset
    dists = antenna_distances(geom, lp.x, lp.y, lp.z)
    base = budget.tx_power + budget.tx_gain + budget.rx_gain - budget.pol_mismatch_mean
    k = geom.degrees_per_metre
    amps = []
    phases = []
    for d in dists:
        theta = math.degrees(math.acos(min(1.0, -lp.z / d)))
        ripple = polarization_ripple(axial_ratio(budget.ar_profile, theta), pose.drone_yaw)
        amps.append(base - free_space_loss(d, geom.frequency, geom.propagation_speed) - ripple)
        # carrier lags by the path length
        phases.append(wrap_phase(-k * d))
    return ReceivedSignal(tuple(amps), tuple(phases))


def amplitude_spread(signal: ReceivedSignal) -> float:
    return max(signal.amplitude_dbm) - min(signal.amplitude_dbm)


def yaw_amplitude_variation(
    geom: ArrayGeometry, pose: RelativePose, budget: LinkBudgetModel, yaws: Sequence[float] | None = None
) -> float:
    """Largest per-antenna amplitude swing (dB) as the drone yaws in place."""
    if yaws is None:
        yaws = np.arange(0.0, 360.0, 1.0)
    lp = pose.lp_offset
    levels = np.array(
        [received_signal(geom, RelativePose(lp, float(y)), budget).amplitude_dbm for y in yaws]
    )
    return float(np.max(levels.max(axis=0) - levels.min(axis=0)))
