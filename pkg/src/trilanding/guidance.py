"""Zeroing, LOCK detection and sector classification of zeroed voltage triplets.

Sector layout in the body frame (azimuth counterclockwise from +x):

    S3b   0- 60    S1a  60-120    S2b 120-180
    S3a 180-240    S1b 240-300    S2a 300-360

The "a" wedges point at the antennas (P3 at 90, P2 at 210, P1 at 330) and
the "b" wedges at the opposite edges.  S1a is bisected by the OP3 axis.

The classifier emits commands referred to the LP, the way the bench rig
displays them ("turn LP to the right" moves the LP clockwise around the
drone).  Drone-frame commands are the mirror image.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Iterable

from .detection import VoltageTriplet
from .errors import DomainError


class Sector(str, enum.Enum):
    S1A = "S1a"
    S1B = "S1b"
    S2A = "S2a"
    S2B = "S2b"
    S3A = "S3a"
    S3B = "S3b"
    CENTER = "CENTER"

    @property
    def family(self) -> int:
        return 0 if self is Sector.CENTER else int(self.value[1])


class Rotation(str, enum.Enum):
    LEFT = "LEFT"
    RIGHT = "RIGHT"
    LEFT60 = "LEFT60"
    RIGHT60 = "RIGHT60"
    NONE = "NONE"


class Translation(str, enum.Enum):
    FORWARD = "FORWARD"
    BACKWARD = "BACKWARD"
    NONE = "NONE"


class Frame(str, enum.Enum):
    LP_MOVES = "LP_MOVES"
    DRONE_MOVES = "DRONE_MOVES"


_ROTATION_MIRROR = {
    Rotation.LEFT: Rotation.RIGHT,
    Rotation.RIGHT: Rotation.LEFT,
    Rotation.LEFT60: Rotation.RIGHT60,
    Rotation.RIGHT60: Rotation.LEFT60,
    Rotation.NONE: Rotation.NONE,
}
_TRANSLATION_MIRROR = {
    Translation.FORWARD: Translation.BACKWARD,
    Translation.BACKWARD: Translation.FORWARD,
    Translation.NONE: Translation.NONE,
}


@dataclass(frozen=True)
class CalibrationRefs:
    ref12: float
    ref23: float
    ref31: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(r) for r in (self.ref12, self.ref23, self.ref31)):
            raise DomainError("calibration refs must be finite")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.ref12, self.ref23, self.ref31)


@dataclass(frozen=True)
class GuidanceConfig:
    lock_threshold: float = 0.1  # V
    frame: Frame = Frame.LP_MOVES

    def __post_init__(self) -> None:
        if not self.lock_threshold > 0:
            raise DomainError("lock_threshold must be > 0")
        object.__setattr__(self, "frame", Frame(self.frame))


@dataclass(frozen=True)
class SectorDecision:
    sector: Sector
    rotation: Rotation
    translation: Translation
    locked: bool
    frame: Frame = Frame.LP_MOVES

    def __post_init__(self) -> None:
        if self.locked != (self.sector is Sector.CENTER):
            raise DomainError("locked iff sector is CENTER")
        if self.rotation in (Rotation.LEFT60, Rotation.RIGHT60) and self.sector.family not in (2, 3):
            raise DomainError("60 deg turns only belong to sectors 2 and 3")

    def as_record(self) -> dict:
        return {
            "sector": self.sector.value,
            "rotation": self.rotation.value,
            "translation": self.translation.value,
            "locked": self.locked,
        }

    def message(self) -> str:
        if self.locked:
            return "Lock"
        who = "LP" if self.frame is Frame.LP_MOVES else "drone"
        turn = {
            Rotation.LEFT: "to Left",
            Rotation.RIGHT: "to Right",
            Rotation.LEFT60: "to Left 60 Deg",
            Rotation.RIGHT60: "to Right 60 Deg",
        }[self.rotation]
        parts = [f"Sector {self.sector.value}: Turn {who} {turn}"]
        if self.translation is not Translation.NONE:
            parts.append(self.translation.value.capitalize())
        return ", ".join(parts)


def calibrate(samples: Iterable[VoltageTriplet]) -> CalibrationRefs:
    """Per-channel mean of triplets captured with the array centred over the LP."""
    n = 0
    s12 = s23 = s31 = 0.0
    for v12, v23, v31 in samples:
        s12 += v12
        s23 += v23
        s31 += v31
        n += 1
    if n == 0:
        raise DomainError("calibration needs at least one sample")
    return CalibrationRefs(s12 / n, s23 / n, s31 / n)


def zero(raw: VoltageTriplet, refs: CalibrationRefs) -> VoltageTriplet:
    return VoltageTriplet(raw[0] - refs.ref12, raw[1] - refs.ref23, raw[2] - refs.ref31)


@functools.lru_cache(maxsize=None)
def make_decision(
    sector: Sector, rotation: Rotation, translation: Translation, frame: Frame = Frame.LP_MOVES
) -> SectorDecision:
    """Interned constructor; the decision space is small and hot in simulation loops."""
    return SectorDecision(sector, rotation, translation, sector is Sector.CENTER, frame)


def invert_frame(decision: SectorDecision) -> SectorDecision:
    """Re-express a decision for the other moving party."""
    other = Frame.DRONE_MOVES if decision.frame is Frame.LP_MOVES else Frame.LP_MOVES
    return make_decision(
        decision.sector,
        _ROTATION_MIRROR[decision.rotation],
        _TRANSLATION_MIRROR[decision.translation],
        other,
    )


def to_frame(decision: SectorDecision, frame: Frame) -> SectorDecision:
    return decision if decision.frame is frame else invert_frame(decision)


_LOCK = make_decision(Sector.CENTER, Rotation.NONE, Translation.NONE)


def classify(zeroed: VoltageTriplet, config: GuidanceConfig = GuidanceConfig()) -> SectorDecision:
    """Map a zeroed triplet to a maneuver, following the on-board branch order.

    LOCK is tested first.  Sector 1 wins ties (``<=``), then sector 3 (``<``).
    """
    v12, v23, v31 = zeroed
    a12, a23, a31 = abs(v12), abs(v23), abs(v31)
    thr = config.lock_threshold
    if a12 <= thr and a23 <= thr and a31 <= thr:
        decision = _LOCK
    elif a12 <= a23 and a12 <= a31:
        rotation = Rotation.LEFT if v12 * v23 < 0 else Rotation.RIGHT
        if v23 > 0:
            decision = make_decision(Sector.S1B, rotation, Translation.FORWARD)
        else:
            decision = make_decision(Sector.S1A, rotation, Translation.BACKWARD)
    elif a23 < a31:
        sector = Sector.S2A if v12 > 0 else Sector.S2B
        decision = make_decision(sector, Rotation.RIGHT60, Translation.NONE)
    else:
        sector = Sector.S3A if v12 < 0 else Sector.S3B
        decision = make_decision(sector, Rotation.LEFT60, Translation.NONE)
    return to_frame(decision, config.frame)


_WEDGES = (Sector.S3B, Sector.S1A, Sector.S2B, Sector.S3A, Sector.S1B, Sector.S2A)


def geometric_sector(phi_l: float) -> Sector:
    """Sector wedge containing LP azimuth ``phi_l`` (deg)."""
    return _WEDGES[int((phi_l % 360.0) // 60.0) % 6]
