"""Design curves for the tri-antenna: tracking boundary, radii, cone, sensitivity.

The tracking boundary at a given altitude is where the first antenna pair
reaches the phase limit.  Seen from above it has three-fold symmetry with
two families of lobes: the lobes along the antenna directions (90, 210 and
330 deg) and the lobes along the edge directions (30, 150 and 270 deg).  In
the far field both families have the same radius.  Near the array the
edge-direction lobes come out a few millimetres longer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .detection import AdcModel
from .errors import DomainError, UnboundedBoundaryError
from .geometry import ArrayGeometry, phase_shift_arrays

# Altitude-independent quantities are evaluated this many array spacings up.
FAR_FIELD_FACTOR = 100.0
SEARCH_LIMIT_FACTOR = 100.0
RADIUS_XTOL = 1e-7  # m

# Azimuths of the radii quoted by the published design figures: 30 deg off
# the OP3 axis (short lobe) and along it.
REFERENCE_MIN_AZIMUTH = 60.0
REFERENCE_MAX_AZIMUTH = 90.0


@dataclass(frozen=True)
class TrackingBoundary:
    altitude: float
    phase_limit: float
    samples: tuple[tuple[float, float], ...]  # (phi_deg, r_max_m)

    @cached_property
    def phis(self) -> np.ndarray:
        return np.array([p for p, _ in self.samples])

    @cached_property
    def radii(self) -> np.ndarray:
        return np.array([r for _, r in self.samples])

    @cached_property
    def _uniform_step(self) -> Optional[float]:
        phis = self.phis
        step = 360.0 / len(phis)
        if phis[0] == 0.0 and np.allclose(np.diff(phis), step):
            return step
        return None

    @cached_property
    def _radii_list(self) -> list:
        return self.radii.tolist()

    def radius_at(self, phi: float) -> float:
        """Periodic linear interpolation of the sampled boundary."""
        step = self._uniform_step
        if step is None:
            return float(np.interp(phi % 360.0, self.phis, self.radii, period=360.0))
        radii = self._radii_list
        u = (phi % 360.0) / step
        i = int(u) % len(radii)
        frac = u - int(u)
        return radii[i] + frac * (radii[(i + 1) % len(radii)] - radii[i])


@dataclass(frozen=True)
class DesignPoint:
    spacing_d: float
    r_min: float
    r_max: float
    sensitivity: float  # mV/cm
    adc_step_distance: dict  # bits -> cm/step


def _check(altitude: float, phase_limit: float) -> None:
    if not altitude > 0:
        raise DomainError(f"altitude must be > 0, got {altitude}")
    if not 0 < phase_limit <= 90:
        raise DomainError(f"phase_limit must be in (0, 90], got {phase_limit}")


def max_abs_phase(geom: ArrayGeometry, r, phi_deg, altitude: float) -> np.ndarray:
    phi = np.radians(phi_deg)
    th = phase_shift_arrays(geom, r * np.cos(phi), r * np.sin(phi), -altitude)
    return np.max(np.abs(th), axis=0)


def boundary_radii(
    geom: ArrayGeometry, altitude: float, phis: Sequence[float] | np.ndarray, phase_limit: float = 80.0
) -> np.ndarray:
    """Boundary radius for every azimuth in ``phis``, by simultaneous bisection."""
    _check(altitude, phase_limit)
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    hi = np.full(phis.shape, SEARCH_LIMIT_FACTOR * altitude)
    lo = np.zeros(phis.shape)
    if np.any(max_abs_phase(geom, hi, phis, altitude) < phase_limit):
        raise UnboundedBoundaryError(
            f"phase limit {phase_limit} deg not reached within r = {hi[0]:.3g} m"
        )
    while np.max(hi - lo) > RADIUS_XTOL:
        mid = 0.5 * (lo + hi)
        over = max_abs_phase(geom, mid, phis, altitude) >= phase_limit
        hi = np.where(over, mid, hi)
        lo = np.where(over, lo, mid)
    return 0.5 * (lo + hi)


def boundary_radius(geom: ArrayGeometry, altitude: float, phi: float, phase_limit: float = 80.0) -> float:
    return float(boundary_radii(geom, altitude, [phi], phase_limit)[0])


def tracking_boundary(
    geom: ArrayGeometry, altitude: float, phase_limit: float = 80.0, step: float = 1.0
) -> TrackingBoundary:
    if not 0 < step <= 60:
        raise DomainError("step must be in (0, 60] deg")
    phis = np.arange(0.0, 360.0, step)
    radii = boundary_radii(geom, altitude, phis, phase_limit)
    return TrackingBoundary(altitude, phase_limit, tuple(zip(phis.tolist(), radii.tolist())))


def _refine(geom: ArrayGeometry, altitude: float, phase_limit: float, phi0: float, step: float, sign: float):
    res = minimize_scalar(
        lambda p: sign * boundary_radius(geom, altitude, p, phase_limit),
        bounds=(phi0 - step, phi0 + step),
        method="bounded",
        options={"xatol": 1e-4},
    )
    return float(res.x) % 360.0, sign * float(res.fun)


def boundary_extrema(
    geom: ArrayGeometry, altitude: float, phase_limit: float = 80.0, step: float = 1.0
) -> tuple[tuple[float, float], tuple[float, float]]:
    """((phi_min, r_min), (phi_max, r_max)) over the whole boundary."""
    boundary = tracking_boundary(geom, altitude, phase_limit, step)
    radii = boundary.radii
    phis = boundary.phis
    i_min, i_max = int(np.argmin(radii)), int(np.argmax(radii))
    lo = _refine(geom, altitude, phase_limit, phis[i_min], step, 1.0)
    hi = _refine(geom, altitude, phase_limit, phis[i_max], step, -1.0)
    lo = min(lo, (phis[i_min], radii[i_min]), key=lambda t: t[1])
    hi = max(hi, (phis[i_max], radii[i_max]), key=lambda t: t[1])
    return (float(lo[0]), float(lo[1])), (float(hi[0]), float(hi[1]))


def min_max_radius(
    geom: ArrayGeometry, altitude: float, phase_limit: float = 80.0, step: float = 1.0
) -> tuple[float, float]:
    (_, r_min), (_, r_max) = boundary_extrema(geom, altitude, phase_limit, step)
    return r_min, r_max


def reference_radii(geom: ArrayGeometry, altitude: float, phase_limit: float = 80.0) -> tuple[float, float]:
    """Boundary radii 30 deg off the OP3 axis and along it.

    These are the two azimuths behind the published min/max tracking
    distances.  They match the true extrema in the far field; close to the
    array the true maximum sits on the edge-direction lobe instead.
    """
    r = boundary_radii(geom, altitude, [REFERENCE_MIN_AZIMUTH, REFERENCE_MAX_AZIMUTH], phase_limit)
    return float(r[0]), float(r[1])


def cone_half_angle(
    geom: ArrayGeometry, phase_limit: float = 80.0, altitude_factor: float = FAR_FIELD_FACTOR
) -> float:
    """Semi-vertical angle (deg) of the tracking cone, from its widest lobe."""
    z = altitude_factor * geom.spacing_d
    _, r_max = min_max_radius(geom, z, phase_limit)
    return math.degrees(math.atan2(r_max, z))


def sensitivity(
    geom: ArrayGeometry, altitude: float, delta_vd: float = 2.6, phase_limit: float = 80.0
) -> float:
    """Detector swing per unit displacement across the full tracking diameter, mV/cm."""
    if not delta_vd > 0:
        raise DomainError("delta_vd must be > 0")
    _, r_max = min_max_radius(geom, altitude, phase_limit)
    return delta_vd * 1e3 / (2.0 * r_max * 1e2)


def adc_step_distance(sensitivity_mv_per_cm: float, adc: AdcModel) -> float:
    """Horizontal travel (cm) needed to move the ADC by one code."""
    if not sensitivity_mv_per_cm > 0:
        raise DomainError("sensitivity must be > 0")
    return adc.lsb * 1e3 / sensitivity_mv_per_cm


def lock_region_radius(
    geom: ArrayGeometry, altitude: float, lock_threshold: float = 0.1, delta_vd: float = 2.6,
    phase_limit: float = 80.0,
) -> float:
    """Horizontal radius (m) inside which every zeroed voltage is within the LOCK band."""
    volts_per_metre = sensitivity(geom, altitude, delta_vd, phase_limit) * 0.1
    return lock_threshold / volts_per_metre


def design_table(
    d_values: Iterable[float],
    altitude: float = 10.0,
    frequency: float = 2.46e9,
    bit_depths: Sequence[int] = (8, 10, 12),
    phase_limit: float = 80.0,
    delta_vd: float = 2.6,
    full_scale: float = 5.0,
) -> list[DesignPoint]:
    d_values = [float(d) for d in d_values]
    if not d_values:
        raise DomainError("d_values must not be empty")
    if any(b <= a for a, b in zip(d_values, d_values[1:])):
        raise DomainError("d_values must be strictly ascending")
    rows = []
    for d in d_values:
        geom = ArrayGeometry(spacing_d=d, frequency=frequency)
        r_min, r_max = min_max_radius(geom, altitude, phase_limit)
        sens = delta_vd * 1e3 / (2.0 * r_max * 1e2)
        steps = {b: adc_step_distance(sens, AdcModel(bits=b, full_scale=full_scale)) for b in bit_depths}
        rows.append(DesignPoint(d, r_min, r_max, sens, steps))
    return rows
