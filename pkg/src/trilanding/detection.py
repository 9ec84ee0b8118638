"""Phase detector, ADC and the averaged acquisition cycle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DomainError
from .geometry import PhaseTriplet, wrap_phase
from .rf_link import ReceivedSignal

CHANNELS = 3


@dataclass(frozen=True)
class DetectorModel:
    """Signed multiplier-detector transfer with power-dependent noise.

    The default noise coefficients come from ``sim.calibrate_low_power_noise``
    run once against the 2.2 m link; they put the LOCK failure knee between
    -9 and -8 dBm of transmit power.
    """

    v_center: float = 1.5
    slope: float = 1.3 / 80.0  # V/deg
    v_min: float = 0.2
    v_max: float = 2.8
    usable_range: float = 80.0  # deg
    min_input_power: float = -48.641624714279395  # dBm
    noise_floor_sigma: float = 0.01  # V
    low_power_noise_slope: float = 1.299043330655542  # V/dB

    def __post_init__(self) -> None:
        if not self.v_min < self.v_center < self.v_max:
            raise DomainError("need v_min < v_center < v_max")
        if not self.slope > 0:
            raise DomainError("slope must be > 0")
        if not 0 < self.usable_range <= 90:
            raise DomainError("usable_range must be in (0, 90]")
        if self.noise_floor_sigma < 0 or self.low_power_noise_slope < 0:
            raise DomainError("noise coefficients must be >= 0")

    def noise_sigma(self, input_power: float) -> float:
        deficit = self.min_input_power - input_power
        if deficit > 0:
            return self.noise_floor_sigma + self.low_power_noise_slope * deficit
        return self.noise_floor_sigma


@dataclass(frozen=True)
class AdcModel:
    bits: int = 10
    full_scale: float = 5.0  # V
    sample_period: float = 100e-6  # s

    def __post_init__(self) -> None:
        if not 1 <= self.bits <= 24:
            raise DomainError("bits must be in [1, 24]")
        if not self.full_scale > 0 or not self.sample_period > 0:
            raise DomainError("full_scale and sample_period must be > 0")

    @property
    def levels(self) -> int:
        return 1 << self.bits

    @property
    def lsb(self) -> float:
        return self.full_scale / self.levels


@dataclass(frozen=True)
class SamplerConfig:
    samples_per_channel: int = 10
    channels: int = CHANNELS

    def __post_init__(self) -> None:
        if self.samples_per_channel < 1:
            raise DomainError("samples_per_channel must be >= 1")
        if self.channels != CHANNELS:
            raise DomainError("the tri-antenna always has three detector channels")


class VoltageTriplet(NamedTuple):
    v12: float
    v23: float
    v31: float


def fold_phase(delta_theta: float) -> float:
    """Triangular extension of the detector's linear range beyond +-90 deg."""
    if -90.0 <= delta_theta <= 90.0:
        return delta_theta
    return math.copysign(180.0 - abs(delta_theta), delta_theta)


def _clean_output(delta_theta: float, model: DetectorModel) -> float:
    v = model.v_center + model.slope * fold_phase(delta_theta)
    return min(max(v, model.v_min), model.v_max)


def detect(
    delta_theta: float,
    input_power: float,
    model: DetectorModel,
    noise_source: Optional[np.random.Generator] = None,
) -> float:
    """Detector output voltage for a phase difference in (-180, 180]."""
    v = _clean_output(delta_theta, model)
    sigma = model.noise_sigma(input_power)
    if sigma > 0 and noise_source is not None:
        v += float(noise_source.normal(0.0, sigma))
    return v


def quantize(v: float, adc: AdcModel) -> int:
    """Truncating ADC code."""
    fs = adc.full_scale
    clamped = min(max(v, 0.0), fs)
    return min(int(math.floor(clamped / fs * adc.levels)), adc.levels - 1)


def code_to_volts(code: int, adc: AdcModel) -> float:
    """Mid-tread reconstruction of an ADC code."""
    if not 0 <= code < adc.levels:
        raise DomainError(f"code {code} outside [0, {adc.levels})")
    return (code + 0.5) * adc.lsb


def acquisition_time(adc: AdcModel, sampler: SamplerConfig) -> float:
    return sampler.channels * sampler.samples_per_channel * adc.sample_period


def output_data_rate(adc: AdcModel, sampler: SamplerConfig) -> float:
    return 1.0 / acquisition_time(adc, sampler)


def detector_inputs(phases: PhaseTriplet) -> tuple[float, float, float]:
    """Phase seen by each detector, wrapped to (-180, 180].

    Each detector compares the carrier at antenna i against antenna j.  A
    longer path to antenna i makes its carrier lag, so the detector sees the
    negated geometric phase shift.
    """
    return tuple(wrap_phase(-th) for th in phases)


def _average_channel(
    delta_theta: float,
    input_power: float,
    detector: DetectorModel,
    adc: AdcModel,
    n: int,
    noise_source: Optional[np.random.Generator],
    offset: float,
) -> float:
    clean = _clean_output(delta_theta, detector) + offset
    sigma = detector.noise_sigma(input_power)
    if sigma > 0 and noise_source is not None:
        v = clean + noise_source.normal(0.0, sigma, size=n)
        codes = np.floor(np.clip(v, 0.0, adc.full_scale) / adc.full_scale * adc.levels)
        codes = np.minimum(codes, adc.levels - 1)
        return float((codes.mean() + 0.5) * adc.lsb)
    # identical samples: the average is the single reading
    return code_to_volts(quantize(clean, adc), adc)


def acquire_cycle(
    signal: ReceivedSignal,
    phases: PhaseTriplet,
    detector: DetectorModel,
    adc: AdcModel,
    sampler: SamplerConfig,
    noise_source: Optional[np.random.Generator] = None,
    center_offsets: tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> tuple[VoltageTriplet, float]:
    """Read the three detectors in turn, averaging ``samples_per_channel`` codes each.

    ``center_offsets`` shifts each channel's transfer curve to model the
    per-detector mismatch that calibration zeroing removes.
    """
    powers = signal.pair_power()
    inputs = detector_inputs(phases)
    n = sampler.samples_per_channel
    volts = VoltageTriplet(
        *(
            _average_channel(th, p, detector, adc, n, noise_source, off)
            for th, p, off in zip(inputs, powers, center_offsets)
        )
    )
    return volts, acquisition_time(adc, sampler)
