"""Closed-loop landing episodes: link -> detectors -> guidance -> kinematics.

Kinematic conventions.  ``drone_yaw`` is a heading, so a RIGHT turn raises
it and swings the LP counterclockwise in the body frame.  FORWARD flies the
drone along body +y (towards antenna 3), which moves the LP towards -y.

Maneuver policy on top of the bang-bang guidance:

* 60 deg turns are committed: once started they run to completion over
  ``ceil(60 / (yaw_rate * dt))`` ticks without translation.  If the LP is
  still outside sector 1 afterwards (it started on a wedge edge), the drone
  keeps yawing the same way at ``yaw_rate`` until sector 1 shows up.
* In sector 1 the drone first yaws until the rotation command flips sign
  (the LP crossed the body y-axis), and only then starts translating.
  Translating while still misaligned drags the LP azimuth towards the wedge
  edge faster than the yaw can pull it back once the LP is close, which
  ends in an endless series of 60 deg turns.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .design_analysis import tracking_boundary
from .detection import (
    AdcModel,
    DetectorModel,
    SamplerConfig,
    VoltageTriplet,
    acquire_cycle,
    acquisition_time,
    quantize,
)
from .errors import DomainError, InvariantViolation
from .geometry import ArrayGeometry, PhaseTriplet, RelativePose, Vec3, antenna_distances
from .guidance import (
    CalibrationRefs,
    Frame,
    GuidanceConfig,
    Rotation,
    SectorDecision,
    Translation,
    calibrate,
    classify,
    make_decision,
    to_frame,
    zero,
)
from .rf_link import LinkBudgetModel, ReceivedSignal, received_signal


class DescentPolicy(str, enum.Enum):
    HOLD = "HOLD"
    DESCEND_ON_LOCK = "DESCEND_ON_LOCK"


@dataclass(frozen=True)
class Scenario:
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    budget: LinkBudgetModel = field(default_factory=LinkBudgetModel)
    detector: DetectorModel = field(default_factory=DetectorModel)
    adc: AdcModel = field(default_factory=AdcModel)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    initial_pose: RelativePose = field(default_factory=lambda: RelativePose.from_polar(0.0, 0.0, 0.46))
    yaw_rate: float = 30.0  # deg/s
    speed: float = 0.2  # m/s
    descent_rate: float = 0.1  # m/s
    descent_policy: DescentPolicy = DescentPolicy.HOLD
    decision_period: float = 0.003  # s
    max_time: float = 30.0  # s
    rng_seed: int = 0
    min_altitude: float = 0.05  # m
    jitter_sigma: float = 0.0  # m per tick, horizontal
    center_offsets: tuple[float, float, float] = (0.0, 0.0, 0.0)  # V per detector
    refs: Optional[CalibrationRefs] = None
    calibration_cycles: int = 100

    def __post_init__(self) -> None:
        object.__setattr__(self, "descent_policy", DescentPolicy(self.descent_policy))
        object.__setattr__(self, "center_offsets", tuple(float(v) for v in self.center_offsets))
        if not (self.yaw_rate > 0 and self.speed > 0 and self.descent_rate > 0):
            raise DomainError("yaw_rate, speed and descent_rate must be > 0")
        if not self.max_time > 0:
            raise DomainError("max_time must be > 0")
        if self.decision_period < acquisition_time(self.adc, self.sampler) * (1 - 1e-12):
            raise DomainError("decision_period shorter than one acquisition cycle")
        if not self.min_altitude > 0:
            raise DomainError("min_altitude must be > 0")
        if self.jitter_sigma < 0:
            raise DomainError("jitter_sigma must be >= 0")
        if len(self.center_offsets) != 3:
            raise DomainError("center_offsets needs three values")
        if self.calibration_cycles < 1:
            raise DomainError("calibration_cycles must be >= 1")

    @property
    def noiseless(self) -> bool:
        d = self.detector
        return d.noise_floor_sigma == 0 and d.low_power_noise_slope == 0

    def replace(self, **changes) -> Scenario:
        return dataclasses.replace(self, **changes)


class TraceRecord(NamedTuple):
    time: float
    pose: RelativePose
    raw: VoltageTriplet
    zeroed: VoltageTriplet
    codes: tuple[int, int, int]
    decision: SectorDecision


COMMAND_KEYS = ("LEFT", "RIGHT", "LEFT60", "RIGHT60", "FORWARD", "BACKWARD")


@dataclass(frozen=True)
class EpisodeMetrics:
    locked: bool
    time_to_first_lock: Optional[float]
    final_horizontal_error: float
    path_length: float
    command_counts: dict
    left_tracking_area: bool
    duration: float
    ticks: int

    def as_record(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class BatchResult:
    metrics: list
    lock_rate: float
    mean_time_to_lock: Optional[float]
    p50_time_to_lock: Optional[float]
    p90_time_to_lock: Optional[float]

    def summary(self) -> dict:
        return {
            "episodes": len(self.metrics),
            "lock_rate": self.lock_rate,
            "mean_time_to_lock": self.mean_time_to_lock,
            "p50_time_to_lock": self.p50_time_to_lock,
            "p90_time_to_lock": self.p90_time_to_lock,
        }


_SLOW_TURN = {Rotation.LEFT60: Rotation.LEFT, Rotation.RIGHT60: Rotation.RIGHT}


def turn_ticks(scenario: Scenario, dt: float) -> int:
    return math.ceil(60.0 / (scenario.yaw_rate * dt) - 1e-9)


def step(pose: RelativePose, decision: SectorDecision, scenario: Scenario, dt: float) -> RelativePose:
    """Advance the drone one tick under ``decision``."""
    if not dt > 0:
        raise DomainError("dt must be > 0")
    d = to_frame(decision, Frame.DRONE_MOVES)
    lp = pose.lp_offset
    x, y, z = lp.x, lp.y, lp.z
    yaw = pose.drone_yaw

    turn = 0.0
    if d.rotation is Rotation.RIGHT:
        turn = scenario.yaw_rate * dt
    elif d.rotation is Rotation.LEFT:
        turn = -scenario.yaw_rate * dt
    elif d.rotation is Rotation.RIGHT60:
        turn = 60.0 / turn_ticks(scenario, dt)
    elif d.rotation is Rotation.LEFT60:
        turn = -60.0 / turn_ticks(scenario, dt)
    if turn:
        c, s = math.cos(math.radians(turn)), math.sin(math.radians(turn))
        x, y = c * x - s * y, s * x + c * y
        yaw += turn

    if d.translation is Translation.FORWARD:
        y -= scenario.speed * dt
    elif d.translation is Translation.BACKWARD:
        y += scenario.speed * dt

    if d.locked and scenario.descent_policy is DescentPolicy.DESCEND_ON_LOCK and -z > scenario.min_altitude:
        z = min(z + scenario.descent_rate * dt, -scenario.min_altitude)

    if x == lp.x and y == lp.y and z == lp.z and yaw == pose.drone_yaw:
        return pose
    return RelativePose(Vec3(x, y, z), yaw)


class _BoundaryCache:
    """Tracking boundaries cached per 1 cm altitude band."""

    def __init__(self, scenario: Scenario):
        self._geom = scenario.geometry
        self._limit = scenario.detector.usable_range
        self._bands: dict = {}

    def contains(self, pose: RelativePose) -> bool:
        band = max(1, round(pose.drone_altitude * 100))
        boundary = self._bands.get(band)
        if boundary is None:
            boundary = tracking_boundary(self._geom, band / 100.0, self._limit, step=1.0)
            self._bands[band] = boundary
        return pose.horizontal_distance <= boundary.radius_at(pose.azimuth)


def _signal_and_phases(scenario: Scenario, pose: RelativePose, need_power: bool):
    geom = scenario.geometry
    lp = pose.lp_offset
    d1, d2, d3 = antenna_distances(geom, lp.x, lp.y, lp.z)
    k = geom.degrees_per_metre
    phases = PhaseTriplet(k * (d1 - d2), k * (d2 - d3), k * (d3 - d1))
    if need_power:
        signal = received_signal(geom, pose, scenario.budget)
    else:
        # amplitudes cannot affect a noiseless detector
        signal = ReceivedSignal((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
    return signal, phases


def acquire_at(
    scenario: Scenario, pose: RelativePose, noise_source: Optional[np.random.Generator]
) -> VoltageTriplet:
    signal, phases = _signal_and_phases(scenario, pose, not scenario.noiseless)
    raw, _ = acquire_cycle(
        signal, phases, scenario.detector, scenario.adc, scenario.sampler,
        noise_source, scenario.center_offsets,
    )
    return raw


def centered_pose(scenario: Scenario) -> RelativePose:
    p = scenario.initial_pose
    return RelativePose(Vec3(0.0, 0.0, p.lp_offset.z), p.drone_yaw)


def calibrate_fixture(
    scenario: Scenario, cycles: Optional[int] = None, noise_source: Optional[np.random.Generator] = None
) -> CalibrationRefs:
    """Zeroing references from acquisitions with the array centred over the LP."""
    if noise_source is None:
        noise_source = _streams(scenario.rng_seed)[0]
    n = scenario.calibration_cycles if cycles is None else cycles
    pose = centered_pose(scenario)
    return calibrate(acquire_at(scenario, pose, noise_source) for _ in range(n))


def _streams(seed: int) -> list:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]


def run(scenario: Scenario, record_trace: bool = True) -> tuple[list, EpisodeMetrics]:
    cal_rng, noise_rng, jitter_rng = _streams(scenario.rng_seed)
    refs = scenario.refs if scenario.refs is not None else calibrate_fixture(scenario, noise_source=cal_rng)
    noise = None if scenario.noiseless else noise_rng
    need_power = not scenario.noiseless
    dt = scenario.decision_period
    n_turn = turn_ticks(scenario, dt)
    cfg = scenario.guidance
    adc = scenario.adc
    boundaries = _BoundaryCache(scenario)

    pose = scenario.initial_pose
    started_inside = boundaries.contains(pose)
    left_area = not started_inside
    trace: list = []
    counts = Counter({k: 0 for k in COMMAND_KEYS})
    first_lock = None
    locked = False
    path = 0.0
    committed: Optional[SectorDecision] = None
    commit_left = 0
    extend: Optional[Rotation] = None
    aligned = False
    last_s1_rotation = None
    max_ticks = int(math.floor(scenario.max_time / dt + 1e-9))
    tick = 0

    while tick < max_ticks:
        tick += 1
        t = tick * dt
        signal, phases = _signal_and_phases(scenario, pose, need_power)
        raw, _ = acquire_cycle(
            signal, phases, scenario.detector, adc, scenario.sampler, noise, scenario.center_offsets
        )
        if not all(0.0 <= v <= adc.full_scale for v in raw):
            raise InvariantViolation(f"raw voltage outside ADC range at t={t}: {raw}")
        zeroed = zero(raw, refs)
        decision = classify(zeroed, cfg)
        if record_trace:
            codes = (quantize(raw[0], adc), quantize(raw[1], adc), quantize(raw[2], adc))
            trace.append(TraceRecord(t, pose, raw, zeroed, codes, decision))

        locked = decision.locked
        if locked:
            if first_lock is None:
                first_lock = t
            if scenario.descent_policy is DescentPolicy.HOLD:
                break
            if pose.drone_altitude <= scenario.min_altitude + 1e-12:
                break

        if commit_left > 0:
            action = committed
            commit_left -= 1
            if commit_left == 0:
                extend = _SLOW_TURN[committed.rotation]
        elif decision.rotation in (Rotation.LEFT60, Rotation.RIGHT60):
            if extend is not None:
                # a finished 60 deg turn that stopped short of sector 1 keeps
                # turning the same way; reversing it would limit-cycle on wedge edges
                action = make_decision(decision.sector, extend, Translation.NONE, decision.frame)
                counts[extend.value] += 1
            else:
                counts[decision.rotation.value] += 1
                committed = decision
                commit_left = n_turn - 1
                if commit_left == 0:
                    extend = _SLOW_TURN[committed.rotation]
                action = decision
            aligned = False
            last_s1_rotation = None
        elif decision.locked:
            extend = None
            action = decision
        else:
            extend = None
            if last_s1_rotation is not None and decision.rotation is not last_s1_rotation:
                aligned = True
            last_s1_rotation = decision.rotation
            counts[decision.rotation.value] += 1
            if aligned:
                counts[decision.translation.value] += 1
                action = decision
            else:
                action = make_decision(decision.sector, decision.rotation, Translation.NONE, decision.frame)

        new_pose = step(pose, action, scenario, dt)
        # yawing in place moves the LP in the body frame but not the drone
        horizontal = scenario.speed * dt if action.translation is not Translation.NONE else 0.0
        if scenario.jitter_sigma > 0:
            jx, jy = jitter_rng.normal(0.0, scenario.jitter_sigma, size=2)
            lp = new_pose.lp_offset
            new_pose = RelativePose(Vec3(lp.x + jx, lp.y + jy, lp.z), new_pose.drone_yaw)
            horizontal = math.hypot(horizontal, math.hypot(jx, jy))
        path += math.hypot(horizontal, new_pose.lp_offset.z - pose.lp_offset.z)
        pose = new_pose
        if started_inside and not boundaries.contains(pose):
            left_area = True
            break

    metrics = EpisodeMetrics(
        locked=locked,
        time_to_first_lock=first_lock,
        final_horizontal_error=pose.horizontal_distance,
        path_length=path,
        command_counts=dict(counts),
        left_tracking_area=left_area,
        duration=tick * dt,
        ticks=tick,
    )
    return trace, metrics


def _percentile(values: Sequence[float], q: float) -> Optional[float]:
    return float(np.percentile(values, q)) if values else None


def summarize(metrics: Sequence[EpisodeMetrics]) -> BatchResult:
    if not metrics:
        raise DomainError("batch needs at least one episode")
    times = [m.time_to_first_lock for m in metrics if m.locked]
    return BatchResult(
        list(metrics),
        lock_rate=sum(m.locked for m in metrics) / len(metrics),
        mean_time_to_lock=float(np.mean(times)) if times else None,
        p50_time_to_lock=_percentile(times, 50),
        p90_time_to_lock=_percentile(times, 90),
    )


def _metrics_only(scenario: Scenario) -> EpisodeMetrics:
    return run(scenario, record_trace=False)[1]


def run_batch(
    scenarios: Scenario | Iterable[Scenario],
    seeds: Optional[Iterable[int]] = None,
    workers: int = 1,
) -> BatchResult:
    """Run independent episodes; results keep input order.

    Pass either a list of scenarios, or one scenario plus ``seeds`` to rerun
    it under different random streams.
    """
    if isinstance(scenarios, Scenario):
        if seeds is None:
            items = [scenarios]
        else:
            items = [scenarios.replace(rng_seed=int(s)) for s in seeds]
    else:
        items = list(scenarios)
    if not items:
        raise DomainError("batch needs at least one episode")
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            metrics = list(pool.map(_metrics_only, items))
    else:
        metrics = [_metrics_only(s) for s in items]
    return summarize(metrics)


def grid_starts(scenario: Scenario, spacing: float = 0.01, radius: Optional[float] = None) -> list:
    """Initial poses on a square grid inside the tracking area at the scenario altitude.

    The array centre itself is excluded.  ``radius`` caps the start distance.
    """
    altitude = scenario.initial_pose.drone_altitude
    boundary = tracking_boundary(scenario.geometry, altitude, scenario.detector.usable_range)
    n = int(math.ceil(float(boundary.radii.max()) / spacing))
    poses = []
    for i in range(-n, n + 1):
        for j in range(-n, n + 1):
            x, y = i * spacing, j * spacing
            r = math.hypot(x, y)
            if r == 0 or (radius is not None and r > radius):
                continue
            phi = math.degrees(math.atan2(y, x)) % 360.0
            if r < boundary.radius_at(phi):
                poses.append(RelativePose(Vec3(x, y, -altitude), scenario.initial_pose.drone_yaw))
    return poses


# --- transmit-power sweeps -------------------------------------------------


class SweepPoint(NamedTuple):
    tx_power: float
    lock_rate: float
    mean_zeroed: VoltageTriplet


def power_sweep(
    scenario: Scenario, powers: Sequence[float], cycles: int = 400, refs: Optional[CalibrationRefs] = None
) -> list:
    """LOCK rate with the array centred over the LP, per transmit power.

    Zeroing references are taken at the scenario's own transmit power.
    """
    cal_rng, noise_rng, _ = _streams(scenario.rng_seed)
    if refs is None:
        refs = scenario.refs or calibrate_fixture(scenario, noise_source=cal_rng)
    pose = centered_pose(scenario)
    points = []
    for p in powers:
        s = scenario.replace(budget=dataclasses.replace(scenario.budget, tx_power=float(p)))
        zs = [zero(acquire_at(s, pose, noise_rng), refs) for _ in range(cycles)]
        rate = sum(classify(z, s.guidance).locked for z in zs) / cycles
        mean = VoltageTriplet(*np.mean(np.array(zs), axis=0).tolist())
        points.append(SweepPoint(float(p), rate, mean))
    return points


def dynamic_range(points: Sequence[SweepPoint], reliable: float = 0.99, cap: Optional[float] = None):
    """(lowest reliably locking power, range in dB up to ``cap``).

    The lowest power counts only if every higher power in the sweep locks too.
    """
    ordered = sorted(points, key=lambda p: p.tx_power, reverse=True)
    floor = None
    for p in ordered:
        if p.lock_rate < reliable:
            break
        floor = p.tx_power
    if floor is None:
        return None, 0.0
    top = ordered[0].tx_power if cap is None else cap
    return floor, top - floor


def lock_probability(sigmas: Sequence[float], n_avg: int, threshold: float) -> float:
    """Gaussian estimate that every averaged channel stays inside the LOCK band."""
    p = 1.0
    for s in sigmas:
        if s > 0:
            p *= math.erf(threshold * math.sqrt(n_avg) / (s * math.sqrt(2.0)))
    return p


def calibrate_low_power_noise(
    scenario: Scenario,
    knee_tx_dbm: float = -8.5,
    fail_tx_dbm: float = -9.0,
    fail_lock_probability: float = 0.05,
) -> DetectorModel:
    """Fit ``min_input_power`` and ``low_power_noise_slope`` to a LOCK failure knee.

    The knee sets ``min_input_power`` to the centred detector input level at
    ``knee_tx_dbm``; the slope is then solved so that the predicted LOCK
    probability at ``fail_tx_dbm`` equals ``fail_lock_probability``.
    """
    if not fail_tx_dbm < knee_tx_dbm:
        raise DomainError("fail power must sit below the knee")
    pose = centered_pose(scenario)

    def pair_powers(tx: float):
        budget = dataclasses.replace(scenario.budget, tx_power=tx)
        return received_signal(scenario.geometry, pose, budget).pair_power()

    min_input = min(pair_powers(knee_tx_dbm))
    fail_powers = pair_powers(fail_tx_dbm)
    base = dataclasses.replace(scenario.detector, min_input_power=min_input)
    n = scenario.sampler.samples_per_channel
    thr = scenario.guidance.lock_threshold

    def excess(slope: float) -> float:
        det = dataclasses.replace(base, low_power_noise_slope=slope)
        return lock_probability([det.noise_sigma(p) for p in fail_powers], n, thr) - fail_lock_probability

    slope = brentq(excess, 0.0, 100.0, xtol=1e-9)
    return dataclasses.replace(base, low_power_noise_slope=slope)
