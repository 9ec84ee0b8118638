"""Scenario files: flat TOML with dotted section keys.

Example::

    geometry.spacing_d = 0.07
    initial.altitude = 0.46
    initial.r = 0.12
    initial.phi_deg = 200.0
    run.rng_seed = 3

Every key must be known; typos in physics parameters are hard errors.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import tomli

from .detection import AdcModel, DetectorModel, SamplerConfig
from .errors import ScenarioError
from .geometry import ArrayGeometry, RelativePose
from .guidance import CalibrationRefs, GuidanceConfig
from .rf_link import AxialRatioProfile, LinkBudgetModel
from .sim import DescentPolicy, Scenario

_NUMBER = "number"
_INT = "int"
_STR = "str"
_TRIPLE = "triple"
_TABLE = "table"
_LIST = "list"

# dotted key -> value kind
KNOWN_KEYS = {
    "geometry.spacing_d": _NUMBER,
    "geometry.frequency": _NUMBER,
    "geometry.propagation_speed": _NUMBER,
    "budget.tx_power": _NUMBER,
    "budget.tx_gain": _NUMBER,
    "budget.rx_gain": _NUMBER,
    "budget.pol_mismatch_mean": _NUMBER,
    "ar.ar0_db": _NUMBER,
    "ar.quad_coeff": _NUMBER,
    "ar.table": _TABLE,
    "detector.v_center": _NUMBER,
    "detector.slope": _NUMBER,
    "detector.v_min": _NUMBER,
    "detector.v_max": _NUMBER,
    "detector.usable_range": _NUMBER,
    "detector.min_input_power": _NUMBER,
    "detector.noise_floor_sigma": _NUMBER,
    "detector.low_power_noise_slope": _NUMBER,
    "detector.center_offsets": _TRIPLE,
    "adc.bits": _INT,
    "adc.full_scale": _NUMBER,
    "adc.sample_period": _NUMBER,
    "sampler.samples_per_channel": _INT,
    "guidance.lock_threshold": _NUMBER,
    "guidance.frame": _STR,
    "initial.r": _NUMBER,
    "initial.phi_deg": _NUMBER,
    "initial.altitude": _NUMBER,
    "initial.yaw": _NUMBER,
    "motion.yaw_rate": _NUMBER,
    "motion.speed": _NUMBER,
    "motion.descent_rate": _NUMBER,
    "motion.descent_policy": _STR,
    "motion.jitter_sigma": _NUMBER,
    "motion.min_altitude": _NUMBER,
    "run.decision_period": _NUMBER,
    "run.max_time": _NUMBER,
    "run.rng_seed": _INT,
    "calibration.cycles": _INT,
    "calibration.refs": _TRIPLE,
    "sweep.powers": _LIST,
    "sweep.cycles": _INT,
}


@dataclass(frozen=True)
class ScenarioFile:
    scenario: Scenario
    sweep_powers: Optional[tuple[float, ...]] = None
    sweep_cycles: int = 400


def _flatten(table: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in table.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


def _number(key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{key}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ScenarioError(f"{key}: must be finite")
    return value


def _coerce(key: str, kind: str, value: Any):
    if kind == _NUMBER:
        return _number(key, value)
    if kind == _INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"{key}: expected an integer, got {value!r}")
        return value
    if kind == _STR:
        if not isinstance(value, str):
            raise ScenarioError(f"{key}: expected a string, got {value!r}")
        return value
    if not isinstance(value, list):
        raise ScenarioError(f"{key}: expected an array, got {value!r}")
    if kind == _TRIPLE:
        if len(value) != 3:
            raise ScenarioError(f"{key}: expected three values")
        return tuple(_number(key, v) for v in value)
    if kind == _LIST:
        if not value:
            raise ScenarioError(f"{key}: must not be empty")
        return tuple(_number(key, v) for v in value)
    # _TABLE: [[deg, dB], ...]
    rows = []
    for row in value:
        if not isinstance(row, list) or len(row) != 2:
            raise ScenarioError(f"{key}: rows must be [angle_deg, ar_db] pairs")
        rows.append((_number(key, row[0]), _number(key, row[1])))
    return tuple(rows)


def _section(values: dict, name: str) -> dict:
    n = len(name) + 1
    return {k[n:]: v for k, v in values.items() if k.startswith(name + ".")}


def parse_scenario(text: str, source: str = "<scenario>") -> ScenarioFile:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ScenarioError(f"{source}: {exc}") from exc
    flat = _flatten(raw)
    unknown = sorted(set(flat) - set(KNOWN_KEYS))
    if unknown:
        raise ScenarioError(f"{source}: unknown keys: {', '.join(unknown)}")
    values = {k: _coerce(k, KNOWN_KEYS[k], v) for k, v in flat.items()}
    try:
        return _build(values)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{source}: {exc}") from exc


def _build(values: dict) -> ScenarioFile:
    base = Scenario()
    geometry = ArrayGeometry(**_section(values, "geometry"))

    ar = _section(values, "ar")
    if "table" in ar:
        ar["table_override"] = ar.pop("table")
    budget = LinkBudgetModel(ar_profile=AxialRatioProfile(**ar), **_section(values, "budget"))

    det = _section(values, "detector")
    offsets = det.pop("center_offsets", base.center_offsets)
    detector = DetectorModel(**det)
    adc = AdcModel(**_section(values, "adc"))
    sampler = SamplerConfig(**_section(values, "sampler"))
    guidance = GuidanceConfig(**_section(values, "guidance"))

    init = _section(values, "initial")
    pose = RelativePose.from_polar(
        init.get("r", 0.0),
        init.get("phi_deg", 0.0),
        init.get("altitude", base.initial_pose.drone_altitude),
        init.get("yaw", 0.0),
    )

    motion = _section(values, "motion")
    if "descent_policy" in motion:
        try:
            motion["descent_policy"] = DescentPolicy(motion["descent_policy"])
        except ValueError:
            raise ScenarioError(f"motion.descent_policy: unknown policy {motion['descent_policy']!r}")
    run = _section(values, "run")
    cal = _section(values, "calibration")
    refs = CalibrationRefs(*cal["refs"]) if "refs" in cal else None

    scenario = dataclasses.replace(
        base,
        geometry=geometry,
        budget=budget,
        detector=detector,
        adc=adc,
        sampler=sampler,
        guidance=guidance,
        initial_pose=pose,
        center_offsets=offsets,
        refs=refs,
        calibration_cycles=cal.get("cycles", base.calibration_cycles),
        **motion,
        **run,
    )
    sweep = _section(values, "sweep")
    return ScenarioFile(scenario, sweep.get("powers"), sweep.get("cycles", 400))


def load_scenario(path: str | Path) -> ScenarioFile:
    """Read and validate a scenario file.  I/O failures surface as ``OSError``."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_scenario(text, str(path))
