from pathlib import Path

import pytest

from trilanding.errors import ScenarioError
from trilanding.guidance import Frame
from trilanding.scenario_file import load_scenario, parse_scenario
from trilanding.sim import DescentPolicy, Scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def test_empty_file_gives_defaults():
    assert parse_scenario("").scenario == Scenario()


def test_dotted_keys_and_tables_agree():
    a = parse_scenario("initial.altitude = 2.2\ninitial.r = 0.5\n").scenario
    b = parse_scenario("[initial]\naltitude = 2.2\nr = 0.5\n").scenario
    assert a == b
    assert a.initial_pose.drone_altitude == pytest.approx(2.2)


def test_full_set():
    text = """
geometry.spacing_d = 0.035
budget.tx_power = -5
ar.table = [[0, 0.5], [90, 3.0]]
detector.center_offsets = [-0.1, 0.0, 0.1]
adc.bits = 12
sampler.samples_per_channel = 4
guidance.frame = "DRONE_MOVES"
initial.yaw = 15.0
motion.descent_policy = "DESCEND_ON_LOCK"
run.rng_seed = 9
calibration.refs = [1.4, 1.5, 1.6]
sweep.powers = [-10, 0]
"""
    sf = parse_scenario(text)
    sc = sf.scenario
    assert sc.geometry.spacing_d == 0.035
    assert sc.budget.tx_power == -5.0
    assert sc.budget.ar_profile.table_override == ((0.0, 0.5), (90.0, 3.0))
    assert sc.center_offsets == (-0.1, 0.0, 0.1)
    assert sc.adc.bits == 12
    assert sc.sampler.samples_per_channel == 4
    assert sc.guidance.frame is Frame.DRONE_MOVES
    assert sc.initial_pose.drone_yaw == 15.0
    assert sc.descent_policy is DescentPolicy.DESCEND_ON_LOCK
    assert sc.rng_seed == 9
    assert sc.refs.as_tuple() == (1.4, 1.5, 1.6)
    assert sf.sweep_powers == (-10.0, 0.0)


@pytest.mark.parametrize(
    "text",
    [
        "geometry.spacing = 0.07",  # typo
        "bogus = 1",
        "initial.altitude = 'high'",
        "adc.bits = 10.5",
        "run.rng_seed = true",
        "detector.center_offsets = [0, 0]",
        "motion.descent_policy = 'FALL'",
        "guidance.frame = 'SIDEWAYS'",
        "geometry.spacing_d = -1",
        "initial.altitude = 0",
        "this is not toml",
        "sweep.powers = []",
        "ar.table = [[0, 1.0], [30]]",
    ],
)
def test_bad_files_rejected(text):
    with pytest.raises(ScenarioError):
        parse_scenario(text)


def test_missing_file_is_os_error(tmp_path):
    with pytest.raises(OSError):
        load_scenario(tmp_path / "nope.toml")


@pytest.mark.parametrize("name", sorted(p.name for p in SCENARIOS.glob("*.toml")))
def test_shipped_scenarios_load(name):
    sf = load_scenario(SCENARIOS / name)
    assert isinstance(sf.scenario, Scenario)
