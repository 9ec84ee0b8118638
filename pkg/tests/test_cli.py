import csv
import io
import json
from pathlib import Path

import pytest

from trilanding import __version__
from trilanding import sim
from trilanding.cli import TRACE_HEADER, fmt, main
from trilanding.errors import InvariantViolation

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def call(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture(autouse=True)
def no_out_dir(monkeypatch):
    monkeypatch.delenv("TRILANDING_OUT_DIR", raising=False)


def test_fmt():
    assert fmt(1.0 / 3.0) == "0.333333333"
    assert fmt(True) == "true"
    assert fmt(7) == "7"


def test_design_boundary_defaults():
    code, out, _ = call(["design-boundary"])
    assert code == 0 and out.endswith("\n")
    data = rows(out)
    assert list(data[0]) == ["phi_deg", "r_max_m"]
    assert len(data) == 360
    r = [float(d["r_max_m"]) for d in data]
    assert min(r) == pytest.approx(4.19, abs=0.02)
    assert max(r) == pytest.approx(4.99, abs=0.02)


def test_design_boundary_46cm():
    _, out, _ = call(["design-boundary", "--altitude", "0.46"])
    r = {float(d["phi_deg"]): float(d["r_max_m"]) for d in rows(out)}
    assert r[60.0] == pytest.approx(0.193, abs=0.005)
    assert r[90.0] == pytest.approx(0.228, abs=0.005)


def test_design_table():
    code, out, _ = call(["design-table", "--spacing-range", "0.05:0.09:0.01"])
    assert code == 0
    data = rows(out)
    assert list(data[0]) == ["d_m", "r_min_m", "r_max_m", "sens_mv_per_cm", "step_cm_b8", "step_cm_b10", "step_cm_b12"]
    assert [float(d["d_m"]) for d in data] == pytest.approx([0.05, 0.06, 0.07, 0.08, 0.09])
    row = next(d for d in data if float(d["d_m"]) == pytest.approx(0.07))
    assert float(row["sens_mv_per_cm"]) == pytest.approx(2.605, abs=0.02)
    for d in data:
        assert float(d["step_cm_b8"]) == pytest.approx(4 * float(d["step_cm_b10"]), rel=1e-8)
    r_max = [float(d["r_max_m"]) for d in data]
    assert all(a > b for a, b in zip(r_max, r_max[1:]))


def test_cone():
    code, out, _ = call(["cone", "--spacing-range", "0.035,0.07,0.14"])
    assert code == 0
    data = rows(out)
    angles = [float(d["half_angle_deg"]) for d in data]
    assert angles[0] == pytest.approx(63.4, abs=0.5)
    assert angles[1] == pytest.approx(26.52, abs=0.15)
    assert all(a > b for a, b in zip(angles, angles[1:]))


@pytest.mark.parametrize(
    "v, expected",
    [
        (("-0.18", "-0.45", "0.62"), {"sector": "S1a", "rotation": "RIGHT", "translation": "BACKWARD", "locked": False}),
        (("0.9", "-0.76", "-0.15"), {"sector": "S3b", "rotation": "LEFT60", "translation": "NONE", "locked": False}),
        (("-0.02", "-0.04", "0.05"), {"sector": "CENTER", "rotation": "NONE", "translation": "NONE", "locked": True}),
    ],
)
def test_classify(v, expected):
    code, out, _ = call(["classify", "--v12", v[0], "--v23", v[1], "--v31", v[2]])
    assert code == 0 and out.endswith("\n")
    assert json.loads(out) == expected


def test_classify_with_refs():
    _, out, _ = call(["classify", "--v12", "1.358", "--v23", "1.284", "--v31", "1.386", "--refs", "1.378,1.324,1.336"])
    assert json.loads(out)["locked"] is True


def test_simulate_centred(tmp_path):
    sc = tmp_path / "c.toml"
    sc.write_text("initial.altitude = 0.46\n")
    code, out, _ = call(["simulate", "--scenario", str(sc), "--trace", str(tmp_path / "t.csv")])
    assert code == 0
    m = json.loads(out)
    assert m["locked"] is True
    assert m["time_to_first_lock"] == pytest.approx(0.003)
    trace = (tmp_path / "t.csv").read_text()
    assert trace.splitlines()[0] == ",".join(TRACE_HEADER)


def test_simulate_shipped_46cm_is_reproducible(tmp_path):
    outs = []
    for k in range(2):
        t, m = tmp_path / f"t{k}.csv", tmp_path / f"m{k}.json"
        code, _, _ = call(["simulate", "--scenario", str(SCENARIOS / "alt046.toml"), "--trace", str(t), "--metrics", str(m)])
        assert code == 0
        outs.append((t.read_bytes(), m.read_bytes()))
    assert outs[0] == outs[1]
    metrics = json.loads(outs[0][1])
    assert metrics["locked"] is True
    assert metrics["left_tracking_area"] is False


def test_out_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("TRILANDING_OUT_DIR", str(tmp_path))
    code, out, _ = call(["simulate", "--scenario", str(SCENARIOS / "alt016.toml")])
    assert code == 0 and out == ""
    assert (tmp_path / "trace.csv").exists()
    assert json.loads((tmp_path / "metrics.json").read_text())["locked"] is True
    call(["cone", "--spacing-range", "0.07", "--out", "cone.csv"])
    assert (tmp_path / "cone.csv").read_text().startswith("d_m,half_angle_deg\n")


def test_calibrate_fixture_mismatch():
    code, out, _ = call(["calibrate-fixture", "--scenario", str(SCENARIOS / "alt046_mismatch.toml")])
    assert code == 0
    refs = json.loads(out)
    assert refs["ref12"] == pytest.approx(1.378, abs=0.005)
    assert refs["ref23"] == pytest.approx(1.324, abs=0.005)
    assert refs["ref31"] == pytest.approx(1.336, abs=0.005)


def test_calibrate_fixture_noiseless(tmp_path):
    sc = tmp_path / "q.toml"
    sc.write_text("detector.noise_floor_sigma = 0.0\ndetector.low_power_noise_slope = 0.0\n")
    _, out, _ = call(["calibrate-fixture", "--scenario", str(sc)])
    assert all(abs(v - 1.5) <= 5.0 / 2048 for v in json.loads(out).values())


def test_power_sweep_cli(tmp_path):
    summary = tmp_path / "s.json"
    code, out, _ = call(["power-sweep", "--scenario", str(SCENARIOS / "power_sweep_220.toml"),
                         "--powers=-10,-8,0", "--cycles", "200", "--summary", str(summary)])
    assert code == 0
    data = rows(out)
    assert [float(d["lock_rate"]) for d in data][1:] == [1.0, 1.0]
    assert json.loads(summary.read_text())["dynamic_range_db"] == 28.0


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        from trilanding.cli import build_parser
        build_parser().parse_args(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["classify", "--v12", "1"], ["design-boundary", "--step", "x"],
                                  ["design-table", "--spacing-range", "a:b"], ["classify", "--v12", "0", "--v23", "0",
                                                                                "--v31", "0", "--refs", "1,2"]])
def test_usage_errors(argv):
    code, out, err = call(argv)
    assert code == 1
    assert err


def test_domain_error_is_usage():
    code, _, err = call(["design-boundary", "--altitude", "-1"])
    assert code == 1 and "altitude" in err


def test_missing_scenario_is_io(tmp_path):
    code, _, err = call(["simulate", "--scenario", str(tmp_path / "missing.toml")])
    assert code == 2 and err


def test_bad_scenario_key_is_io(tmp_path):
    sc = tmp_path / "bad.toml"
    sc.write_text("motion.sped = 1.0\n")
    code, _, err = call(["simulate", "--scenario", str(sc)])
    assert code == 2 and "motion.sped" in err


def test_invariant_exit_code(monkeypatch):
    def boom(*a, **k):
        raise InvariantViolation("raw voltage outside ADC range")

    monkeypatch.setattr("trilanding.cli.run", boom)
    code, _, err = call(["simulate", "--scenario", str(SCENARIOS / "alt016.toml")])
    assert code == 3 and "invariant" in err
    assert sim.run is not boom
