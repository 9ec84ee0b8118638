"""Command-line front end: design curves, classification, calibration and simulation.

Exit codes: 0 ok, 1 usage, 2 I/O or bad scenario file, 3 internal invariant.
Relative output paths resolve against ``$TRILANDING_OUT_DIR`` when it is set.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .design_analysis import cone_half_angle, design_table, tracking_boundary
from .errors import DomainError, InvariantViolation, ScenarioError
from .geometry import ArrayGeometry
from .guidance import CalibrationRefs, GuidanceConfig, classify, zero
from .scenario_file import load_scenario
from .sim import calibrate_fixture, dynamic_range, power_sweep, run

INTERFACE_VERSION = "1.0"
OUT_DIR_ENV = "TRILANDING_OUT_DIR"
POWER_CAP_DBM = 20.0

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_INVARIANT = 3

TRACE_HEADER = (
    "t_s", "lp_x_m", "lp_y_m", "lp_z_m", "yaw_deg",
    "v12", "v23", "v31", "q12", "q23", "q31",
    "sector", "rotation", "translation", "locked",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _json_value(value):
    if isinstance(value, float):
        return float(f"{value:.9g}") if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return value


def dumps_json(record: dict) -> str:
    return json.dumps(_json_value(record), sort_keys=False) + "\n"


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def resolve_out(path: Optional[str], default_name: Optional[str] = None) -> Optional[Path]:
    out_dir = os.environ.get(OUT_DIR_ENV)
    if path is None:
        if out_dir and default_name:
            return Path(out_dir) / default_name
        return None
    p = Path(path)
    if out_dir and not p.is_absolute():
        p = Path(out_dir) / p
    return p


def emit(text: str, path: Optional[Path], stdout) -> None:
    if path is None:
        stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def parse_floats(text: str) -> list:
    """``a,b,c`` list or inclusive ``start:stop:step`` range."""
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if not step > 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9))
            return [round(start + i * step, 12) for i in range(n + 1)]
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad number list {text!r}") from None


def parse_ints(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad integer list {text!r}") from None


# --- commands ------------------------------------------------------------


def cmd_design_boundary(args, stdout) -> int:
    geom = ArrayGeometry(spacing_d=args.spacing, frequency=args.freq)
    b = tracking_boundary(geom, args.altitude, args.phase_limit, args.step)
    emit(csv_text(("phi_deg", "r_max_m"), b.samples), resolve_out(args.out), stdout)
    return EXIT_OK


def cmd_design_table(args, stdout) -> int:
    bits = parse_ints(args.bits)
    rows = design_table(
        parse_floats(args.spacing_range), args.altitude, args.freq, bits, args.phase_limit, args.delta_vd
    )
    header = ["d_m", "r_min_m", "r_max_m", "sens_mv_per_cm"] + [f"step_cm_b{b}" for b in bits]
    data = [
        [p.spacing_d, p.r_min, p.r_max, p.sensitivity] + [p.adc_step_distance[b] for b in bits]
        for p in rows
    ]
    emit(csv_text(header, data), resolve_out(args.out), stdout)
    return EXIT_OK


def cmd_cone(args, stdout) -> int:
    data = []
    for d in parse_floats(args.spacing_range):
        data.append((d, cone_half_angle(ArrayGeometry(spacing_d=d, frequency=args.freq), args.phase_limit)))
    emit(csv_text(("d_m", "half_angle_deg"), data), resolve_out(args.out), stdout)
    return EXIT_OK


def cmd_classify(args, stdout) -> int:
    v = (args.v12, args.v23, args.v31)
    if args.refs is not None:
        refs = parse_floats(args.refs)
        if len(refs) != 3:
            raise UsageError("--refs needs three values")
        v = zero(v, CalibrationRefs(*refs))
    decision = classify(v, GuidanceConfig(lock_threshold=args.lock_threshold))
    stdout.write(dumps_json(decision.as_record()))
    return EXIT_OK


def _trace_rows(trace):
    for r in trace:
        lp = r.pose.lp_offset
        d = r.decision
        yield (
            r.time, lp.x, lp.y, lp.z, r.pose.drone_yaw,
            *r.zeroed, *r.codes,
            d.sector.value, d.rotation.value, d.translation.value, d.locked,
        )


def cmd_simulate(args, stdout) -> int:
    scenario = load_scenario(args.scenario).scenario
    if args.seed is not None:
        scenario = scenario.replace(rng_seed=args.seed)
    trace, metrics = run(scenario, record_trace=True)
    trace_path = resolve_out(args.trace, "trace.csv")
    if trace_path is not None:
        emit(csv_text(TRACE_HEADER, _trace_rows(trace)), trace_path, stdout)
    emit(dumps_json(metrics.as_record()), resolve_out(args.metrics, "metrics.json"), stdout)
    return EXIT_OK


def cmd_calibrate_fixture(args, stdout) -> int:
    scenario = load_scenario(args.scenario).scenario
    if args.seed is not None:
        scenario = scenario.replace(rng_seed=args.seed)
    refs = calibrate_fixture(scenario, cycles=args.cycles)
    record = {"ref12": refs.ref12, "ref23": refs.ref23, "ref31": refs.ref31}
    emit(dumps_json(record), resolve_out(args.out), stdout)
    return EXIT_OK


def cmd_power_sweep(args, stdout) -> int:
    sf = load_scenario(args.scenario)
    powers = parse_floats(args.powers) if args.powers else sf.sweep_powers
    if not powers:
        raise UsageError("no transmit powers: pass --powers or set sweep.powers")
    cycles = args.cycles if args.cycles is not None else sf.sweep_cycles
    points = power_sweep(sf.scenario, powers, cycles=cycles)
    rows = [(p.tx_power, p.lock_rate, *p.mean_zeroed) for p in points]
    emit(csv_text(("tx_dbm", "lock_rate", "v12", "v23", "v31"), rows), resolve_out(args.out), stdout)
    if args.summary is not None:
        floor, span = dynamic_range(points, cap=POWER_CAP_DBM)
        record = {"reliable_floor_dbm": floor, "cap_dbm": POWER_CAP_DBM, "dynamic_range_db": span}
        emit(dumps_json(record), resolve_out(args.summary), stdout)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="trilanding", description="Tri-antenna phase-shift landing toolkit.")
    p.add_argument("--version", action="version",
                   version=f"trilanding {__version__} (interface {INTERFACE_VERSION})")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def design_flags(sp, spacing=True):
        if spacing:
            sp.add_argument("--spacing", type=float, default=0.07, help="antenna spacing D, m")
        sp.add_argument("--freq", type=float, default=2.46e9, help="carrier, Hz")
        sp.add_argument("--phase-limit", type=float, default=80.0, help="deg")
        sp.add_argument("--out", help="output file (default: stdout)")

    sp = sub.add_parser("design-boundary", help="tracking boundary r_max(phi)")
    design_flags(sp)
    sp.add_argument("--altitude", type=float, default=10.0, help="m")
    sp.add_argument("--step", type=float, default=1.0, help="phi step, deg")
    sp.set_defaults(func=cmd_design_boundary)

    sp = sub.add_parser("design-table", help="radii, sensitivity and ADC step vs D")
    design_flags(sp, spacing=False)
    sp.add_argument("--spacing-range", default="0.02:0.14:0.01", help="start:stop:step or a,b,c (m)")
    sp.add_argument("--altitude", type=float, default=10.0, help="m")
    sp.add_argument("--bits", default="8,10,12")
    sp.add_argument("--delta-vd", type=float, default=2.6, help="detector swing, V")
    sp.set_defaults(func=cmd_design_table)

    sp = sub.add_parser("cone", help="tracking cone half angle vs D")
    design_flags(sp, spacing=False)
    sp.add_argument("--spacing-range", default="0.02:0.14:0.01", help="start:stop:step or a,b,c (m)")
    sp.set_defaults(func=cmd_cone)

    sp = sub.add_parser("classify", help="sector decision for one voltage triplet")
    for name in ("--v12", "--v23", "--v31"):
        sp.add_argument(name, type=float, required=True)
    sp.add_argument("--refs", help="r12,r23,r31: subtract before classifying")
    sp.add_argument("--lock-threshold", type=float, default=0.1)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("simulate", help="closed-loop landing episode")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--trace", help="trace CSV path")
    sp.add_argument("--metrics", help="metrics JSON path (default: stdout)")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("calibrate-fixture", help="zeroing references with the array centred")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--cycles", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_calibrate_fixture)

    sp = sub.add_parser("power-sweep", help="LOCK rate vs transmit power, array centred")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--powers", help="dBm list or start:stop:step")
    sp.add_argument("--cycles", type=int)
    sp.add_argument("--out")
    sp.add_argument("--summary", help="dynamic-range JSON path")
    sp.set_defaults(func=cmd_power_sweep)
    return p


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, stdout)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except InvariantViolation as exc:
        stderr.write(f"invariant violated: {exc}\n")
        return EXIT_INVARIANT
    except (OSError, ScenarioError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except DomainError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
