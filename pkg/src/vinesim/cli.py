"""Command-line front end.

Exit codes (documented contract, one per error path):
  0  success; every scenario assertion passed
  1  one or more scenario assertions failed
  2  usage error (bad flags/arguments)
  3  scenario parse error (syntax; reported with line and column)
  4  scenario validation error (unknown robot/joint/tendon, bad values)
  5  runtime fault (overpressure, non-convergence, boundary violation)
  6  server startup failure (port in use)
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .benchmark import run_benchmark_comparison
from .calibration import calibrate, embedded_datasets
from .errors import ScenarioParseError, ScenarioValidationError, VinesimError
from .scenario import load_scenario, plot_run, run_scenario, write_outputs
from .session import ServerOptions, serve_session

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_RUNTIME = 5
EXIT_SERVER = 6


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vinesim",
        description="Quasi-static vine robot simulator with reconfigurable pneumatic joints.",
        epilog=(
            "exit codes: 0 ok, 1 assertion failure, 2 usage, 3 parse, "
            "4 validation, 5 runtime fault, 6 server startup"
        ),
    )
    parser.add_argument(
        "--seed", type=int, default=None,
        help="reserved for future stochastic features; accepted and ignored",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="replay a scenario file and write CSV output")
    run.add_argument("scenario", help="path to a scenario JSON file")
    run.add_argument("--out", default="runs", help="output directory (default: runs)")
    run.add_argument("--format", choices=["csv"], default="csv", help="output format")
    run.add_argument("--plot", action="store_true", help="also write a PNG overview")

    bench = sub.add_parser("bench", help="growth benchmark vs the layer-jamming surrogate")
    bench.add_argument("--out", default=None, help="also write benchmark.csv here")

    cal = sub.add_parser("calibrate", help="run all fits and print the parameter set")
    cal.add_argument("--out", default=None, help="export datasets and parameters here")

    serve = sub.add_parser("serve", help="start the streaming session service")
    serve.add_argument("--port", type=int, default=7781)
    serve.add_argument("--robot", default="shape_demo")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument(
        "--no-realtime", action="store_true",
        help="disable the automatic 20 Hz clock; time advances only via step commands",
    )
    return parser


def _cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
        record = run_scenario(scenario)
    except ScenarioParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ScenarioValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    csv_path, events_path = write_outputs(record, args.out)
    if args.plot:
        plot_run(record, args.out)
    print(f"wrote {csv_path} ({len(record.rows)} rows) and {events_path}")
    for outcome in record.assertion_outcomes:
        mark = "PASS" if outcome.passed else "FAIL"
        print(f"  [{mark}] {outcome.description} -- {outcome.detail}")
    if record.fault is not None:
        print(f"runtime fault: {record.fault}", file=sys.stderr)
        return EXIT_RUNTIME
    if not record.passed:
        return EXIT_ASSERTION
    return EXIT_OK


def _cmd_bench(args) -> int:
    result = run_benchmark_comparison()
    print(result.table(), end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "benchmark.csv").write_text(result.csv_text())
        print(f"wrote {out / 'benchmark.csv'}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    result = calibrate()
    print("fitted parameters:")
    print(f"  contact area per chamber : {result.contact_area_per_chamber:.6e} m^2")
    print(f"  joint passive stiffness  : {result.joint_passive_ei:.3f} N*m^2")
    print(f"  inversion resistance     : {result.resisting_force:.3f} N")
    for name in sorted(result.chain_ei):
        closed = result.closed_form_ei[name]
        refined = result.chain_ei[name]
        print(f"  chain EI [{name:13s}] : {refined:.4f} N*m^2 (closed form {closed:.4f})")
    for name in sorted(result.stiffening_coefficient):
        print(f"  stiffening gain [{name:13s}] : {result.stiffening_coefficient[name]:.3f} 1/m")
    if args.out:
        out = Path(args.out)
        paths = embedded_datasets().export_csv(out)
        lines = ["parameter,value,unit"]
        lines.append(f"contact_area_per_chamber,{result.contact_area_per_chamber!r},m^2")
        lines.append(f"joint_passive_ei,{result.joint_passive_ei!r},N*m^2")
        lines.append(f"resisting_force,{result.resisting_force!r},N")
        for name, value in sorted(result.chain_ei.items()):
            lines.append(f"chain_ei_{name},{value!r},N*m^2")
        for name, value in sorted(result.stiffening_coefficient.items()):
            lines.append(f"stiffening_coefficient_{name},{value!r},1/m")
        (out / "calibration.csv").write_text("\n".join(lines) + "\n")
        print(f"wrote {len(paths)} dataset tables and calibration.csv to {out}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import time

    options = ServerOptions(robot=args.robot, host=args.host, real_time=not args.no_realtime)
    try:
        server = serve_session(args.port, options)
    except OSError as exc:
        print(f"server startup failed: {exc}", file=sys.stderr)
        return EXIT_SERVER
    print(f"listening on {options.host}:{server.port}", flush=True)
    try:
        while True:
            time.sleep(0.5)
    except KeyboardInterrupt:
        pass
    finally:
        server.close()
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "calibrate":
            return _cmd_calibrate(args)
        if args.command == "serve":
            return _cmd_serve(args)
    except VinesimError as exc:
        print(f"runtime fault: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
