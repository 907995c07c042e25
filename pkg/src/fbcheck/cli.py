"""Command line front end: ``fbcheck simulate | verify | tables``.

Exit codes: 0 success, 1 a check failed (or a replay did not reproduce),
2 usage or configuration error, 3 the input space exceeds the cardinality cap.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .diagram import timing_diagram, trace_to_csv
from .netlist import InvalidNetlist
from .scenario import ScenarioError, load_scenario, run_scenario
from .suites import TABLE_NAMES, SpaceConfig, default_space, run_table_checks, run_verify, space_from_dict
from .verifier import WORKERS_ENV, CardinalityError, Report

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fbcheck", description="Simulate and check function block diagrams.")
    p.add_argument("--workers", type=int, default=None,
                   help=f"worker processes for exhaustive checks (default: ${WORKERS_ENV} or 1)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario file")
    s.add_argument("--scenario", required=True, type=Path)
    s.add_argument("--trace", type=Path, help="write the per-tick CSV trace here")
    s.add_argument("--diagram", action="store_true", help="print an ASCII timing diagram")
    s.add_argument("--lanes", help="comma-separated signals for the diagram (default: inputs, outputs, REQ)")

    v = sub.add_parser("verify", help="run the check suite for a subsystem")
    v.add_argument("--subsystem", required=True, choices=("trip-sealed-in", "pushbutton"))
    v.add_argument("--variant", required=True, choices=("original", "revised"))
    v.add_argument("--space", type=Path, help="input space file (JSON)")
    v.add_argument("--counterexample", type=Path, default=Path("counterexample.json"),
                   help="where to write a failing case as a replayable scenario")
    v.add_argument("--report", type=Path, help="write the machine-readable report here")

    t = sub.add_parser("tables", help="completeness and disjointness of a requirement table")
    t.add_argument("--check", required=True, choices=TABLE_NAMES)
    t.add_argument("--report", type=Path)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.workers is not None and args.workers < 1:
        print("fbcheck: --workers must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "verify":
            return cmd_verify(args)
        return cmd_tables(args)
    except ScenarioError as e:
        print(f"fbcheck: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidNetlist as e:
        print(f"fbcheck: invalid netlist: {e}", file=sys.stderr)
        return EXIT_USAGE
    except CardinalityError as e:
        print(f"fbcheck: refusing to enumerate: {e}", file=sys.stderr)
        return EXIT_CAP


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    return str(v)


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    run = run_scenario(sc)
    h = sc.domain.horizon
    print(f"simulated {sc.netlist.name}: ticks 0..{h}, delta={sc.domain.delta}, {len(sc.schedule)} samples")
    lanes = run.lanes()
    if args.trace:
        args.trace.write_text(trace_to_csv(lanes))
        print(f"trace written to {args.trace}")
    status = EXIT_OK
    if run.req is not None:
        if run.divergence is None:
            print(f"REQ and IMPL agree on all {h + 1} ticks")
        else:
            t, name, want, got = run.divergence
            print(f"first divergence at tick {t} on {name}: REQ={_fmt(want)} IMPL={_fmt(got)}")
        for t, table, msg in run.table_faults:
            print(f"table {table} at tick {t}: {msg}")
    if sc.expect is not None:
        exp = sc.expect
        if run.replayed:
            print(f"replay: reproduced the recorded {exp['check']} failure at tick {exp['tick']}")
        else:
            print(f"replay: did NOT reproduce the recorded {exp['check']} failure at tick {exp['tick']}")
            status = EXIT_FAIL
    if args.diagram:
        if args.lanes:
            names = [n.strip() for n in args.lanes.split(",") if n.strip()]
            unknown = [n for n in names if n not in lanes and n not in sc.inputs]
            if unknown:
                raise ScenarioError("--lanes", f"unknown signal {unknown[0]!r}")
        else:
            names = [*sc.netlist.inputs, *sc.netlist.outputs, *(f"REQ_{o}" for o in (run.req or {}))]
        picked = {n: sc.inputs.get(n, lanes.get(n)) for n in names}
        every_tick = sc.schedule.samples == tuple(sc.domain.ticks)
        print()
        print(timing_diagram(picked, samples=None if every_tick else sc.schedule.samples), end="")
    return status


def _print_report(r: Report) -> None:
    print(r.summary())
    c = r.counterexample
    if c is not None:
        print(f"  signal: {c.signal}  category: {c.category}  horizon: {c.horizon}")
        print(f"  schedule: samples={list(c.schedule.samples)} tmin={c.schedule.tmin} tmax={c.schedule.tmax}")
        for name, changes in c.to_dict()["inputs"].items():
            print(f"  {name}: {changes}")


def cmd_verify(args) -> int:
    if args.space:
        try:
            doc = json.loads(args.space.read_text())
        except OSError as e:
            raise ScenarioError(str(args.space), e.strerror or str(e)) from None
        except json.JSONDecodeError as e:
            raise ScenarioError(f"{args.space}: line {e.lineno} column {e.colno}", e.msg) from None
        config = space_from_dict(doc, args.subsystem, args.variant)
    else:
        config = SpaceConfig(default_space(args.subsystem, args.variant))
    total = config.space.cardinality(config.cap) if config.random_cases is None else config.random_cases
    print(f"verify {args.subsystem} ({args.variant}): {total} cases per check, "
          f"{len(config.space.schedules)} schedules")
    result = run_verify(args.subsystem, args.variant, config, workers=args.workers, progress=_print_report)
    if args.report:
        args.report.write_text(json.dumps(result.to_dict(), indent=2) + "\n")
    doc = result.counterexample_scenario()
    if doc is not None:
        args.counterexample.write_text(json.dumps(doc, indent=2) + "\n")
        print(f"counterexample written to {args.counterexample}")
    print("verdict: " + ("PASS" if result.passed else "FAIL"))
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_tables(args) -> int:
    reports = run_table_checks(args.check, workers=args.workers)
    for r in reports:
        _print_report(r)
    if args.report:
        args.report.write_text(json.dumps([r.to_dict() for r in reports], indent=2) + "\n")
    healthy = all(r.passed for r in reports[:2])
    print("verdict: " + ("complete and disjoint" if healthy else "NOT healthy"))
    return EXIT_OK if healthy else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
