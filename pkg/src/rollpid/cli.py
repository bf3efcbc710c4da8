"""Command line entry point: ``rollpid run | tables | verify``."""
from __future__ import annotations

import argparse
import logging
import sys
import time

from . import acceptance
from .rolling import run
from .scenario_io import (SHIPPED, ScenarioError, emit_records_table, parse_scenario,
                          resolve_scenario_path, write_bundle)


def _cmd_run(args) -> int:
    path = resolve_scenario_path(args.scenario)
    text = path.read_text()
    sc = parse_scenario(path)
    t0 = time.perf_counter()
    result = run(sc)
    out = write_bundle(result, sc, text, args.out, time.perf_counter() - t0)
    print(emit_records_table(result.records), end="")
    print(f"terminated by {result.terminated_by}; bundle written to {out}")
    return 0 if result.terminated_by != "divergence" else 3


def _cmd_tables(args) -> int:
    for name in SHIPPED:
        sc = parse_scenario(name)
        result = run(sc)
        print(f"{name}  (mode={sc.mode.value}, N={sc.n_horizon}, M={sc.m_sample}, "
              f"terminated by {result.terminated_by})")
        print(emit_records_table(result.records))
    return 0


def _cmd_verify(args) -> int:
    t0 = time.perf_counter()
    outcomes = acceptance.run_all()
    for o in outcomes:
        print(o.line())
    hard_fail = [o for o in outcomes if not o.passed and not o.soft]
    print(f"{len(outcomes) - len(hard_fail)}/{len(outcomes)} criteria without hard failure "
          f"in {time.perf_counter() - t0:.1f}s")
    return 1 if hard_fail else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rollpid", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log each gain update")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one scenario and write a results bundle")
    p_run.add_argument("--scenario", required=True,
                       help="scenario file, or the name of a shipped one (e.g. case1_n10.scn)")
    p_run.add_argument("--out", default="out", help="output directory (default: out)")
    p_run.set_defaults(func=_cmd_run)
    sub.add_parser("tables", help="reproduce the four result tables").set_defaults(func=_cmd_tables)
    sub.add_parser("verify", help="run the acceptance checks").set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, ScenarioError, OSError) as exc:
        print(f"rollpid: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
