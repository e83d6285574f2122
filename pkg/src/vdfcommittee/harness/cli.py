"""Command line entry point.

Exit codes: 0 when every assertion passed, 1 on an assertion failure,
2 on a configuration error (bad flags, bad config file, infeasible schedule).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .. import vdf
from ..errors import ConfigurationError
from .config import load_config
from .report import emit_report, emit_traces
from .scenarios import run_configs, run_scenario, scenario_catalog

EXIT_OK, EXIT_ASSERTION, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vdfcommittee", description="Simulate VDF-gated committee consensus, clock sync and BBA.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a named scenario or a TOML config file")
    run.add_argument("target", help="scenario name (see list-scenarios) or path to a .toml config")
    run.add_argument("--trials", type=int, help="override the trial count")
    run.add_argument("--seed", type=int, help="override the base seed")
    run.add_argument("--out", type=Path, help="report path; omit to print only the summary")
    run.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    run.add_argument("--keep-traces", action="store_true", help="keep event traces of every trial, not just failed ones")

    sub.add_parser("list-scenarios", help="list the shipped scenarios")

    solve = sub.add_parser("solve-schedule", help="solve for a VDF difficulty schedule")
    solve.add_argument("--delta-h", type=float, required=True, help="fastest honest seconds per VDF step")
    solve.add_argument("--delta-h-slow", type=float, required=True, help="slowest honest seconds per VDF step")
    solve.add_argument("--delta-adv", type=float, required=True, help="adversary seconds per VDF step")
    solve.add_argument("--delta-net", type=float, required=True, help="network delay bound")
    return p


def _run(args) -> int:
    target = Path(args.target)
    if target.suffix == ".toml" or target.exists():
        cfg = load_config(target)
        outcome = run_configs(cfg.name, [cfg], args.trials, args.seed, args.keep_traces)
    else:
        outcome = run_scenario(args.target, args.trials, args.seed, args.keep_traces)
    print(json.dumps(outcome.summary, indent=2, sort_keys=True))
    rows = outcome.results or outcome.rows
    if args.out is not None:
        if rows:
            emit_report(rows, args.format, args.out, outcome.summary)
            traces = emit_traces(outcome.results, args.out.with_name(args.out.name + ".traces.jsonl"))
            if traces is not None:
                print(f"traces: {traces}", file=sys.stderr)
        else:
            print("no trials run; report not written", file=sys.stderr)
    for failure in outcome.failures:
        print(f"ASSERTION FAILED: {failure}", file=sys.stderr)
    return EXIT_ASSERTION if outcome.failures else EXIT_OK


def _list() -> int:
    for name, sc in sorted(scenario_catalog().items()):
        print(f"{name}\n    {sc.description}")
    return EXIT_OK


def _solve(args) -> int:
    prof = vdf.SpeedProfile(args.delta_h_slow, args.delta_h, args.delta_adv)
    sched = vdf.solve_schedule(prof, args.delta_net)
    out = sched.as_dict()
    out["feasibility_bound"] = float(vdf.feasibility_bound(args.delta_h, args.delta_adv))
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "list-scenarios":
            return _list()
        return _solve(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
