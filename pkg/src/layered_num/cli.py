"""Command-line front end: run scenarios, validate files, compare admission.

Subcommands
    run                execute a scenario, write a trace and a summary
    validate           check a scenario file, exit non-zero on violations
    admission-compare  greedy vs exhaustive-oracle sweep over random instances

Overrides are flat flags mirroring scenario fields; a flag always beats the
file value.  Verbosity comes from the LAYERED_NUM_LOG environment variable
(a logging level name such as DEBUG or INFO).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import admission as adm
from . import engine
from .model import ScenarioError, load_scenario

logger = logging.getLogger(__name__)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="layered-num",
        description="Congestion pricing simulator for layered bandwidth utilities")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario and write trace + summary")
    run_p.add_argument("scenario_pos", nargs="?", metavar="SCENARIO",
                       help="scenario JSON path")
    run_p.add_argument("--scenario", help="scenario JSON path (same as positional)")
    run_p.add_argument("--out", default="trace.csv", help="trace output path")
    run_p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="trace format")
    run_p.add_argument("--max-iterations", type=int, default=None)
    run_p.add_argument("--sigma0", type=float, default=None)
    run_p.add_argument("--delta-lambda", type=float, default=None)
    run_p.add_argument("--delta-u", type=float, default=None)

    val_p = sub.add_parser("validate", help="check a scenario file")
    val_p.add_argument("scenario_pos", nargs="?", metavar="SCENARIO")
    val_p.add_argument("--scenario")

    cmp_p = sub.add_parser("admission-compare",
                           help="randomized greedy-vs-oracle comparison CSV")
    cmp_p.add_argument("--users", type=int, default=10,
                       help="users per instance (max 20)")
    cmp_p.add_argument("--instances", type=int, default=50)
    cmp_p.add_argument("--seed", type=int, default=0)
    cmp_p.add_argument("--out", default="admission_compare.csv")
    return parser


def _scenario_path(args) -> str:
    path = args.scenario or args.scenario_pos
    if not path:
        raise ScenarioError("no scenario given (positional or --scenario)")
    if not Path(path).exists():
        raise ScenarioError(f"scenario file not found: {path}")
    return path


def _apply_overrides(scenario, args):
    solver = scenario.solver
    if args.max_iterations is not None:
        solver = dataclasses.replace(solver, max_iterations=args.max_iterations)
    if args.sigma0 is not None:
        solver = dataclasses.replace(solver, sigma0=args.sigma0)
    admission = scenario.admission
    if args.delta_lambda is not None:
        admission = dataclasses.replace(admission, delta_lambda=args.delta_lambda)
    if args.delta_u is not None:
        admission = dataclasses.replace(admission, delta_u=args.delta_u)
    return dataclasses.replace(scenario, solver=solver, admission=admission)


def _cmd_run(args) -> int:
    scenario = _apply_overrides(load_scenario(_scenario_path(args)), args)
    trace = engine.run(scenario)
    out = Path(args.out)
    if args.format == "json":
        trace.write_json(out)
    else:
        trace.write_csv(out)
    summary = engine.summarize(trace, scenario)
    summary_path = out.with_name(out.stem + ".summary.json")
    summary_path.write_text(json.dumps(summary, indent=1) + "\n")
    print(engine.text_digest(summary))
    logger.info("trace written to %s, summary to %s", out, summary_path)
    return 0


def _cmd_validate(args) -> int:
    load_scenario(_scenario_path(args))
    print("OK")
    return 0


def _cmd_admission_compare(args) -> int:
    if not 1 <= args.users <= 20:
        raise ScenarioError("--users must be between 1 and 20 (exhaustive oracle cap)")
    if args.instances < 1:
        raise ScenarioError("--instances must be positive")
    rng = np.random.default_rng(args.seed)
    lines = ["instance,greedy_objective,oracle_objective,ratio"]
    for i in range(args.instances):
        scored, capacities, routes = adm.random_instance(rng, args.users)
        greedy = adm.greedy_select(scored, capacities, routes)
        oracle = adm.knapsack_oracle(scored, capacities, routes)
        ratio = 1.0 if oracle.objective == 0 else greedy.objective / oracle.objective
        lines.append(f"{i},{greedy.objective!r},{oracle.objective!r},{ratio!r}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"{args.instances} instances written to {args.out}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("LAYERED_NUM_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "admission-compare":
            return _cmd_admission_compare(args)
        parser.error(f"unknown command {args.command}")
    except (ScenarioError, engine.SimulationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
