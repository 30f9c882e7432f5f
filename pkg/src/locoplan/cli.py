"""Command line front end: plan, bench, sim, validate."""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from pathlib import Path

from .errors import LocoplanError
from .pipeline import plan_scenario
from .scenario import load_plan_file, load_scenario
from .sim import SimParams, SimService
from .validate import validate_solution

STATS_COLUMNS = [
    ("Task", 24),
    ("Planning time (s)", 19),
    ("Transition generation time (s)", 32),
    ("Number of iterations", 22),
    ("Number of vertices", 20),
    ("Number of stances", 19),
]


def _stats_row(task: str, stats: dict) -> list[str]:
    return [
        task,
        f"{stats['planning_time_s']:.2f}",
        f"{stats['transition_time_s']:.2f}",
        f"{stats['iterations']:.2f}",
        f"{stats['tree_vertices']:.2f}",
        f"{stats['solution_stances']:.2f}",
    ]


def print_stats_table(rows: list[list[str]], out=sys.stdout):
    head = "".join(name.ljust(width) for name, width in STATS_COLUMNS)
    out.write(head.rstrip() + "\n")
    out.write("-" * len(head.rstrip()) + "\n")
    for row in rows:
        line = "".join(v.ljust(width) for v, (_, width) in zip(row, STATS_COLUMNS))
        out.write(line.rstrip() + "\n")


def cmd_plan(args) -> int:
    scenario = load_scenario(args.scenario)
    result = plan_scenario(scenario, seed=args.seed)
    print_stats_table([_stats_row(scenario.name, result.stats.to_dict())])
    if not result.success:
        print(f"planning failed: {result.failure}", file=sys.stderr)
        return 1
    if args.out:
        result.save(args.out, scenario)
        print(f"plan written to {args.out}")
    return 0


def cmd_bench(args) -> int:
    scenario = load_scenario(args.scenario)
    seeds = range(args.seed_base, args.seed_base + args.runs)
    successes = []
    validated = 0
    for seed in seeds:
        result = plan_scenario(scenario, seed=seed)
        if not result.success:
            continue
        successes.append(result.stats.to_dict())
        report = validate_solution(scenario, result.motions, result.stance_solution)
        if report["ok"]:
            validated += 1
    print(f"runs: {args.runs}  successes: {len(successes)}  validated: {validated}")
    if successes:
        mean = {
            k: statistics.fmean(s[k] for s in successes) for k in successes[0]
        }
        print_stats_table([_stats_row(scenario.name, mean)])
    return 0 if successes else 1


def _parse_port(spec: str) -> tuple[str, int]:
    host = "127.0.0.1"
    text = spec
    if ":" in spec:
        left, right = spec.rsplit(":", 1)
        if left:
            host = left
        text = right
    return host, int(text)


def cmd_sim(args) -> int:
    if args.plan:
        plan_file = load_plan_file(args.plan)
        scenario = plan_file.scenario
        motions = plan_file.motions
        if args.scenario:  # world and events come from the scenario argument
            scenario = load_scenario(args.scenario)
    else:
        if not args.scenario:
            print("sim needs a scenario, a plan file, or both", file=sys.stderr)
            return 2
        scenario = load_scenario(args.scenario)
        result = plan_scenario(scenario, seed=args.seed)
        if not result.success:
            print(f"planning failed: {result.failure}", file=sys.stderr)
            return 1
        motions = result.motions
    sim = SimService(scenario, motions, params=SimParams(), seed=args.seed)
    if args.serve:
        from .service import serve

        host, port = _parse_port(args.serve)
        print(f"serving on http://{host}:{port} (ctrl-c to stop)")
        serve(sim, host=host, port=port)
    else:
        sim.run()
        final = sim.records[-1]
        print(json.dumps(final))
    if args.runlog:
        sim.write_runlog(args.runlog)
        print(f"run log written to {args.runlog}")
    if sim.terminal:
        return 0 if sim.records[-1].get("success", False) else 1
    return 0


def cmd_validate(args) -> int:
    plan_file = load_plan_file(args.plan)
    report = validate_solution(
        plan_file.scenario, plan_file.motions, plan_file.stance_solution
    )
    print(json.dumps(report, indent=1))
    return 0 if report["ok"] else 1


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locoplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="offline planning pipeline")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the plan file here")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("bench", help="repeated seeded planning runs")
    p.add_argument("scenario")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seed-base", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sim", help="execute a plan with online refinement")
    p.add_argument("scenario", nargs="?", default=None)
    p.add_argument("--plan", default=None, help="plan file from `locoplan plan`")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--headless", action="store_true", help="run to completion without serving")
    p.add_argument("--serve", default=None, metavar=":PORT", help="serve HTTP/WS on this port")
    p.add_argument("--runlog", default=None, help="write the JSON-lines run log here")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("validate", help="re-check a plan file")
    p.add_argument("plan")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except LocoplanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
