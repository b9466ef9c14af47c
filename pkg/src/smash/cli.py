"""Command line front-end: ``smash run|validate|bench SCENARIO``.

A scenario argument is a path, or the name of a bundled scenario such as
``smash_poc``. Exit codes: 0 success, 1 runtime failure or validation diff,
2 unreadable or schema-invalid scenario.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from contextlib import ExitStack
from pathlib import Path
from typing import Sequence

from .report import bench, render_table, validate_scenario
from .runtime import TraceSink
from .scenario import Scenario, ScenarioError, bundled, load_scenario, run_scenario

log = logging.getLogger("smash")

VERBOSITY = ("quiet", "info", "debug")
_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _verbosity() -> str:
    v = os.environ.get("SMASH_LOG", "info").lower()
    return v if v in VERBOSITY else "info"


def _resolve(arg: str) -> Path:
    path = Path(arg)
    if not path.exists() and path.suffix == "" and "/" not in arg:
        candidate = bundled(arg)
        if candidate.exists():
            return candidate
    return path


def _load(args) -> Scenario:
    scenario = load_scenario(_resolve(args.scenario))
    if getattr(args, "strategy", None):
        scenario = scenario.with_strategy(args.strategy)
    return scenario


def _bus_port(spec: str) -> int | None:
    if spec == "inproc":
        return None
    if spec.startswith("tcp:"):
        try:
            return int(spec[4:])
        except ValueError:
            pass
    raise argparse.ArgumentTypeError(f"expected 'inproc' or 'tcp:<port>', got {spec!r}")


def cmd_run(args) -> int:
    scenario = _load(args)
    with ExitStack() as stack:
        stream = stack.enter_context(open(args.out, "w", encoding="utf-8")) if args.out else sys.stdout
        sink = TraceSink(stream, _verbosity())
        result = run_scenario(scenario, sink, args.pddl_out, args.seed, args.bus)
    log.info("%s: %d cycles", scenario.name, len(result.traces))
    return 0


def cmd_validate(args) -> int:
    scenario = _load(args)
    report = validate_scenario(scenario, seed=args.seed, tcp_port=args.bus)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if report.ok:
        print(f"{scenario.name}: {len(scenario.expect)} expected transitions matched")
        return 0
    print(f"{scenario.name}: first divergence at cycle {report.divergence_cycle}")
    for line in report.lines:
        print(line)
    return 1


def cmd_bench(args) -> int:
    scenario = _load(args)
    runs = bench(scenario, args.repetitions)
    print(render_table(runs))
    worst = max(abs(r.total - r.parts) / r.total for r in runs if r.total) if runs else 0.0
    print(f"additivity: largest relative gap between total and summed layers {worst:.2%}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smash", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, strategy=True):
        sp.add_argument("scenario", help="scenario JSON file or bundled scenario name")
        sp.add_argument("--seed", type=int, default=0, help="seed for sensor noise")
        if strategy:
            sp.add_argument("--strategy", choices=("bfs", "gbfs"), default=None)
        sp.add_argument("--bus", type=_bus_port, default=None, metavar="inproc|tcp:<port>")

    run = sub.add_parser("run", help="run a scenario and write its JSON-lines trace")
    common(run)
    run.add_argument("--out", help="trace file (default stdout)")
    run.add_argument("--pddl-out", help="directory for the emitted PDDL files")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="diff expected against observed device transitions")
    common(val)
    val.set_defaults(func=cmd_validate)

    b = sub.add_parser("bench", help="time repeated runs, one column per execution")
    b.add_argument("scenario")
    b.add_argument("-n", "--repetitions", type=int, default=4)
    b.add_argument("--strategy", choices=("bfs", "gbfs"), default=None)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=_LEVELS[_verbosity()], format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
