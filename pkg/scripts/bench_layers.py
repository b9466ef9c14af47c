"""Time each reasoning layer over repeated runs of a scenario and check additivity."""

import argparse

from smash.cli import _resolve
from smash.report import bench, render_table
from smash.scenario import load_scenario

VALUE_GOAL_BUDGET = 0.425
PLANNING_BUDGET = 1.124


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scenario", nargs="?", default="smash_poc")
    ap.add_argument("-n", "--repetitions", type=int, default=4)
    args = ap.parse_args()

    runs = bench(load_scenario(_resolve(args.scenario)), args.repetitions)
    print(render_table(runs))
    vg = max(r.value_goal_max for r in runs)
    plan = max((max(r.planning.values(), default=0.0) for r in runs), default=0.0)
    gap = max(abs(r.total - r.parts) / r.total for r in runs if r.total)
    print()
    print(f"slowest value+goal cycle  {vg:.6f}s  budget {VALUE_GOAL_BUDGET}s  {'ok' if vg <= VALUE_GOAL_BUDGET else 'OVER'}")
    print(f"slowest goal planning     {plan:.6f}s  budget {PLANNING_BUDGET}s  {'ok' if plan <= PLANNING_BUDGET else 'OVER'}")
    print(f"additivity gap            {gap:.2%}  budget 5%  {'ok' if gap <= 0.05 else 'OVER'}")


if __name__ == "__main__":
    main()
