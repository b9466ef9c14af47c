"""Compare breadth-first and greedy plans on random STRIPS instances against the exhaustive optimum."""

import argparse
import random
import statistics
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from smash.logic import Atom, AtomNode, conjoin, parse_formula  # noqa: E402
from smash.planning import plan_for_goal, validate_plan  # noqa: E402
from tests.oracles import random_strips, state_graph_optimum  # noqa: E402


def condition(pos, neg):
    return conjoin([AtomNode(a) for a in sorted(pos)] + [parse_formula(f"not {a}") for a in sorted(map(str, neg))])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    rows = []
    while len(rows) < args.n:
        init, actions, gp, gn = random_strips(rng)
        if not gp and not gn:
            continue
        cond = condition(gp, gn)
        best = state_graph_optimum(init, actions, frozenset(gp), frozenset(gn))
        row = [best]
        for strategy in ("bfs", "gbfs"):
            t0 = time.perf_counter()
            plan = plan_for_goal(init, Atom("g"), cond, actions, strategy=strategy)
            row += [len(plan.body), time.perf_counter() - t0, bool(validate_plan(init, actions, cond, plan))]
        rows.append(row)

    bfs_opt = sum(r[1] == r[0] for r in rows)
    gbfs_opt = sum(r[4] == r[0] for r in rows)
    print(f"instances                 {len(rows)}")
    print(f"bfs optimal / valid       {bfs_opt} / {sum(r[3] for r in rows)}")
    print(f"gbfs optimal / valid      {gbfs_opt} / {sum(r[6] for r in rows)}")
    print(f"mean optimum length       {statistics.mean(r[0] for r in rows):.2f}")
    print(f"mean gbfs excess length   {statistics.mean(r[4] - r[0] for r in rows):.2f}")
    print(f"median bfs / gbfs time    {statistics.median(r[2] for r in rows) * 1e3:.3f} / {statistics.median(r[5] for r in rows) * 1e3:.3f} ms")


if __name__ == "__main__":
    main()
