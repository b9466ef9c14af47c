"""Run the bundled living-room scenario and print each cycle's commands and outcomes."""

import argparse

from smash.report import diff_transitions
from smash.scenario import bundled, load_scenario, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--strategy", choices=("bfs", "gbfs"), default="bfs")
    args = ap.parse_args()

    scenario = load_scenario(bundled()).with_strategy(args.strategy)
    result = run_scenario(scenario, seed=args.seed)
    for t in result.traces:
        trigger = t.trigger.get("goals") or t.trigger.get("assert") or t.trigger.get("retract")
        print(f"cycle {t.index} at t={t.at:g}: {trigger}")
        print(f"  values   {t.iv}")
        for c in t.commands:
            print(f"  command  {c['command']}  ({c['goal']}){'' if c['ok'] else '  FAILED ' + c.get('err', '')}")
        for o in t.outcomes:
            print(f"  outcome  {o['goal']} -> {o['status']} ({o['reason']})")
    report = diff_transitions(scenario.expect, result.transitions["smash"])
    print("expected transitions:", "all matched" if report.ok else f"diverged: {report.first}")


if __name__ == "__main__":
    main()
