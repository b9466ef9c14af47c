"""Swap two values in the default importance order and show how device behaviour changes."""

import argparse
import copy
import json

from smash.report import validate_scenario
from smash.scenario import bundled, parse_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lower", default="hedonism", help="value to move below --above")
    ap.add_argument("--above", default="conformity_rules")
    args = ap.parse_args()

    data = json.loads(bundled().read_text())
    buckets = [list(b) for b in data["values"]["iv_d"]]
    flat = [v for b in buckets for v in b]
    i, j = flat.index(args.lower), flat.index(args.above)
    flat[i], flat[j] = flat[j], flat[i]
    swapped = copy.deepcopy(data)
    swapped["values"]["iv_d"] = [[v] for v in flat]
    print("default order:", buckets)
    print("swapped order:", swapped["values"]["iv_d"])

    report = validate_scenario(parse_scenario(swapped))
    if report.ok:
        print("no behavioural difference")
        return
    print(f"first divergence at cycle {report.divergence_cycle}")
    for line in report.lines:
        print(" ", line)


if __name__ == "__main__":
    main()
