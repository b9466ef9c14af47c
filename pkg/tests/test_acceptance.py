"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict that the terminal summary prints.
"""

import copy
import itertools
import json
import random
import time

import smash.runtime as runtime
from smash.cli import main
from smash.logic import Atom, BeliefBase, parse_atom, variables
from smash.planning import ground, parse_pddl, plan_for_goal, validate_plan
from smash.planning.model import goal_formula
from smash.planning.pddl import emit_pddl, safe_name
from smash.report import bench, validate_scenario
from smash.scenario import bundled, load_scenario, parse_scenario, run_scenario
from smash.values import ImportanceOrder, value_reasoning

from .conftest import ACCEPTANCE
from .oracles import (
    brute_force_solutions,
    legal_write,
    list_surgery_reasoning,
    random_strips,
    state_graph_optimum,
    truth,
)
from .test_pddl import literal_sets, random_domain
from .test_planning import literal_condition
from .test_values import lists, random_instance

POC = json.loads(bundled().read_text())


def record(key, ok, detail):
    ACCEPTANCE[key] = (bool(ok), detail)
    assert ok, detail


# -- C1 -------------------------------------------------------------------------

GOLDEN = [
    ("tv", "off", "standby"),
    ("tv", "standby", "playing"),
    ("phone", "idle", "voicemail"),
    ("tv", "playing", "mute"),
    ("phone", "voicemail", "ringing"),
    ("tv", "mute", "recording"),
    ("tv", "recording", "playing"),
]


def test_c1_golden_scenario(capsys):
    started = time.perf_counter()
    code = main(["validate", "smash_poc"])
    elapsed = time.perf_counter() - started
    capsys.readouterr()
    result = run_scenario(load_scenario(bundled()))
    seen = [(t["device"], t["from"], t["to"]) for t in result.transitions["smash"] if t["property"] == "status"]
    ok = code == 0 and seen == GOLDEN and elapsed < 5.0
    record("C1", ok, f"validate exit {code}, {len(seen)} status transitions match golden={seen == GOLDEN}, {elapsed:.2f}s")


# -- C2 -------------------------------------------------------------------------


def test_c2_layer_timings():
    runs = bench(load_scenario(bundled()), 4)
    vg = max(r.value_goal_max for r in runs)
    plan = max(max(r.planning.values()) for r in runs)
    gap = max(abs(r.total - r.parts) / r.total for r in runs)
    ok = vg <= 0.425 and plan <= 1.124 and gap <= 0.05
    record("C2", ok, f"value+goal max/cycle {vg:.4f}s (<=0.425), planning max/goal {plan:.4f}s (<=1.124), additivity {gap:.2%} (<=5%)")


# -- C3 -------------------------------------------------------------------------


def test_c3_planner_optimality():
    rng = random.Random(2023)
    optimal = valid_gbfs = n = 0
    while n < 200:
        init, actions, gp, gn = random_strips(rng)
        if not gp and not gn:
            continue
        n += 1
        cond = literal_condition(gp, gn)
        bfs = plan_for_goal(init, Atom("g"), cond, actions)
        optimal += len(bfs.body) == state_graph_optimum(init, actions, frozenset(gp), frozenset(gn))
        gbfs = plan_for_goal(init, Atom("g"), cond, actions, strategy="gbfs")
        valid_gbfs += bool(validate_plan(init, actions, cond, gbfs))
    record("C3", optimal == 200 and valid_gbfs == 200, f"bfs optimal {optimal}/200, gbfs valid {valid_gbfs}/200")


# -- C4 -------------------------------------------------------------------------

VALUES = ["hedonism", "conformity_rules", "benevolence_caring", "security_personal", "tradition"]
CONDITIONS = [
    "callerType(C, work)",
    "callerType(C, family)",
    "beSeated(U, sofa)",
    "isStand(U)",
    "deviceStatus(tv, playing)",
    "deviceStatus(phone, idle)",
]
ACTION_TARGETS = [m["action"] for m in POC["planning"]["kw"]] + ["ring(phone, S)", "mute_tv(tv)", "play(D, canalplus)"]
COMMAND_TARGETS = ["set_status(D, S)", "set_status(P, ringing)", "set_status(D, mute)", "set_channel(D, C)", "set_status(tv, recording)"]
EVENT_POOL = [
    {"user_goal": "watch(TV, Canal+)"},
    {"device": "sofa", "trigger": "weight", "args": [78]},
    {"device": "sofa", "trigger": "weight", "args": [2]},
    {"device": "phone", "trigger": "incoming_call", "args": ["boss", "work"]},
    {"device": "phone", "trigger": "incoming_call", "args": ["mom", "family"]},
    {"device": "phone", "trigger": "incoming_call", "args": ["friend", "social"]},
]


def _rule(rng, target):
    cond = rng.choice(CONDITIONS)
    if rng.random() < 0.4:
        a, b = rng.sample(VALUES, 2)
        cond += f" & moreImportant({a}, {b})"
    return {"condition": cond, "body": {**target, "impact": rng.choice([-1, -1, 0, 1]), "value": rng.choice(VALUES)}}


def random_scenario(rng):
    data = copy.deepcopy(POC)
    pool = rng.sample(VALUES, rng.randint(2, 5))
    data["values"]["iv_d"] = [[v] for v in pool]
    data["planning"]["ai"] = [_rule(rng, {"action": rng.choice(ACTION_TARGETS)}) for _ in range(rng.randint(1, 4))]
    data["acting"]["ci"] = [_rule(rng, {"command": rng.choice(COMMAND_TARGETS)}) for _ in range(rng.randint(1, 4))]
    data["events"] = [dict(rng.choice(EVENT_POOL), at=i) for i in range(rng.randint(3, 8))]
    data["expect"] = []
    return parse_scenario(data)


def random_runs():
    rng = random.Random(77)
    return [(s, run_scenario(s)) for s in (random_scenario(rng) for _ in range(100))]


def negative_fire(rules, step: Atom, facts: frozenset, held: set) -> bool:
    """Brute-force check that some negative rule on a held value fires for ``step``."""
    universe = sorted({t for a in facts for t in a.args})
    for r in rules:
        if r.impact >= 0 or r.value.value not in held:
            continue
        if r.target.predicate != step.predicate or len(r.target.args) != len(step.args):
            continue
        env, matched = {}, True
        for pattern, value in zip(r.target.args, step.args):
            if pattern.is_var:
                if env.setdefault(pattern.name, value) != value:
                    matched = False
            elif pattern != value:
                matched = False
        if not matched:
            continue
        rest = sorted(variables(r.condition) - set(env))
        for combo in itertools.product(universe, repeat=len(rest)):
            if truth(r.condition, facts, {**env, **dict(zip(rest, combo))}):
                return True
    return False


def test_c4_value_gate_soundness():
    violations = steps = commands = gated = blocked = 0
    for scenario, result in random_runs():
        cfg = scenario.agents[0]
        for t in result.traces:
            held = {v for bucket in t.iv for v in bucket}
            for p in t.plans:
                for s in p["body"]:
                    steps += 1
                    violations += negative_fire(cfg.ai, parse_atom(s, ground=True), t.planning_view, held)
            for c, view in zip(t.commands, t.command_views):
                commands += 1
                violations += negative_fire(cfg.ci, parse_atom(c["command"], ground=True), view, held)
            gated += sum(o["reason"] == "value_gate" for o in t.outcomes)
            blocked += sum(f["reason"] == "unsolvable" for f in t.failures)
    ok = violations == 0 and steps > 0 and commands > 0
    record("C4", ok, f"{violations} violations over {steps} plan steps and {commands} commands in 100 scenarios ({gated} gated at acting, {blocked} unplannable)")


# -- C5 -------------------------------------------------------------------------


def test_c5_goal_lifecycle(monkeypatch):
    unverified: list[str] = []
    real = runtime.acting

    def checked(b, iv, plans, kh, ci, execute, view=None, kw=(), goal_conditions=(), *args, **kwargs):
        # snapshot beliefs after every command so each goal is judged at its own completion
        snapshots = [b.as_set()]

        def observed(cmd):
            signal = execute(cmd)
            snapshots.append(b.as_set())
            return signal

        res = real(b, iv, plans, kh, ci, observed, view, kw, goal_conditions, *args, **kwargs)
        done = 0
        for o in res.outcomes:
            while done < len(res.batch) and res.batch[done].goal == o.goal.goal:
                done += 1
            if o.status.value == "success":
                cond = goal_formula(o.goal.goal, goal_conditions)
                if not brute_force_solutions(cond, snapshots[done]):
                    unverified.append(str(o.goal.goal))
        return res

    monkeypatch.setattr(runtime, "acting", checked)
    runs = [(None, run_scenario(load_scenario(bundled())))] + random_runs()
    writes = illegal = successes = 0
    for _, result in runs:
        for agent in result.agents:
            for tr in agent.gs.history:
                writes += 1
                illegal += not legal_write(tr.old.value if tr.old else None, tr.new.value)
                successes += tr.new.value == "success"
    ok = illegal == 0 and not unverified and successes > 0
    record("C5", ok, f"{illegal} illegal of {writes} status writes; {successes} successes, {len(unverified)} without their condition")


# -- C6 -------------------------------------------------------------------------


def test_c6_value_oracle():
    rng = random.Random(6)
    same = 0
    for _ in range(1000):
        facts, buckets, vo, oracle_rules = random_instance(rng)
        got = value_reasoning(BeliefBase(facts), ImportanceOrder.of(buckets), vo)
        same += lists(got) == list_surgery_reasoning(facts, buckets, oracle_rules)
    record("C6", same == 1000, f"{same}/1000 match the list-surgery oracle")


# -- C7 -------------------------------------------------------------------------


def test_c7_pddl_round_trip(tmp_path):
    rng = random.Random(70)
    intact = 0
    for _ in range(50):
        models, init, goal = random_domain(rng)
        back, b, _ = parse_pddl(*emit_pddl("d", models, init, goal, "p"))
        intact += [literal_sets(m) for m in back] == [literal_sets(m) for m in models] and b.as_set() == init
    result = run_scenario(load_scenario(bundled()), pddl_out=str(tmp_path))
    last = {}
    for t in result.traces:
        for p in t.plans:
            last[safe_name(parse_atom(p["goal"], ground=True))] = [parse_atom(s, ground=True) for s in p["body"]]
    valid = 0
    for stem, body in last.items():
        kw, b, gc = parse_pddl((tmp_path / f"domain_{stem}.pddl").read_text(), (tmp_path / f"problem_{stem}.pddl").read_text())
        valid += bool(validate_plan(b, ground(kw, b), gc.condition, body))
    ok = intact == 50 and last and valid == len(last)
    record("C7", ok, f"{intact}/50 models intact; {valid}/{len(last)} PoC plans validate against their emitted files")


# -- C8 -------------------------------------------------------------------------


def test_c8_counterfactual():
    data = copy.deepcopy(POC)
    data["values"]["iv_d"] = [["benevolence_caring"], ["conformity_rules"], ["hedonism"]]
    report = validate_scenario(parse_scenario(data))
    first = report.first
    boss_cycle = 2
    flipped = (
        first is not None
        and first.position == 2
        and first.cycle == boss_cycle
        and first.sign == "-"
        and first.transition["to"] == "voicemail"
        and any(line.sign == "+" and line.transition["to"] == "ringing" and line.cycle == boss_cycle for line in report.lines)
    )
    record("C8", flipped, f"first divergence at position {first.position if first else None}, cycle {report.divergence_cycle}: {first}")
