import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smash.acting import BodyItem, Refinement, RefinementError, Signal, acting, refine
from smash.goals import Source, Status
from smash.logic import Atom, BeliefBase, atom
from smash.planning import ActionModel, GoalCondition, Plan
from smash.scenario import bundled, load_scenario, run_scenario
from smash.values import ImpactRule, ImportanceOrder

from .oracles import stack_expand

KH = [
    Refinement.parse("turn_on(D)", None, ["set_status(D, standby)"]),
    Refinement.parse("play(D, C)", None, ["set_channel(D, C)", "set_status(D, playing)"]),
    Refinement.parse("watch(D, C)", None, [{"action": "turn_on(D)"}, {"action": "play(D, C)"}]),
]


class TestRefine:
    def test_flat(self):
        assert [str(c) for c in refine(atom("play", "tv", "canalplus"), BeliefBase(), KH)] == [
            "set_channel(tv,canalplus)",
            "set_status(tv,playing)",
        ]

    def test_nested_expansion_in_order(self):
        got = [str(c) for c in refine(atom("watch", "tv", "c1"), BeliefBase(), KH)]
        assert got == ["set_status(tv,standby)", "set_channel(tv,c1)", "set_status(tv,playing)"]

    def test_first_matching_entry_with_true_condition_wins(self):
        kh = [
            Refinement.parse("ring(P)", "quiet(P)", ["vibrate(P)"]),
            Refinement.parse("ring(P)", None, ["set_status(P, ringing)"]),
        ]
        assert [str(c) for c in refine(atom("ring", "ph"), BeliefBase([atom("quiet", "ph")]), kh)] == ["vibrate(ph)"]
        assert [str(c) for c in refine(atom("ring", "ph"), BeliefBase(), kh)] == ["set_status(ph,ringing)"]

    def test_condition_binds_extra_variables(self):
        kh = [Refinement.parse("mute(D)", "volume(D, V)", ["restore_later(D, V)", "set_volume(D, 0)"])]
        got = refine(atom("mute", "tv"), BeliefBase([atom("volume", "tv", 12)]), kh)
        assert [str(c) for c in got] == ["restore_later(tv,12)", "set_volume(tv,0)"]

    def test_no_refinement(self):
        with pytest.raises(RefinementError) as exc:
            refine(atom("fly", "tv"), BeliefBase(), KH)
        assert exc.value.reason == "no_refinement"

    def test_cycle_detected(self):
        kh = [
            Refinement.parse("a", None, [{"action": "b"}]),
            Refinement.parse("b", None, [{"action": "a"}]),
        ]
        with pytest.raises(RefinementError) as exc:
            refine(Atom("a"), BeliefBase(), kh)
        assert exc.value.reason == "cycle"

    def test_depth_budget(self):
        kh = [Refinement.parse(f"n{i}", None, [{"action": f"n{i + 1}"}]) for i in range(10)]
        kh.append(Refinement.parse("n10", None, ["done"]))
        assert refine(Atom("n0"), BeliefBase(), kh, depth_budget=11) == [Atom("done")]
        with pytest.raises(RefinementError) as exc:
            refine(Atom("n0"), BeliefBase(), kh, depth_budget=10)
        assert exc.value.reason == "depth_exhausted"

    def test_value_gate_aborts_whole_refinement(self):
        ci = [ImpactRule.parse("callerType(C, work)", "set_status(P, ringing)", -1, "hedonism")]
        kh = [Refinement.parse("alert(P)", None, ["light_on(P)", "set_status(P, ringing)"])]
        b = BeliefBase([atom("callerType", "boss", "work")])
        with pytest.raises(RefinementError) as exc:
            refine(atom("alert", "ph"), b, kh, ci, ImportanceOrder.of([["hedonism"]]))
        assert exc.value.reason == "value_gate"
        # the same rule is inert when its value is not held
        assert len(refine(atom("alert", "ph"), b, kh, ci, ImportanceOrder.of([["tradition"]]))) == 2

    def test_unbound_body_variable_rejected(self):
        with pytest.raises(Exception):
            Refinement.parse("go(D)", None, ["set_status(E, on)"])
        with pytest.raises(Exception):
            BodyItem("macro", Atom("x"))


def random_tree(rng):
    """A random acyclic know-how table over nullary names, depth at most five."""
    levels = [[f"n{d}_{i}" for i in range(rng.randint(1, 3))] for d in range(6)]
    table, kh = {}, []
    counter = 0
    for d, names in enumerate(levels):
        for name in names:
            body = []
            for _ in range(rng.randint(1, 3)):
                if d < 5 and rng.random() < 0.5:
                    body.append(("action", Atom(rng.choice(levels[d + 1]))))
                else:
                    counter += 1
                    body.append(("command", Atom(f"c{counter}")))
            table[Atom(name)] = body
            kh.append(Refinement(Atom(name), None, tuple(BodyItem(k, a) for k, a in body)))
    return Atom(levels[0][0]), table, kh


def test_expansion_matches_explicit_stack():
    rng = random.Random(21)
    for _ in range(300):
        root, table, kh = random_tree(rng)
        assert refine(root, BeliefBase(), kh) == stack_expand(root, table)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_expansion_is_pure_and_ground(seed):
    root, _, kh = random_tree(random.Random(seed))
    b = BeliefBase([atom("p", "a")])
    before = (b.as_set(), b.revision)
    out = refine(root, b, kh)
    assert out == refine(root, b, kh)
    assert all(c.is_ground for c in out)
    assert (b.as_set(), b.revision) == before


# -- acting over a fake device layer -------------------------------------------


class FakeHome:
    """Executes set_status commands on a belief base, with scripted failures."""

    def __init__(self, b, fail=None):
        self.b = b
        self.fail = fail or {}
        self.log = []

    def __call__(self, cmd):
        self.log.append(str(cmd))
        if str(cmd) in self.fail:
            return Signal(False, self.fail[str(cmd)])
        if cmd.predicate == "set_status":
            dev, status = cmd.args
            for old in [a for a in self.b if a.predicate == "devicestatus" and a.args[0] == dev]:
                self.b.discard(old)
            self.b.add(Atom("devicestatus", (dev, status)))
        return Signal(True)


GC = [GoalCondition.parse("on(D)", "deviceStatus(D, standby)")]
PLANS = [
    Plan(atom("on", "tv"), (atom("turn_on", "tv"),), Source.SELF),
    Plan(atom("on", "pc"), (atom("turn_on", "pc"),), Source.SELF),
]


def test_success_when_condition_observed():
    b = BeliefBase([atom("deviceStatus", "tv", "off"), atom("deviceStatus", "pc", "off")])
    res = acting(b, ImportanceOrder(), PLANS, KH, [], FakeHome(b), goal_conditions=GC)
    assert [(str(o.goal.goal), o.status) for o in res.outcomes] == [("on(tv)", Status.SUCCESS), ("on(pc)", Status.SUCCESS)]
    assert [str(r.command) for r in res.batch] == ["set_status(tv,standby)", "set_status(pc,standby)"]


@pytest.mark.parametrize("err", ["device_error", "timeout"])
def test_failed_command_fails_goal_and_later_plans_still_run(err):
    b = BeliefBase([atom("deviceStatus", "tv", "off"), atom("deviceStatus", "pc", "off")])
    home = FakeHome(b, {"set_status(tv,standby)": err})
    res = acting(b, ImportanceOrder(), PLANS, KH, [], home, goal_conditions=GC)
    assert [(o.status, o.reason) for o in res.outcomes] == [(Status.FAIL, err), (Status.SUCCESS, "goal condition observed")]
    assert home.log == ["set_status(tv,standby)", "set_status(pc,standby)"]
    assert res.batch[0].ok is False and res.batch[0].err == err


def test_rest_of_plan_skipped_after_failure():
    b = BeliefBase([atom("deviceStatus", "tv", "off")])
    plan = Plan(atom("watch", "tv", "c"), (atom("turn_on", "tv"), atom("play", "tv", "c")), Source.USER)
    home = FakeHome(b, {"set_status(tv,standby)": "device_error"})
    res = acting(b, ImportanceOrder(), [plan], KH, [], home)
    assert home.log == ["set_status(tv,standby)"]
    assert res.outcomes[0].status is Status.FAIL


def test_unreached_goal_fails():
    b = BeliefBase([atom("deviceStatus", "tv", "off")])
    kh = [Refinement.parse("turn_on(D)", None, ["noop(D)"])]
    res = acting(b, ImportanceOrder(), PLANS[:1], kh, [], FakeHome(b), goal_conditions=GC)
    assert (res.outcomes[0].status, res.outcomes[0].reason) == (Status.FAIL, "goal_not_reached")


def test_gate_uses_state_at_execution_time():
    # the first plan makes the work call visible, so the second plan's ring is withheld
    b = BeliefBase([atom("deviceStatus", "ph", "idle")])
    ci = [ImpactRule.parse("deviceStatus(ph, busy)", "set_status(P, ringing)", -1, "hedonism")]
    kh = [Refinement.parse("ring(P)", None, ["set_status(P, ringing)"]),
          Refinement.parse("occupy(P)", None, ["set_status(P, busy)"])]
    plans = [Plan(atom("busy", "ph"), (atom("occupy", "ph"),)), Plan(atom("rung", "ph"), (atom("ring", "ph"),))]
    home = FakeHome(b)
    res = acting(b, ImportanceOrder.of([["hedonism"]]), plans, kh, ci, home)
    assert home.log == ["set_status(ph,busy)"]
    assert res.outcomes[1].reason == "value_gate"


def test_projection_mismatch_is_noted():
    b = BeliefBase([atom("deviceStatus", "tv", "off")])
    kw = [ActionModel.parse("turn_on(D)", "deviceStatus(D, off)", ["deviceStatus(D, standby)"], ["deviceStatus(D, off)"])]
    kh = [Refinement.parse("turn_on(D)", None, ["set_status(D, playing)"])]
    notes = []
    acting(b, ImportanceOrder(), PLANS[:1], kh, [], FakeHome(b), kw=kw, goal_conditions=GC, notes=notes)
    assert any("projected and observed" in n for n in notes)


def test_family_call_batch_order():
    result = run_scenario(load_scenario(bundled()))
    family = next(t for t in result.traces if any("family" in a for a in t.trigger.get("assert", [])))
    assert [c["command"] for c in family.commands] == ["set_status(tv,mute)", "set_status(phone,ringing)"]
    assert all(c["ok"] for c in family.commands)
