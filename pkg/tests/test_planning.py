import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smash.goals import GoalState, Source, Status
from smash.logic import Atom, AtomNode, BeliefBase, Const, atom, conjoin, parse_formula
from smash.planning import (
    ActionFilter,
    ActionModel,
    GoalCondition,
    ModelError,
    SearchLimitExceeded,
    SearchLimits,
    Unsolvable,
    filter_actions,
    goal_formula,
    ground,
    plan_for_goal,
    planning,
    universe,
    validate_plan,
)
from smash.values import ImpactRule, ImportanceOrder, Value

from .oracles import (
    _fires,
    enumerate_groundings,
    first_violation,
    random_strips,
    relaxed_groundings,
    state_graph_optimum,
)

TV_KW = [
    ActionModel.parse("turn_on(D)", "deviceStatus(D, off)", ["deviceStatus(D, standby)"], ["deviceStatus(D, off)"]),
    ActionModel.parse(
        "display(D, C)",
        "deviceStatus(D, standby) & channel(C)",
        ["deviceStatus(D, playing)", "displaying(D, C)"],
        ["deviceStatus(D, standby)"],
    ),
]


def literal_condition(pos, neg=()):
    items = [AtomNode(a) for a in sorted(pos)] + [parse_formula(f"not {a}") for a in sorted(map(str, neg))]
    return conjoin(items)


class TestModels:
    def test_unbound_effect_variable_rejected(self):
        with pytest.raises(ModelError):
            ActionModel.parse("go(X)", "at(X)", ["at(Y)"])

    def test_condition_must_be_conjunctive(self):
        with pytest.raises(ModelError):
            ActionModel.parse("go(X)", "at(X) | near(X)")

    def test_goal_condition_default_is_identity(self):
        assert goal_formula(atom("g", "a")) == AtomNode(atom("g", "a"))
        gc = GoalCondition.parse("turnOn(D)", "deviceStatus(D, standby)")
        assert goal_formula(atom("turnOn", "tv"), [gc]) == parse_formula("deviceStatus(tv, standby)")


class TestGrounding:
    def test_counting_bound(self):
        kw = [ActionModel.parse("link(X, Y)")]
        got = ground(kw, [], [Const(c) for c in "abc"], reachable_only=False)
        assert len(got) == 9

    def test_precondition_restricts_to_devices(self):
        b = BeliefBase([atom("deviceStatus", "tv", "off"), atom("phone", "phone")])
        names = [str(g.name) for g in ground(TV_KW[:1], b)]
        assert names == ["turn_on(tv)"]

    def test_deterministic_order(self):
        b = BeliefBase([atom("p", c) for c in "cab"])
        kw = [ActionModel.parse("use(X)", "p(X)")]
        assert [str(g.name) for g in ground(kw, b)] == ["use(a)", "use(b)", "use(c)"]

    def test_matches_enumeration_oracle(self):
        rng = random.Random(5)
        consts = [Const(c) for c in "abcd"]
        for _ in range(150):
            kw = random_models(rng, 3)
            facts = random_facts(rng)
            full = {g.name for g in ground(kw, facts, consts, reachable_only=False)}
            uni = universe(kw, facts, consts)
            want = set().union(*(enumerate_groundings(m, uni, None) for m in kw))
            assert full == want
            relaxed = {g.name for g in ground(kw, facts, consts)}
            assert relaxed == relaxed_groundings(kw, facts, uni)


def random_models(rng, n):
    out = []
    for i in range(n):
        params = ["X", "Y"][: rng.randint(0, 2)]
        pool = params + ["a", "b"]
        pos = [f"{rng.choice(['p', 'q'])}({rng.choice(pool)})" for _ in range(rng.randint(0, 2))]
        if params and rng.random() < 0.5:
            pos.append(f"r({rng.choice(pool)}, {rng.choice(pool)})")
        neg = [f"not p({rng.choice(pool)})"] if rng.random() < 0.3 else []
        cmp = ["X != Y"] if len(params) == 2 and rng.random() < 0.4 else []
        cond = " & ".join(pos + neg + cmp) or None
        add = [f"{rng.choice(['p', 'q'])}({rng.choice(pool)})" for _ in range(rng.randint(1, 2))]
        dele = [f"p({rng.choice(pool)})"] if rng.random() < 0.5 else []
        head = f"act{i}({', '.join(params)})" if params else f"act{i}"
        try:
            out.append(ActionModel.parse(head, cond, add, dele))
        except Exception:
            out.append(ActionModel.parse(head, None, [f"q({params[0] if params else 'a'})"]))
    return out


def random_facts(rng):
    return [atom(rng.choice(["p", "q"]), rng.choice("abcd")) for _ in range(rng.randint(0, 4))] + [
        atom("r", rng.choice("abcd"), rng.choice("abcd")) for _ in range(rng.randint(0, 3))
    ]


class TestFilter:
    def test_negative_ring_excluded_while_watching(self):
        ai = [ImpactRule.parse("deviceStatus(tv, playing)", "ring(P)", -1, "hedonism")]
        kw = [ActionModel.parse("ring(P)", "phone(P)", ["ringing(P)"])]
        b = BeliefBase([atom("deviceStatus", "tv", "playing"), atom("phone", "p1"), atom("phone", "p2")])
        flt = filter_actions(kw, ai, ImportanceOrder.of([[Value.HEDONISM]]), b)
        assert ground(kw, b, admissible=flt) == []
        # with hedonism absent from the order every grounding is allowed
        flt = filter_actions(kw, ai, ImportanceOrder.of([[Value.TRADITION]]), b)
        assert len(ground(kw, b, admissible=flt)) == 2

    def test_no_rules_admit_everything(self):
        b = BeliefBase([atom("p", "a")])
        kw = [ActionModel.parse("use(X)", "p(X)")]
        flt = filter_actions(kw, [], ImportanceOrder.of([[Value.HEDONISM]]), b)
        assert len(ground(kw, b, admissible=flt)) == 1

    def test_matches_pair_check_oracle(self):
        rng = random.Random(17)
        values = [Value.HEDONISM, Value.TRADITION, Value.POWER_DOMINANCE]
        for _ in range(150):
            kw = random_models(rng, 3)
            facts = random_facts(rng) + [atom("c", i) for i in range(2) if rng.random() < 0.5]
            b = BeliefBase(facts)
            iv = ImportanceOrder.of([[v] for v in rng.sample(values, 2)])
            ai = []
            for _ in range(rng.randint(0, 4)):
                m = rng.choice(kw)
                target = str(m.action) if rng.random() < 0.7 else f"{m.name}({', '.join('a' for _ in m.params)})" if m.params else m.name
                ai.append(ImpactRule.parse(rng.choice(["c(0)", "c(1)", "p(a)", "q(X)"]), target, rng.choice([-1, 0, 1]), rng.choice(values).value))
            acts = ground(kw, b, [Const("a"), Const("b")], reachable_only=False)
            flt = ActionFilter(kw, ai, iv, b)
            frozen = b.as_set()
            for g in acts:
                bad = any(
                    r.impact < 0 and r.value in iv and _fires(r.condition, r.target, g.name, frozen) for r in ai
                )
                assert flt.admits(g.name) == (not bad), (str(g.name), ai)


class TestSearch:
    def test_goal_already_satisfied(self):
        plan = plan_for_goal([atom("g")], atom("g"), AtomNode(atom("g")), [])
        assert plan.body == ()

    def test_tv_plan(self):
        b = BeliefBase([atom("deviceStatus", "tv", "off"), atom("channel", "canalplus")])
        cond = parse_formula("deviceStatus(tv, playing) & displaying(tv, canalplus)")
        acts = ground(TV_KW, b)
        plan = plan_for_goal(b, atom("watch", "tv", "canalplus"), cond, acts)
        assert [str(a) for a in plan.body] == ["turn_on(tv)", "display(tv,canalplus)"]
        assert validate_plan(b, acts, cond, plan)

    def test_unsolvable_vs_limit(self):
        b = BeliefBase([atom("deviceStatus", "tv", "off"), atom("channel", "canalplus")])
        acts = ground(TV_KW, b)
        with pytest.raises(Unsolvable):
            plan_for_goal(b, atom("g"), AtomNode(atom("missing")), acts)
        with pytest.raises(SearchLimitExceeded) as exc:
            plan_for_goal(b, atom("g"), parse_formula("displaying(tv, canalplus)"), acts, SearchLimits(max_nodes=1))
        assert exc.value.reason == "node_limit"

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            plan_for_goal([], atom("g"), AtomNode(atom("g")), [], strategy="astar")

    def test_bfs_optimal_on_random_instances(self):
        rng = random.Random(3)
        for _ in range(200):
            init, actions, gp, gn = random_strips(rng)
            cond = literal_condition(gp, gn) or AtomNode(Atom("true"))
            if not gp and not gn:
                continue
            plan = plan_for_goal(init, Atom("g"), cond, actions)
            assert len(plan.body) == state_graph_optimum(init, actions, frozenset(gp), frozenset(gn))
            assert validate_plan(init, actions, cond, plan)

    def test_bfs_tie_break_is_lexicographic(self):
        rng = random.Random(11)
        import itertools

        for _ in range(40):
            init, actions, gp, gn = random_strips(rng, n_facts=5, n_actions=5)
            cond = literal_condition(gp, gn)
            plan = plan_for_goal(init, Atom("g"), cond, actions)
            n = len(plan.body)
            names = sorted((a.name for a in actions), key=str)
            best = None
            for seq in itertools.product(names, repeat=n):
                if validate_plan(init, actions, cond, seq):
                    best = seq
                    break
            assert tuple(plan.body) == best

    def test_gbfs_plans_validate(self):
        rng = random.Random(4)
        for _ in range(200):
            init, actions, gp, gn = random_strips(rng)
            cond = literal_condition(gp, gn)
            plan = plan_for_goal(init, Atom("g"), cond, actions, strategy="gbfs")
            assert validate_plan(init, actions, cond, plan)


class TestValidate:
    def test_empty_plan_satisfied_goal(self):
        assert validate_plan([atom("g")], [], AtomNode(atom("g")), [])

    def test_goal_not_reached(self):
        v = validate_plan([], [], AtomNode(atom("g")), [])
        assert not v and v.step == 0 and "goal" in v.reason

    def test_shuffled_plans_fail_at_first_bad_step(self):
        rng = random.Random(8)
        checked = 0
        while checked < 100:
            init, actions, gp, gn = random_strips(rng)
            cond = literal_condition(gp, gn)
            plan = plan_for_goal(init, Atom("g"), cond, actions)
            if len(plan.body) < 2:
                continue
            body = list(plan.body)
            rng.shuffle(body)
            v = validate_plan(init, actions, cond, body)
            want = first_violation(init, actions, body)
            if want is None:
                assert v.ok or v.step == len(body)
            else:
                assert not v.ok and v.step == want
            checked += 1


def _goal(name, *args, source=Source.SELF):
    return GoalState(atom(name, *args), Status.ACTIVE, source)


class TestPlanningLayer:
    KW = [
        ActionModel.parse("make(X)", "need(X)", ["have(X)"]),
        ActionModel.parse("combine", "have(a) & have(b)", ["have(c)"]),
    ]

    def test_no_goals(self):
        res = planning(BeliefBase(), ImportanceOrder(), [], self.KW)
        assert res.plans == [] and res.failures == []

    def test_unreachable_goal_fails_alone(self):
        b = BeliefBase([atom("need", "a")])
        res = planning(b, ImportanceOrder(), [_goal("have", "zz"), _goal("have", "a")], self.KW)
        assert [f[1] for f in res.failures] == ["unsolvable"]
        assert [str(p.goal) for p in res.plans] == ["have(a)"]
        assert len(res.timings) == 2

    def test_sequential_projection_matches_oracle(self):
        b = BeliefBase([atom("need", "a"), atom("need", "b")])
        goals = [_goal("have", "a"), _goal("have", "b"), _goal("have", "c")]
        res = planning(b, ImportanceOrder(), goals, self.KW)
        # oracle: plan each goal on the explicitly projected state
        state = b.as_set()
        want = []
        for g in goals:
            acts = ground(self.KW, state)
            p = plan_for_goal(state, g.goal, AtomNode(g.goal), acts)
            want.append(p.body)
            for name in p.body:
                a = next(x for x in acts if x.name == name)
                state = (state - a.delete) | a.add
        assert [p.body for p in res.plans] == want
        assert [str(x) for x in res.plans[2].body] == ["combine"]

    def test_beliefs_never_mutated(self):
        b = BeliefBase([atom("need", "a")])
        before = (b.as_set(), b.revision)
        planning(b, ImportanceOrder(), [_goal("have", "a")], self.KW)
        assert (b.as_set(), b.revision) == before

    def test_disjunctive_goal_condition(self):
        gc = [GoalCondition.parse("odd(X)", "have(X) | spare(X)")]
        b = BeliefBase([atom("need", "a")])
        res = planning(b, ImportanceOrder(), [_goal("odd", "a")], self.KW, goal_conditions=gc)
        assert [str(s) for s in res.plans[0].body] == ["make(a)"]

    def test_goal_condition_with_free_variable_rejected(self):
        with pytest.raises(ModelError):
            GoalCondition.parse("odd(X)", "have(X) & w(X, W)")

    def test_inadmissible_actions_never_planned(self):
        ai = [ImpactRule.parse("need(a)", "make(a)", -1, "tradition")]
        b = BeliefBase([atom("need", "a")])
        res = planning(b, ImportanceOrder.of([["tradition"]]), [_goal("have", "a")], self.KW, ai)
        assert res.plans == [] and res.failures[0][1] == "unsolvable"


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_plans_are_valid_and_admissible(seed):
    rng = random.Random(seed)
    kw = random_models(rng, 3)
    b = BeliefBase(random_facts(rng) + [atom("c", 0)])
    iv = ImportanceOrder.of([["hedonism"]])
    ai = [ImpactRule.parse("c(0)", str(rng.choice(kw).action), -1, "hedonism")]
    flt = ActionFilter(kw, ai, iv, b)
    acts = ground(kw, b, [Const("a"), Const("b")])
    target = rng.choice(sorted({a for g in acts for a in g.add} or {atom("q", "a")}))
    res = planning(b, iv, [GoalState(target, Status.ACTIVE, Source.USER)], kw, ai, constants=[Const("a"), Const("b")])
    for p in res.plans:
        assert all(flt.admits(step) for step in p.body)
        allowed = ground(kw, b, [Const("a"), Const("b")], admissible=flt)
        assert validate_plan(b, allowed, AtomNode(target), p)
