"""The planning layer: one search problem per goal, in goal-list order."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from ..goals import GoalState
from ..logic import BeliefBase, Term, variables
from ..values import ImpactRule, ImportanceOrder
from .grounding import ActionFilter, ground
from .model import ActionModel, GoalCondition, ModelError, Plan, goal_formula, project
from .pddl import emit_pddl, safe_name
from .search import PlanningFailure, SearchLimits, plan_for_goal


@dataclass
class PlanningResult:
    plans: list[Plan] = field(default_factory=list)
    failures: list[tuple[GoalState, str]] = field(default_factory=list)
    # (goal, seconds) for every goal handed to the layer, grounding included
    timings: list[tuple[GoalState, float]] = field(default_factory=list)


def _write_pddl(out: Path, goal: GoalState, kw, state, condition, flt: ActionFilter, constants) -> None:
    everything = ground(kw, state, constants)
    domain, problem = emit_pddl(
        "smash", kw, state, condition, problem_name=safe_name(goal.goal), blocked=flt.blocked(everything)
    )
    out.mkdir(parents=True, exist_ok=True)
    stem = safe_name(goal.goal)
    (out / f"domain_{stem}.pddl").write_text(domain)
    (out / f"problem_{stem}.pddl").write_text(problem)


def planning(
    b: BeliefBase,
    iv: ImportanceOrder,
    goals: Sequence[GoalState],
    kw: Sequence[ActionModel],
    ai: Sequence[ImpactRule] = (),
    goal_conditions: Sequence[GoalCondition] = (),
    view: BeliefBase | None = None,
    constants: Iterable[Term] = (),
    limits: SearchLimits = SearchLimits(),
    strategy: str = "bfs",
    pddl_out: str | Path | None = None,
    notes: list[str] | None = None,
) -> PlanningResult:
    """Plan for each goal against the state projected through the earlier plans.

    ``b`` is never mutated. Action-impact rules are evaluated on ``view``
    (beliefs plus derived atoms; defaults to ``b``). A goal without a plan is
    reported in ``failures`` with the reason ``unsolvable``, ``node_limit``,
    ``time_limit`` or ``bad_goal``.
    """
    result = PlanningResult()
    flt = ActionFilter(kw, ai, iv, view if view is not None else b)
    constants = tuple(constants)
    state = b.as_set()
    for g in goals:
        started = time.perf_counter()
        condition = goal_formula(g.goal, goal_conditions)
        try:
            if variables(condition):
                raise ModelError(f"condition for {g.goal} is not ground")
            actions = ground(kw, state, constants + g.goal.args, admissible=flt)
            plan = plan_for_goal(state, g.goal, condition, actions, limits, strategy, g.source)
            if pddl_out is not None:
                try:
                    _write_pddl(Path(pddl_out), g, kw, state, condition, flt, constants + g.goal.args)
                except ModelError as exc:
                    if notes is not None:
                        notes.append(f"pddl for {g.goal} not written: {exc}")
        except PlanningFailure as exc:
            result.failures.append((g, exc.reason))
            if notes is not None:
                notes.append(f"planning {g.goal}: {exc}")
        except ModelError as exc:
            result.failures.append((g, "bad_goal"))
            if notes is not None:
                notes.append(f"planning {g.goal}: {exc}")
        else:
            result.plans.append(plan)
            state = project(state, plan, actions)
        result.timings.append((g, time.perf_counter() - started))
    return result
