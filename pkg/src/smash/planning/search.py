"""Forward state-space search over ground STRIPS actions, and plan validation."""

from __future__ import annotations

import heapq
import itertools
import time
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..goals import Source
from ..logic import Atom, BeliefBase, Formula, holds
from .model import GroundAction, Plan, literal_goal


@dataclass(frozen=True)
class SearchLimits:
    max_nodes: int = 1_000_000
    max_seconds: float = 10.0


class PlanningFailure(Exception):
    reason = "unsolvable"

    def __init__(self, message: str, expanded: int = 0):
        super().__init__(message)
        self.expanded = expanded


class Unsolvable(PlanningFailure):
    reason = "unsolvable"


class SearchLimitExceeded(PlanningFailure):
    def __init__(self, message: str, expanded: int = 0, reason: str = "node_limit"):
        super().__init__(message, expanded)
        self.reason = reason


class GoalTest:
    def __init__(self, condition: Formula):
        self.condition = condition
        self.literals = literal_goal(condition)

    def __call__(self, state: frozenset[Atom]) -> bool:
        if self.literals is not None:
            pos, neg = self.literals
            return pos <= state and not (neg & state)
        return holds(self.condition, BeliefBase(state))

    def unsatisfied(self, state: frozenset[Atom]) -> int:
        """Goal-count heuristic: number of goal literals not yet true."""
        if self.literals is None:
            return 0 if self(state) else 1
        pos, neg = self.literals
        return len(pos - state) + len(neg & state)


def _as_state(init: BeliefBase | Iterable[Atom]) -> frozenset[Atom]:
    return init.as_set() if isinstance(init, BeliefBase) else frozenset(init)


def _path(parents: dict, state: frozenset[Atom]) -> tuple[Atom, ...]:
    steps = []
    while parents[state] is not None:
        state, name = parents[state]
        steps.append(name)
    return tuple(reversed(steps))


class _Fifo:
    def __init__(self, start):
        self.items = deque([start])

    def push(self, state):
        self.items.append(state)

    def pop(self):
        return self.items.popleft()

    def __bool__(self):
        return bool(self.items)


class _Greedy:
    def __init__(self, start, h):
        self.h = h
        self.counter = itertools.count()
        self.items: list = []
        self.push(start)

    def push(self, state):
        heapq.heappush(self.items, (self.h(state), next(self.counter), state))

    def pop(self):
        return heapq.heappop(self.items)[2]

    def __bool__(self):
        return bool(self.items)


def plan_for_goal(
    init: BeliefBase | Iterable[Atom],
    goal: Atom,
    condition: Formula,
    actions: Sequence[GroundAction],
    limits: SearchLimits = SearchLimits(),
    strategy: str = "bfs",
    source: Source = Source.USER,
) -> Plan:
    """Search for a plan reaching ``condition`` from ``init``.

    ``bfs`` returns a shortest plan, ties broken by the lexicographic order of
    the action-name sequence. ``gbfs`` is greedy best-first on the goal-count
    heuristic. Raises :class:`Unsolvable` or :class:`SearchLimitExceeded`.
    """
    test = GoalTest(condition)
    start = _as_state(init)
    if test(start):
        return Plan(goal, (), source)
    ordered = sorted(actions, key=lambda a: str(a.name))
    parents: dict[frozenset[Atom], tuple | None] = {start: None}
    deadline = time.monotonic() + limits.max_seconds
    expanded = 0

    if strategy == "bfs":
        frontier: _Fifo | _Greedy = _Fifo(start)
    elif strategy == "gbfs":
        frontier = _Greedy(start, test.unsatisfied)
    else:
        raise ValueError(f"unknown search strategy {strategy!r}")

    while frontier:
        state = frontier.pop()
        expanded += 1
        if expanded % 256 == 0 and time.monotonic() > deadline:
            raise SearchLimitExceeded(f"time limit reached planning {goal}", expanded, "time_limit")
        for a in ordered:
            if not a.applicable(state):
                continue
            nxt = a.apply(state)
            if nxt in parents:
                continue
            parents[nxt] = (state, a.name)
            if test(nxt):
                return Plan(goal, _path(parents, nxt), source)
            if len(parents) > limits.max_nodes:
                raise SearchLimitExceeded(f"node limit reached planning {goal}", expanded)
            frontier.push(nxt)
    raise Unsolvable(f"no plan for {goal}", expanded)


@dataclass(frozen=True)
class Validation:
    ok: bool
    step: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def validate_plan(
    init: BeliefBase | Iterable[Atom],
    actions: Iterable[GroundAction],
    condition: Formula,
    plan: Plan | Sequence[Atom],
) -> Validation:
    """Replay ``plan``; report the first inapplicable step or an unmet goal."""
    body = plan.body if isinstance(plan, Plan) else tuple(plan)
    by_name = {a.name: a for a in actions}
    state = _as_state(init)
    for i, name in enumerate(body):
        action = by_name.get(name)
        if action is None:
            return Validation(False, i, f"unknown action {name}")
        if not action.applicable(state):
            return Validation(False, i, f"precondition of {name} does not hold")
        state = action.apply(state)
    if not GoalTest(condition)(state):
        return Validation(False, len(body), "goal not satisfied")
    return Validation(True)
