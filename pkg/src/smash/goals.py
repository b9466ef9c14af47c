"""Goal status bookkeeping and the update -> select -> sort goal-reasoning pass."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .logic import (
    Atom,
    BeliefBase,
    Formula,
    LogicError,
    Parser,
    Term,
    evaluate,
    parse_formula,
    variables,
)
from .values import ImpactRule, ImportanceOrder, fired_impacts, value_atoms


class Status(str, enum.Enum):
    WAITING = "waiting"
    ACTIVE = "active"
    INACTIVE = "inactive"
    SUCCESS = "success"
    FAIL = "fail"
    DROPPED = "dropped"

    def __str__(self) -> str:
        return self.value


class Source(str, enum.Enum):
    USER = "user"
    SELF = "self"

    def __str__(self) -> str:
        return self.value


TERMINAL = frozenset({Status.SUCCESS, Status.FAIL, Status.DROPPED})

LEGAL_TRANSITIONS: dict[Status, frozenset[Status]] = {
    Status.WAITING: frozenset({Status.ACTIVE, Status.INACTIVE, Status.DROPPED}),
    Status.ACTIVE: frozenset({Status.SUCCESS, Status.FAIL, Status.DROPPED, Status.INACTIVE}),
    Status.INACTIVE: frozenset({Status.ACTIVE, Status.DROPPED, Status.WAITING}),
    Status.SUCCESS: frozenset(),
    Status.FAIL: frozenset(),
    Status.DROPPED: frozenset(),
}

# statuses a goal may be created in (a new lifetime)
INITIAL_STATUSES = frozenset({Status.WAITING, Status.ACTIVE, Status.INACTIVE})


class IllegalTransition(LogicError):
    pass


def is_legal(old: Status | None, new: Status) -> bool:
    if old is None:
        return new in INITIAL_STATUSES
    return new in LEGAL_TRANSITIONS[old]


@dataclass(frozen=True)
class GoalState:
    goal: Atom
    status: Status
    source: Source

    @property
    def key(self) -> tuple[Atom, Source]:
        return (self.goal, self.source)

    def __str__(self) -> str:
        return f"state({self.goal}, {self.status}, {self.source})"


@dataclass(frozen=True)
class Transition:
    goal: Atom
    source: Source
    old: Status | None
    new: Status
    reason: str = ""


class GoalStatusSet:
    """At most one entry per ``(goal, source)``; iteration follows arrival order.

    Every status write goes through :meth:`write`, which enforces the legal
    transition relation and appends to :attr:`history`.
    """

    def __init__(self, entries: Iterable[GoalState] = ()):
        self._entries: dict[tuple[Atom, Source], GoalState] = {}
        self.history: list[Transition] = []
        for e in entries:
            self.write(e.goal, e.source, e.status, "initial")

    def copy(self) -> "GoalStatusSet":
        clone = GoalStatusSet()
        clone._entries = dict(self._entries)
        clone.history = list(self.history)
        return clone

    def get(self, goal: Atom, source: Source) -> GoalState | None:
        return self._entries.get((goal, source))

    def write(self, goal: Atom, source: Source, status: Status, reason: str = "") -> GoalState:
        if not goal.is_ground:
            raise LogicError(f"goals must be ground: {goal}")
        current = self._entries.get((goal, source))
        old = current.status if current else None
        if not is_legal(old, status):
            raise IllegalTransition(f"{goal} ({source}): {old} -> {status} is not allowed")
        state = GoalState(goal, status, source)
        self._entries[(goal, source)] = state
        self.history.append(Transition(goal, source, old, status, reason))
        return state

    def restart(self, goal: Atom, source: Source, reason: str = "reposted") -> GoalState:
        """Start a fresh lifetime for a goal whose previous one ended."""
        current = self._entries.pop((goal, source), None)
        if current is not None and current.status not in TERMINAL:
            self._entries[(goal, source)] = current
            raise IllegalTransition(f"{goal} ({source}) is still {current.status}")
        return self.write(goal, source, Status.WAITING, reason)

    def with_status(self, status: Status, source: Source | None = None) -> list[GoalState]:
        return [e for e in self if e.status == status and (source is None or e.source == source)]

    def atoms(self) -> list[Atom]:
        """Goal states as flat beliefs ``goal(name, status, source, args...)`` for conditions."""
        return [
            Atom("goal", (Term(e.goal.predicate), Term(e.status.value), Term(e.source.value)) + e.goal.args)
            for e in self
        ]

    def to_json(self) -> list[dict]:
        return [{"goal": str(e.goal), "status": e.status.value, "source": e.source.value} for e in self]

    def __iter__(self) -> Iterator[GoalState]:
        return iter(self._entries.values())

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, GoalStatusSet):
            return list(self) == list(other)
        return NotImplemented

    def __repr__(self) -> str:
        return f"GoalStatusSet([{', '.join(map(str, self))}])"


@dataclass(frozen=True)
class GoalTemplate:
    goal: Atom
    status: Status
    source: Source

    def __str__(self) -> str:
        return f"state({self.goal}, {self.status}, {self.source})"


def parse_goal_template(text: str) -> GoalTemplate:
    """Parse ``state(goal(args...), status, source)``."""
    p = Parser(text)
    head = p.next()
    if head.text != "state":
        raise p.error("expected 'state('", head)
    p.expect("(")
    goal = p.atom()
    p.expect(",")
    status = p.term()
    p.expect(",")
    source = p.term()
    p.expect(")")
    p.end()
    try:
        return GoalTemplate(goal, Status(status.name), Source(source.name))
    except ValueError as exc:
        raise LogicError(f"bad goal state template {text!r}: {exc}") from None


@dataclass(frozen=True)
class GoalActivationRule:
    condition: Formula
    body: tuple[GoalTemplate, ...]

    def __post_init__(self):
        bound = variables(self.condition)
        for t in self.body:
            missing = t.goal.variables() - bound
            if missing:
                raise LogicError(f"goal template {t} uses unbound variables {sorted(missing)}")
            if t.status in (Status.SUCCESS, Status.FAIL):
                raise LogicError(f"activation rules cannot set {t.status}: {t}")

    @classmethod
    def parse(cls, condition: str, body: Sequence[str]) -> "GoalActivationRule":
        return cls(parse_formula(condition), tuple(parse_goal_template(b) for b in body))


def _view(b: BeliefBase, gs: GoalStatusSet) -> BeliefBase:
    view = b.copy()
    for a in gs.atoms():
        view.add(a)
    return view


def update(gs: GoalStatusSet, gg: Iterable[Atom], notes: list[str] | None = None) -> GoalStatusSet:
    """Insert the user's new goals as ``waiting``."""
    gs = gs.copy()
    for goal in gg:
        if not goal.is_ground:
            raise LogicError(f"user goals must be ground: {goal}")
        current = gs.get(goal, Source.USER)
        if current is None:
            gs.write(goal, Source.USER, Status.WAITING, "user request")
        elif current.status in TERMINAL:
            gs.restart(goal, Source.USER)
        elif notes is not None:
            notes.append(f"duplicate user goal {goal} ignored ({current.status})")
    return gs


def select(
    gs: GoalStatusSet,
    b: BeliefBase,
    ga: Sequence[GoalActivationRule],
    notes: list[str] | None = None,
) -> GoalStatusSet:
    """Apply the built-in activation of waiting user goals, then every rule in ``ga``.

    Rules see the goal states written by earlier rules of the same pass.
    """
    gs = gs.copy()
    for e in gs.with_status(Status.WAITING, Source.USER):
        gs.write(e.goal, e.source, Status.ACTIVE, "default activation")
    for i, rule in enumerate(ga):
        for subst in evaluate(rule.condition, _view(b, gs)):
            for t in rule.body:
                goal = t.goal.substitute(subst)
                current = gs.get(goal, t.source)
                old = current.status if current else None
                if old == t.status:
                    continue
                if is_legal(old, t.status):
                    gs.write(goal, t.source, t.status, f"activation rule {i}")
                elif notes is not None:
                    notes.append(f"rule {i}: {goal} ({t.source}) {old} -> {t.status} skipped")
    return gs


def impact_score(hits: Iterable[tuple[int, int, object]], iv: ImportanceOrder) -> tuple[int, ...]:
    """Per-bucket sum of impacts, most important bucket first."""
    score = [0] * len(iv.buckets)
    for _, impact, value in hits:
        rank = iv.rank(value)
        if rank is not None:
            score[rank] += impact
    return tuple(score)


def sort(
    gs: GoalStatusSet,
    b: BeliefBase,
    gi: Sequence[ImpactRule],
    iv: ImportanceOrder,
    notes: list[str] | None = None,
    user_first: bool = True,
) -> tuple[list[GoalState], GoalStatusSet]:
    """Drop self goals that hurt a value in ``iv`` and order the remaining active goals.

    User goals keep their arrival order; self goals are ordered by their impact
    score vectors compared lexicographically, ties keeping arrival order.
    """
    gs = gs.copy()
    view = _view(b, gs)
    scored = []
    for e in gs.with_status(Status.ACTIVE, Source.SELF):
        hits = fired_impacts(gi, view, e.goal)
        hurt = sorted({str(v) for _, impact, v in hits if impact < 0 and v in iv})
        if hurt:
            gs.write(e.goal, e.source, Status.DROPPED, f"negative impact on {', '.join(hurt)}")
            if notes is not None:
                notes.append(f"dropped {e.goal}: negative impact on {', '.join(hurt)}")
            continue
        scored.append((impact_score(hits, iv), gs.get(e.goal, e.source)))
    ordered_self = [e for _, e in sorted(scored, key=lambda p: p[0], reverse=True)]
    # sorted(reverse=True) keeps equal keys in original order
    user = gs.with_status(Status.ACTIVE, Source.USER)
    goals = user + ordered_self if user_first else ordered_self + user
    return goals, gs


def goal_reasoning(
    b: BeliefBase,
    gg: Iterable[Atom],
    iv: ImportanceOrder,
    gs: GoalStatusSet,
    ga: Sequence[GoalActivationRule],
    gi: Sequence[ImpactRule],
    notes: list[str] | None = None,
    user_first: bool = True,
) -> tuple[list[GoalState], GoalStatusSet]:
    view = b.copy()
    for a in value_atoms(iv):
        view.add(a)
    gs = update(gs, gg, notes)
    gs = select(gs, view, ga, notes)
    return sort(gs, view, gi, iv, notes, user_first)


def set_outcome(gs: GoalStatusSet, goal: Atom, source: Source, outcome: Status, reason: str = "") -> GoalStatusSet:
    if outcome not in (Status.SUCCESS, Status.FAIL):
        raise ValueError(f"outcome must be success or fail, not {outcome}")
    current = gs.get(goal, source)
    if current is None:
        raise IllegalTransition(f"no goal {goal} from {source}")
    if current.status != Status.ACTIVE:
        raise IllegalTransition(f"{goal} ({source}) is {current.status}, not active")
    gs = gs.copy()
    gs.write(goal, source, outcome, reason)
    return gs
