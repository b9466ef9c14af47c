from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from ..goals import Source
from ..logic import (
    Atom,
    AtomNode,
    BeliefBase,
    Compare,
    Formula,
    LogicError,
    Not,
    Parser,
    Term,
    conjoin,
    conjuncts,
    match,
    parse_formula,
    substitute,
    variables,
)


class ModelError(LogicError):
    pass


def split_condition(f: Formula | None) -> tuple[list[Atom], list[Atom], list[Compare]]:
    """Split a conjunctive precondition into positive atoms, negated atoms and comparisons."""
    pos: list[Atom] = []
    neg: list[Atom] = []
    cmp: list[Compare] = []
    if f is None:
        return pos, neg, cmp
    for item in conjuncts(f):
        if isinstance(item, AtomNode):
            pos.append(item.atom)
        elif isinstance(item, Not) and isinstance(item.arg, AtomNode):
            neg.append(item.arg.atom)
        elif isinstance(item, Compare):
            cmp.append(item)
        else:
            raise ModelError("preconditions must be conjunctions of literals and comparisons")
    return pos, neg, cmp


def _parse_template(text: str) -> Atom:
    p = Parser(text)
    a = p.atom()
    p.end()
    return a


@dataclass(frozen=True)
class ActionModel:
    """A know-what entry: ``(action, condition, (add, delete))``.

    Every variable of the condition and effects must be one of the action's
    parameters, so that a grounding of the parameters grounds everything.
    """

    action: Atom
    condition: Formula | None = None
    add: tuple[Atom, ...] = ()
    delete: tuple[Atom, ...] = ()

    def __post_init__(self):
        params = [t.name for t in self.action.args]
        if not all(t.is_var for t in self.action.args) or len(set(params)) != len(params):
            raise ModelError(f"action parameters must be distinct variables: {self.action}")
        split_condition(self.condition)
        if self.condition is not None:
            # canonical left-nested conjunction so equality is structural
            object.__setattr__(self, "condition", conjoin(conjuncts(self.condition)))
            unbound = variables(self.condition) - set(params)
            if unbound:
                raise ModelError(f"{self.action}: condition variables {sorted(unbound)} are not parameters")
        for a in self.add + self.delete:
            unbound = a.variables() - set(params)
            if unbound:
                raise ModelError(f"{self.action}: unbound effect variable(s) {sorted(unbound)} in {a}")

    @property
    def name(self) -> str:
        return self.action.predicate

    @property
    def params(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.action.args)

    def constants(self) -> set[Term]:
        out = {t for a in self.add + self.delete for t in a.args if not t.is_var}
        pos, neg, cmp = split_condition(self.condition)
        out |= {t for a in pos + neg for t in a.args if not t.is_var}
        out |= {t for c in cmp for t in (c.left, c.right) if not t.is_var}
        return out

    @classmethod
    def parse(
        cls, action: str, condition: str | None = None, add: Sequence[str] = (), delete: Sequence[str] = ()
    ) -> "ActionModel":
        return cls(
            _parse_template(action),
            parse_formula(condition) if condition else None,
            tuple(_parse_template(a) for a in add),
            tuple(_parse_template(a) for a in delete),
        )


@dataclass(frozen=True)
class GroundAction:
    name: Atom
    pre_pos: frozenset[Atom] = frozenset()
    pre_neg: frozenset[Atom] = frozenset()
    add: frozenset[Atom] = frozenset()
    delete: frozenset[Atom] = frozenset()
    cost: int = 1

    def applicable(self, state: frozenset[Atom] | set[Atom]) -> bool:
        return self.pre_pos <= state and not (self.pre_neg & state)

    def apply(self, state: frozenset[Atom]) -> frozenset[Atom]:
        return (state - self.delete) | self.add

    def __str__(self) -> str:
        return str(self.name)


def instantiate(model: ActionModel, subst: dict[str, Term]) -> GroundAction:
    pos, neg, _ = split_condition(model.condition)
    return GroundAction(
        model.action.substitute(subst),
        frozenset(a.substitute(subst) for a in pos),
        frozenset(a.substitute(subst) for a in neg),
        frozenset(a.substitute(subst) for a in model.add),
        frozenset(a.substitute(subst) for a in model.delete),
    )


@dataclass(frozen=True)
class Plan:
    goal: Atom
    body: tuple[Atom, ...] = ()
    source: Source = Source.USER

    def __len__(self) -> int:
        return len(self.body)

    def to_json(self) -> dict:
        return {"goal": str(self.goal), "source": self.source.value, "body": [str(a) for a in self.body]}


@dataclass(frozen=True)
class GoalCondition:
    """Maps goals matching ``pattern`` to the belief condition that achieves them."""

    pattern: Atom
    condition: Formula

    def __post_init__(self):
        unbound = variables(self.condition) - self.pattern.variables()
        if unbound:
            raise ModelError(f"goal condition for {self.pattern} has free variables {sorted(unbound)}")

    def bind(self, goal: Atom) -> Formula | None:
        subst = match(self.pattern, goal)
        return None if subst is None else substitute(self.condition, subst)

    @classmethod
    def parse(cls, pattern: str, condition: str) -> "GoalCondition":
        return cls(_parse_template(pattern), parse_formula(condition))


def goal_formula(goal: Atom, goal_conditions: Sequence[GoalCondition] = ()) -> Formula:
    """The condition for ``goal``: first matching mapping, else the goal atom itself."""
    for gc in goal_conditions:
        f = gc.bind(goal)
        if f is not None:
            return f
    return AtomNode(goal)


def literal_goal(f: Formula) -> tuple[frozenset[Atom], frozenset[Atom]] | None:
    """Positive/negative ground literal sets if ``f`` is a ground literal conjunction."""
    try:
        pos, neg, cmp = split_condition(f)
    except ModelError:
        return None
    if cmp or not all(a.is_ground for a in pos + neg):
        return None
    return frozenset(pos), frozenset(neg)


def project(state: BeliefBase | Iterable[Atom], plan: Plan, actions: Iterable[GroundAction]) -> frozenset[Atom]:
    """The state reached by applying ``plan`` (assumed valid) to ``state``."""
    by_name = {a.name: a for a in actions}
    current = frozenset(state.as_set() if isinstance(state, BeliefBase) else state)
    for step in plan.body:
        current = by_name[step].apply(current)
    return current


def effect_delta(action: GroundAction) -> tuple[frozenset[Atom], frozenset[Atom]]:
    return action.add, action.delete - action.add

