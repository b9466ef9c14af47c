"""Human values, importance orders and the value-ordering rule pass.

An importance order is a list of buckets, most important first. Values in the
same bucket are tied. The order may be sparse: a user can leave values out.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from .logic import (
    Atom,
    BeliefBase,
    Formula,
    LogicError,
    Parser,
    Term,
    evaluate,
    match,
    normalize_name,
    parse_formula,
)


class Value(str, enum.Enum):
    SELF_DIRECTION_THOUGHT = "self_direction_thought"
    SELF_DIRECTION_ACTION = "self_direction_action"
    STIMULATION = "stimulation"
    HEDONISM = "hedonism"
    ACHIEVEMENT = "achievement"
    POWER_DOMINANCE = "power_dominance"
    POWER_RESOURCES = "power_resources"
    FACE = "face"
    SECURITY_PERSONAL = "security_personal"
    SECURITY_SOCIETAL = "security_societal"
    TRADITION = "tradition"
    CONFORMITY_RULES = "conformity_rules"
    CONFORMITY_INTERPERSONAL = "conformity_interpersonal"
    HUMILITY = "humility"
    BENEVOLENCE_CARING = "benevolence_caring"
    BENEVOLENCE_DEPENDABILITY = "benevolence_dependability"
    UNIVERSALISM_CONCERN = "universalism_concern"
    UNIVERSALISM_NATURE = "universalism_nature"
    UNIVERSALISM_TOLERANCE = "universalism_tolerance"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "Value":
        try:
            return cls(normalize_name(text).replace("-", "_"))
        except ValueError:
            raise LogicError(f"unknown value {text!r}") from None


@dataclass(frozen=True)
class ImportanceOrder:
    buckets: tuple[frozenset[Value], ...] = ()

    def __post_init__(self):
        seen: set[Value] = set()
        for bucket in self.buckets:
            if not bucket:
                raise ValueError("importance order buckets must be non-empty")
            if seen & bucket:
                raise ValueError(f"value listed twice: {sorted(seen & bucket)}")
            seen |= bucket

    @classmethod
    def of(cls, buckets: Iterable[Iterable[Value | str]]) -> "ImportanceOrder":
        """Build from nested lists; a bare value is a singleton bucket."""
        out = []
        for bucket in buckets:
            if isinstance(bucket, (str, Value)):
                bucket = [bucket]
            out.append(frozenset(v if isinstance(v, Value) else Value.parse(v) for v in bucket))
        return cls(tuple(out))

    def rank(self, v: Value) -> int | None:
        for i, bucket in enumerate(self.buckets):
            if v in bucket:
                return i
        return None

    def __contains__(self, v: object) -> bool:
        return any(v in bucket for bucket in self.buckets)

    def values(self) -> set[Value]:
        return set().union(*self.buckets)

    def to_lists(self) -> list[list[str]]:
        return [sorted(v.value for v in bucket) for bucket in self.buckets]

    def __str__(self) -> str:
        return " > ".join("~".join(b) for b in self.to_lists())


OPERATORS = {
    "make_most": 1,
    "make_least": 1,
    "above": 2,
    "below": 2,
    "same": 2,
    "remove": 1,
}


@dataclass(frozen=True)
class OrderOp:
    op: str
    args: tuple[Term, ...]

    def __post_init__(self):
        if OPERATORS.get(self.op) != len(self.args):
            raise LogicError(f"bad order operator {self.op}/{len(self.args)}")
        for t in self.args:
            if not t.is_var:
                Value.parse(t.name)

    def __str__(self) -> str:
        return f"{self.op}({', '.join(t.name for t in self.args)})"


def parse_order_op(text: str) -> OrderOp:
    parsed = Parser(text).atom()
    return OrderOp(parsed.predicate, parsed.args)


@dataclass(frozen=True)
class ValueOrderingRule:
    condition: Formula
    body: tuple[OrderOp, ...]

    @classmethod
    def parse(cls, condition: str, body: Sequence[str]) -> "ValueOrderingRule":
        return cls(parse_formula(condition), tuple(parse_order_op(b) for b in body))


def _without(buckets: list[frozenset[Value]], v: Value) -> list[frozenset[Value]]:
    return [rest for bucket in buckets if (rest := bucket - {v})]


def _index_of(buckets: list[frozenset[Value]], v: Value) -> int | None:
    for i, bucket in enumerate(buckets):
        if v in bucket:
            return i
    return None


def apply_order_op(
    iv: ImportanceOrder, op: str, args: Sequence[Value], trace: list[str] | None = None
) -> ImportanceOrder:
    """Apply one ordering operator to ground values; returns a new order.

    ``above``/``below``/``same`` whose reference value is missing from the order
    are skipped and noted in ``trace``.
    """
    buckets = list(iv.buckets)
    if op == "make_most":
        (v,) = args
        return ImportanceOrder(tuple([frozenset({v})] + _without(buckets, v)))
    if op == "make_least":
        (v,) = args
        return ImportanceOrder(tuple(_without(buckets, v) + [frozenset({v})]))
    if op == "remove":
        (v,) = args
        return ImportanceOrder(tuple(_without(buckets, v)))

    v1, v2 = args
    if v1 == v2 or v2 not in iv:
        if trace is not None:
            reason = "same value twice" if v1 == v2 else f"{v2} is not in the order"
            trace.append(f"skipped {op}({v1}, {v2}): {reason}")
        return iv
    buckets = _without(buckets, v1)
    ref = _index_of(buckets, v2)
    if op == "same":
        buckets[ref] = buckets[ref] | {v1}
    elif op == "above":
        buckets.insert(ref, frozenset({v1}))
    elif op == "below":
        buckets.insert(ref + 1, frozenset({v1}))
    else:
        raise LogicError(f"unknown order operator {op!r}")
    return ImportanceOrder(tuple(buckets))


def value_reasoning(
    b: BeliefBase,
    iv_d: ImportanceOrder,
    vo: Sequence[ValueOrderingRule],
    trace: list[str] | None = None,
) -> ImportanceOrder:
    """Reorder the default importance order with every rule that holds in ``b``.

    Rules fire in declaration order, once per satisfying substitution. A value
    removed earlier in the same pass cannot be referenced again.
    """
    iv = iv_d
    removed: set[Value] = set()
    for rule in vo:
        for subst in evaluate(rule.condition, b):
            for op in rule.body:
                names = [subst.get(t.name, t).name if t.is_var else t.name for t in op.args]
                try:
                    values = [Value.parse(n) for n in names]
                except LogicError as exc:
                    if trace is not None:
                        trace.append(f"skipped {op}: {exc}")
                    continue
                if removed.intersection(values):
                    if trace is not None:
                        trace.append(f"skipped {op}: value removed earlier in this pass")
                    continue
                iv = apply_order_op(iv, op.op, values, trace)
                if op.op == "remove":
                    removed.add(values[0])
    return iv


# -- impact rules -------------------------------------------------------------

IMPACT_LEVELS = (-1, 0, 1)


@dataclass(frozen=True)
class ImpactRule:
    """``condition -> (target, impact, value)``.

    Shared by the goal-, action- and command-impact rule families; only the kind
    of target atom differs.
    """

    condition: Formula
    target: Atom
    impact: int
    value: Value

    def __post_init__(self):
        if self.impact not in IMPACT_LEVELS:
            raise LogicError(f"impact must be one of -1, 0, 1, not {self.impact!r}")

    @classmethod
    def parse(cls, condition: str, target: str, impact: int, value: str) -> "ImpactRule":
        parser = Parser(target)
        target_atom = parser.atom()
        parser.end()
        return cls(parse_formula(condition), target_atom, int(impact), Value.parse(value))


GoalImpactRule = ActionImpactRule = CommandImpactRule = ImpactRule


def fired_impacts(rules: Sequence[ImpactRule], view: BeliefBase, target: Atom) -> list[tuple[int, int, Value]]:
    """``(rule index, impact, value)`` for every rule that fires on ``target``.

    A rule counts once per target even if its condition has several satisfying
    substitutions.
    """
    out = []
    for i, rule in enumerate(rules):
        if match(rule.target, target) is None:
            continue
        for subst in evaluate(rule.condition, view):
            if match(rule.target.substitute(subst), target) is not None:
                out.append((i, rule.impact, rule.value))
                break
    return out


def violates(rules: Sequence[ImpactRule], view: BeliefBase, target: Atom, iv: ImportanceOrder) -> list[Value]:
    """Values present in ``iv`` that ``target`` impacts negatively under ``view``."""
    return [v for _, impact, v in fired_impacts(rules, view, target) if impact < 0 and v in iv]


def value_atoms(iv: ImportanceOrder) -> list[Atom]:
    """``moreImportant(v1, v2)`` for every strictly ordered pair of ``iv``."""
    out = []
    for i, upper in enumerate(iv.buckets):
        for lower in iv.buckets[i + 1 :]:
            for a in sorted(upper):
                for c in sorted(lower):
                    out.append(Atom("moreimportant", (Term(a.value), Term(c.value))))
    return out
