"""Emission and parsing of the STRIPS subset of PDDL.

Per-grounding admissibility is encoded by a ``blocked-<action>`` predicate: each
inadmissible ground action gets a static fact in ``:init`` and its schema a
negative precondition on that fact, so an external planner sees exactly the
admissible actions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..logic import (
    Atom,
    AtomNode,
    BeliefBase,
    Compare,
    Formula,
    Not,
    ParseError,
    Term,
    conjoin,
    conjuncts,
    variables,
)
from .model import ActionModel, GoalCondition, ModelError, split_condition


class PDDLError(ParseError):
    pass


class EmissionError(ModelError):
    pass


BLOCKED_PREFIX = "blocked-"


def _term(t: Term) -> str:
    return f"?{t.name}" if t.is_var else t.name


def _atom(a: Atom) -> str:
    return "(" + " ".join([a.predicate] + [_term(t) for t in a.args]) + ")"


def _literals(f: Formula | None, what: str) -> tuple[list[Atom], list[Atom]]:
    if f is None:
        return [], []
    for item in conjuncts(f):
        if isinstance(item, Compare):
            raise EmissionError(f"{what}: comparisons cannot be emitted as STRIPS ({item.left} {item.op} {item.right})")
        if not (isinstance(item, AtomNode) or (isinstance(item, Not) and isinstance(item.arg, AtomNode))):
            raise EmissionError(f"{what}: only conjunctions of literals can be emitted as STRIPS")
    pos, neg, _ = split_condition(f)
    return pos, neg


def _conjunction(pos: Iterable[Atom], neg: Iterable[Atom] = ()) -> str:
    parts = [_atom(a) for a in pos] + [f"(not {_atom(a)})" for a in neg]
    return "(and " + " ".join(parts) + ")" if parts else "(and)"


def safe_name(text: str) -> str:
    return re.sub(r"[^a-z0-9_-]+", "_", str(text).lower()).strip("_") or "goal"


def emit_pddl(
    domain_name: str,
    actions: Sequence[ActionModel],
    init: BeliefBase | Iterable[Atom],
    goal: GoalCondition | Formula,
    problem_name: str | None = None,
    blocked: Iterable[Atom] = (),
) -> tuple[str, str]:
    """Render a domain and a problem file. Identical inputs give identical text."""
    if isinstance(goal, GoalCondition):
        problem_name = problem_name or safe_name(goal.pattern)
        condition = goal.condition
    else:
        condition = goal
    problem_name = problem_name or "problem"
    if variables(condition):
        raise EmissionError(f"goal condition is not ground: {sorted(variables(condition))}")
    goal_pos, goal_neg = _literals(condition, "goal")
    init_atoms = sorted(init.as_set() if isinstance(init, BeliefBase) else set(init), key=str)

    blocked_by: dict[str, list[Atom]] = {}
    for name in sorted(set(blocked), key=str):
        blocked_by.setdefault(name.predicate, []).append(name)
    blocked_facts = [Atom(BLOCKED_PREFIX + n.predicate, n.args) for names in blocked_by.values() for n in names]

    schemas = []
    predicates: dict[str, int] = {}
    domain_consts: set[Term] = set()
    negative = bool(goal_neg)
    for model in actions:
        pos, neg = _literals(model.condition, f"action {model.name}")
        if model.name in blocked_by:
            neg = neg + [Atom(BLOCKED_PREFIX + model.name, model.action.args)]
        negative |= bool(neg)
        for a in pos + neg + list(model.add) + list(model.delete):
            predicates[a.predicate] = a.arity
        domain_consts |= model.constants()
        params = " ".join(_term(t) for t in model.action.args)
        schemas.append(
            f"  (:action {model.name}\n"
            f"    :parameters ({params})\n"
            f"    :precondition {_conjunction(pos, neg)}\n"
            f"    :effect {_conjunction(model.add, model.delete)})\n"
        )
    for a in init_atoms + goal_pos + goal_neg + blocked_facts:
        predicates.setdefault(a.predicate, a.arity)

    requirements = ":strips :negative-preconditions" if negative else ":strips"
    lines = [f"(define (domain {domain_name})\n", f"  (:requirements {requirements})\n"]
    if domain_consts:
        lines.append(f"  (:constants {' '.join(sorted(t.name for t in domain_consts))})\n")
    decls = [f"({p}{''.join(f' ?x{i}' for i in range(n))})" for p, n in sorted(predicates.items())]
    lines.append("  (:predicates" + "".join(f"\n    {d}" for d in decls) + ")\n")
    lines.extend(schemas)
    lines.append(")\n")
    domain_text = "".join(lines)

    objects = {t for a in init_atoms + goal_pos + goal_neg + blocked_facts for t in a.args} - domain_consts
    facts = init_atoms + blocked_facts
    problem_text = (
        f"(define (problem {problem_name})\n"
        f"  (:domain {domain_name})\n"
        f"  (:objects {' '.join(sorted(t.name for t in objects))})\n"
        "  (:init" + "".join(f"\n    {_atom(a)}" for a in facts) + ")\n"
        f"  (:goal {_conjunction(goal_pos, goal_neg)})\n"
        ")\n"
    )
    return domain_text, problem_text


# -- parsing ------------------------------------------------------------------


@dataclass(frozen=True)
class _Tok:
    text: str
    line: int
    column: int


class _List(list):
    line = 0
    column = 0


_LEX = re.compile(r"\s+|;[^\n]*|[()]|[^\s();]+")


def _read(text: str) -> _List:
    root = _List()
    stack = [root]
    line, line_start = 1, 0
    for m in _LEX.finditer(text):
        chunk = m.group()
        col = m.start() - line_start + 1
        if chunk[0].isspace() or chunk[0] == ";":
            for i, ch in enumerate(chunk, start=m.start()):
                if ch == "\n":
                    line, line_start = line + 1, i + 1
            continue
        if chunk == "(":
            node = _List()
            node.line, node.column = line, col
            stack[-1].append(node)
            stack.append(node)
        elif chunk == ")":
            if len(stack) == 1:
                raise PDDLError("unbalanced ')'", line, col)
            stack.pop()
        else:
            stack[-1].append(_Tok(chunk.lower(), line, col))
    if len(stack) > 1:
        open_ = stack[-1]
        raise PDDLError("unclosed '('", open_.line, open_.column)
    if len(root) != 1 or not isinstance(root[0], _List):
        raise PDDLError("expected a single (define ...) form", 1, 1)
    return root[0]


def _where(node) -> tuple[int, int]:
    return node.line, node.column


def _text(node, what: str) -> str:
    if not isinstance(node, _Tok):
        raise PDDLError(f"expected {what}", *_where(node))
    return node.text


def _pterm(tok) -> Term:
    name = _text(tok, "a term")
    if name.startswith("?"):
        var = name[1:]
        if not var:
            raise PDDLError("empty variable name", *_where(tok))
        return Term(var[0].upper() + var[1:], True)
    if re.fullmatch(r"-?\d+(?:\.\d+)?", name):
        return Term(name, False, float(name))
    return Term(name)


def _patom(node) -> Atom:
    if not isinstance(node, _List) or not node:
        raise PDDLError("expected an atom", *_where(node))
    head = _text(node[0], "a predicate name")
    return Atom(head, tuple(_pterm(t) for t in node[1:]))


def _pliterals(node) -> tuple[list[Atom], list[Atom]]:
    if not isinstance(node, _List):
        raise PDDLError("expected a formula", *_where(node))
    items = node[1:] if node and isinstance(node[0], _Tok) and node[0].text == "and" else [node]
    if not node:
        items = []
    pos, neg = [], []
    for item in items:
        if isinstance(item, _List) and item and isinstance(item[0], _Tok) and item[0].text == "not":
            if len(item) != 2:
                raise PDDLError("'not' takes one atom", *_where(item))
            neg.append(_patom(item[1]))
        elif isinstance(item, _List) and item and isinstance(item[0], _Tok) and item[0].text in ("or", "imply", "forall", "exists", "when"):
            raise PDDLError(f"'{item[0].text}' is outside the STRIPS subset", *_where(item))
        else:
            pos.append(_patom(item))
    return pos, neg


def _formula(pos: list[Atom], neg: list[Atom]) -> Formula | None:
    return conjoin([AtomNode(a) for a in pos] + [Not(AtomNode(a)) for a in neg])


def _sections(form: _List, kind: str) -> tuple[str, list]:
    if not form or _text(form[0], "'define'") != "define":
        raise PDDLError("expected (define ...)", *_where(form))
    if len(form) < 2 or not isinstance(form[1], _List) or len(form[1]) != 2:
        raise PDDLError(f"expected ({kind} <name>)", *_where(form))
    if _text(form[1][0], kind) != kind:
        raise PDDLError(f"expected ({kind} <name>)", *_where(form[1]))
    return _text(form[1][1], "a name"), form[2:]


def _parse_action(node: _List) -> ActionModel:
    name = _text(node[1], "an action name") if len(node) > 1 else None
    if name is None:
        raise PDDLError("action without a name", *_where(node))
    fields = {}
    rest = node[2:]
    if len(rest) % 2:
        raise PDDLError(f"action {name}: keyword without a value", *_where(node))
    for key, value in zip(rest[::2], rest[1::2]):
        fields[_text(key, "a keyword")] = value
    params = fields.get(":parameters", _List())
    args = []
    for tok in params:
        t = _pterm(tok)
        if not t.is_var:
            raise PDDLError(f"action {name}: typed or constant parameters are not supported", *_where(tok))
        args.append(t)
    cond = None
    if ":precondition" in fields:
        cond = _formula(*_pliterals(fields[":precondition"]))
    add, delete = _pliterals(fields[":effect"]) if ":effect" in fields else ([], [])
    try:
        return ActionModel(Atom(name, tuple(args)), cond, tuple(add), tuple(delete))
    except ModelError as exc:
        raise PDDLError(f"action {name}: {exc}", *_where(node)) from None


def parse_domain(text: str) -> tuple[str, list[ActionModel]]:
    name, sections = _sections(_read(text), "domain")
    actions = []
    for sec in sections:
        if not isinstance(sec, _List) or not sec:
            raise PDDLError("expected a section", *_where(sec))
        key = _text(sec[0], "a section keyword")
        if key == ":action":
            actions.append(_parse_action(sec))
        elif key == ":types":
            raise PDDLError("typed domains are not supported", *_where(sec))
        elif key not in (":requirements", ":constants", ":predicates"):
            raise PDDLError(f"unsupported section {key}", *_where(sec))
    return name, actions


def parse_problem(text: str) -> tuple[str, BeliefBase, Formula | None]:
    name, sections = _sections(_read(text), "problem")
    init = BeliefBase()
    goal = None
    for sec in sections:
        if not isinstance(sec, _List) or not sec:
            raise PDDLError("expected a section", *_where(sec))
        key = _text(sec[0], "a section keyword")
        if key == ":init":
            for node in sec[1:]:
                a = _patom(node)
                if not a.is_ground:
                    raise PDDLError("initial facts must be ground", *_where(node))
                init.add(a)
        elif key == ":goal":
            if len(sec) != 2:
                raise PDDLError(":goal takes one formula", *_where(sec))
            goal = _formula(*_pliterals(sec[1]))
        elif key not in (":domain", ":objects"):
            raise PDDLError(f"unsupported section {key}", *_where(sec))
    return name, init, goal


def parse_pddl(domain_text: str, problem_text: str) -> tuple[list[ActionModel], BeliefBase, GoalCondition]:
    _, actions = parse_domain(domain_text)
    problem, init, goal = parse_problem(problem_text)
    if goal is None:
        raise PDDLError("problem has no :goal", 1, 1)
    return actions, init, GoalCondition(Atom(problem), goal)
