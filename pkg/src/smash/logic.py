"""Terms, atoms, belief bases and the condition language shared by every rule family.

Conditions are written in a small Prolog-flavoured syntax::

    callerType(C, work) & not onDuty(max)
    weight(S, W) & W > 40
    (deviceStatus(tv, playing) | deviceStatus(tv, mute)) & displaying(tv, C)

Identifiers starting with an uppercase letter are variables; everything else is a
constant. Constants and predicate names are case-folded, so ``deviceStatus`` and
``devicestatus`` denote the same relation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union


class LogicError(Exception):
    pass


class ParseError(LogicError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class RangeRestrictionError(LogicError):
    def __init__(self, variable: str, context: str):
        super().__init__(f"variable {variable} is not bound by a positive atom ({context})")
        self.variable = variable


class EvaluationError(LogicError):
    pass


_BAD_CHARS = re.compile(r"[^a-z0-9_]")
_NUMBER = re.compile(r"-?\d+(?:\.\d+)?")


def normalize_name(text: str) -> str:
    """Fold a symbol to the restricted ``[a-z0-9_]`` charset (``Canal+`` -> ``canalplus``)."""
    name = _BAD_CHARS.sub("_", str(text).strip().lower().replace("+", "plus"))
    if not name:
        raise LogicError(f"empty identifier from {text!r}")
    return name


@dataclass(frozen=True, order=True)
class Term:
    name: str
    is_var: bool = False
    value: float | None = field(default=None, compare=False)

    def __str__(self) -> str:
        return self.name


def Var(name: str) -> Term:
    if not name or not name[0].isupper():
        raise LogicError(f"variable names start with an uppercase letter: {name!r}")
    return Term(name, True)


def Const(name: str | int | float) -> Term:
    if isinstance(name, (int, float)) and not isinstance(name, bool):
        text = repr(name) if isinstance(name, float) else str(name)
        return Term(text, False, float(name))
    text = str(name).strip()
    if _NUMBER.fullmatch(text):
        return Term(text, False, float(text))
    return Term(normalize_name(text), False)


@dataclass(frozen=True, order=True)
class Atom:
    predicate: str
    args: tuple[Term, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def is_ground(self) -> bool:
        return not any(t.is_var for t in self.args)

    def variables(self) -> set[str]:
        return {t.name for t in self.args if t.is_var}

    def substitute(self, subst: Mapping[str, Term]) -> "Atom":
        if not subst:
            return self
        return Atom(self.predicate, tuple(subst.get(t.name, t) if t.is_var else t for t in self.args))

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(t.name for t in self.args)})"


def atom(predicate: str, *args: str | int | float | Term) -> Atom:
    """Build a ground-or-template atom from plain Python values."""
    terms = []
    for a in args:
        if isinstance(a, Term):
            terms.append(a)
        elif isinstance(a, str) and a[:1].isupper():
            terms.append(Var(a))
        else:
            terms.append(Const(a))
    return Atom(normalize_name(predicate), tuple(terms))


# -- formulas ---------------------------------------------------------------


@dataclass(frozen=True)
class AtomNode:
    atom: Atom


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


COMPARE_OPS = ("==", "!=", "<=", ">=", "<", ">")


@dataclass(frozen=True)
class Compare:
    op: str
    left: Term
    right: Term


Formula = Union[AtomNode, Not, And, Or, Compare]
Substitution = dict[str, Term]


def variables(f: Formula) -> set[str]:
    if isinstance(f, AtomNode):
        return f.atom.variables()
    if isinstance(f, Not):
        return variables(f.arg)
    if isinstance(f, (And, Or)):
        return variables(f.left) | variables(f.right)
    return {t.name for t in (f.left, f.right) if t.is_var}


def conjuncts(f: Formula) -> list[Formula]:
    """Flatten nested conjunctions into their operands, left to right."""
    if isinstance(f, And):
        return conjuncts(f.left) + conjuncts(f.right)
    return [f]


def conjoin(items: Iterable[Formula]) -> Formula | None:
    result = None
    for item in items:
        result = item if result is None else And(result, item)
    return result


def substitute(f: Formula, subst: Mapping[str, Term]) -> Formula:
    if not subst:
        return f
    if isinstance(f, AtomNode):
        return AtomNode(f.atom.substitute(subst))
    if isinstance(f, Not):
        return Not(substitute(f.arg, subst))
    if isinstance(f, And):
        return And(substitute(f.left, subst), substitute(f.right, subst))
    if isinstance(f, Or):
        return Or(substitute(f.left, subst), substitute(f.right, subst))
    return Compare(f.op, _resolve(f.left, subst), _resolve(f.right, subst))


def _binds(f: Formula) -> set[str]:
    if isinstance(f, AtomNode):
        return f.atom.variables()
    if isinstance(f, And):
        return _binds(f.left) | _binds(f.right)
    if isinstance(f, Or):
        return _binds(f.left) & _binds(f.right)
    return set()


def check_range_restriction(f: Formula, bound: frozenset[str] = frozenset()) -> None:
    """Raise RangeRestrictionError unless every variable is positively bound."""
    if isinstance(f, AtomNode):
        return
    if isinstance(f, (Not, Compare)):
        for name in sorted(variables(f) - bound):
            kind = "negation" if isinstance(f, Not) else "comparison"
            raise RangeRestrictionError(name, f"used in a {kind}")
        return
    if isinstance(f, And):
        items = conjuncts(f)
        inner = bound | frozenset().union(*(_binds(i) for i in items))
        for item in items:
            check_range_restriction(item, inner)
        return
    left, right = variables(f.left) - bound, variables(f.right) - bound
    for name in sorted(left ^ right):
        raise RangeRestrictionError(name, "missing from one branch of a disjunction")
    check_range_restriction(f.left, bound)
    check_range_restriction(f.right, bound)


# -- parsing ------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
   |(?P<num>-?\d+(?:\.\d+)?(?![A-Za-z_]))
   |(?P<var>[A-Z][A-Za-z0-9_]*)
   |(?P<ident>[a-z0-9][A-Za-z0-9_]*)
   |(?P<op>==|!=|<=|>=|<|>)
   |(?P<punct>[(),&|])
    """,
    re.VERBOSE,
)

# Ground mode accepts capitalised symbols and "+" as in ``deviceStatus(TV,Canal+)``.
_GROUND_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
   |(?P<num>-?\d+(?:\.\d+)?(?![A-Za-z_+]))
   |(?P<ident>[A-Za-z0-9_][A-Za-z0-9_+]*)
   |(?P<op>==|!=|<=|>=|<|>)
   |(?P<punct>[(),&|+-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str, ground: bool = False) -> list[Token]:
    regex = _GROUND_TOKEN_RE if ground else _TOKEN_RE
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = regex.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "ws":
            for i, ch in enumerate(m.group(), start=pos):
                if ch == "\n":
                    line, line_start = line + 1, i + 1
        else:
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class Parser:
    """Recursive-descent parser over the condition grammar.

    Exposed so that rule-body syntaxes built on top of atoms (goal-state
    templates, impact tuples) can reuse the term and atom productions.
    """

    def __init__(self, text: str, ground: bool = False):
        self.tokens = tokenize(text, ground)
        self.ground = ground
        self.i = 0

    @property
    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.peek
        found = tok.text or "end of input"
        return ParseError(f"{message}, found {found!r}", tok.line, tok.column)

    def expect(self, text: str) -> Token:
        if self.peek.text != text:
            raise self.error(f"expected {text!r}")
        return self.next()

    def accept(self, text: str) -> bool:
        if self.peek.text == text and self.peek.kind in ("punct", "op", "ident"):
            self.i += 1
            return True
        return False

    def end(self) -> None:
        if self.peek.kind != "eof":
            raise self.error("unexpected trailing input")

    def formula(self) -> Formula:
        left = self.conj()
        while self.accept("|"):
            left = Or(left, self.conj())
        return left

    def conj(self) -> Formula:
        left = self.unary()
        while self.accept("&"):
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        tok = self.peek
        if tok.kind == "ident" and tok.text == "not":
            self.next()
            return Not(self.unary())
        if tok.text == "(":
            self.next()
            f = self.formula()
            self.expect(")")
            return f
        if tok.kind == "ident" and self.tokens[self.i + 1].kind != "op":
            return AtomNode(self.atom())
        left = self.term()
        op = self.peek
        if op.kind != "op":
            raise self.error("expected a comparison operator")
        self.next()
        return Compare(op.text, left, self.term())

    def term(self) -> Term:
        tok = self.next()
        if tok.kind == "num":
            return Const(tok.text)
        if tok.kind == "var":
            return Var(tok.text)
        if tok.kind == "ident" and tok.text != "not":
            return Const(tok.text)
        raise self.error("expected a term", tok)

    def atom(self) -> Atom:
        tok = self.next()
        if tok.kind != "ident" or tok.text == "not":
            raise self.error("expected a predicate name", tok)
        args: list[Term] = []
        if self.accept("("):
            args.append(self.term())
            while self.accept(","):
                args.append(self.term())
            self.expect(")")
        return Atom(normalize_name(tok.text), tuple(args))


def parse_formula(text: str) -> Formula:
    parser = Parser(text)
    f = parser.formula()
    parser.end()
    check_range_restriction(f)
    return f


def parse_atom(text: str, ground: bool = False) -> Atom:
    """Parse a single atom.

    With ``ground=True`` every identifier is a constant, so
    capitalised symbols (``watch(TV,Canal+)``) are accepted and normalized.
    """
    parser = Parser(text, ground=ground)
    result = parser.atom()
    parser.end()
    return result


def parse_belief_event(text: str) -> tuple[bool, Atom]:
    """Parse ``+p(a)`` / ``-p(a)`` event notation; a bare atom means assert."""
    text = text.strip()
    positive = not text.startswith("-")
    if text[:1] in "+-":
        text = text[1:]
    return positive, parse_atom(text, ground=True)


_PREC = {Or: 1, And: 2}


def print_formula(f: Formula) -> str:
    """Render a formula so that ``parse_formula(print_formula(f)) == f``."""
    if isinstance(f, AtomNode):
        return str(f.atom)
    if isinstance(f, Compare):
        return f"{f.left.name} {f.op} {f.right.name}"
    if isinstance(f, Not):
        inner = print_formula(f.arg)
        return f"not ({inner})" if isinstance(f.arg, (And, Or)) else f"not {inner}"
    prec = _PREC[type(f)]
    sep = " | " if isinstance(f, Or) else " & "
    left = print_formula(f.left)
    if _PREC.get(type(f.left), 3) < prec:
        left = f"({left})"
    right = print_formula(f.right)
    if _PREC.get(type(f.right), 3) <= prec:
        right = f"({right})"
    return left + sep + right


# -- belief base --------------------------------------------------------------


class BeliefBase:
    """A set of ground atoms with a revision counter bumped on every change."""

    def __init__(self, atoms: Iterable[Atom] = (), revision: int = 0):
        self._atoms: set[Atom] = set()
        self._index: dict[tuple[str, int], set[Atom]] = {}
        for a in atoms:
            self._insert(a)
        self.revision = revision

    def _insert(self, a: Atom) -> bool:
        if not a.is_ground:
            raise LogicError(f"beliefs must be ground: {a}")
        if a in self._atoms:
            return False
        self._atoms.add(a)
        self._index.setdefault((a.predicate, a.arity), set()).add(a)
        return True

    def add(self, a: Atom) -> bool:
        changed = self._insert(a)
        if changed:
            self.revision += 1
        return changed

    def discard(self, a: Atom) -> bool:
        if not a.is_ground:
            raise LogicError(f"beliefs must be ground: {a}")
        if a not in self._atoms:
            return False
        self._atoms.remove(a)
        self._index[(a.predicate, a.arity)].discard(a)
        self.revision += 1
        return True

    def apply(self, asserted: Iterable[Atom] = (), retracted: Iterable[Atom] = ()) -> bool:
        changed = False
        for a in retracted:
            changed |= self.discard(a)
        for a in asserted:
            changed |= self.add(a)
        return changed

    def matching(self, predicate: str, arity: int) -> set[Atom]:
        return self._index.get((predicate, arity), set())

    def constants(self) -> set[Term]:
        return {t for a in self._atoms for t in a.args}

    def copy(self) -> "BeliefBase":
        clone = BeliefBase.__new__(BeliefBase)
        clone._atoms = set(self._atoms)
        clone._index = {k: set(v) for k, v in self._index.items()}
        clone.revision = self.revision
        return clone

    snapshot = copy

    def as_set(self) -> frozenset[Atom]:
        return frozenset(self._atoms)

    def __contains__(self, a: object) -> bool:
        return a in self._atoms

    def __len__(self) -> int:
        return len(self._atoms)

    def __iter__(self) -> Iterator[Atom]:
        return iter(sorted(self._atoms, key=str))

    def __eq__(self, other: object) -> bool:
        if isinstance(other, BeliefBase):
            return self._atoms == other._atoms
        return NotImplemented

    def __repr__(self) -> str:
        return f"BeliefBase({sorted(map(str, self._atoms))}, revision={self.revision})"


def assert_belief(b: BeliefBase, a: Atom) -> BeliefBase:
    b.add(a)
    return b


def retract_belief(b: BeliefBase, a: Atom) -> BeliefBase:
    b.discard(a)
    return b


# -- evaluation ---------------------------------------------------------------


def match(template: Atom, fact: Atom, subst: Mapping[str, Term] | None = None) -> Substitution | None:
    """Extend ``subst`` so that ``template`` instantiates to ``fact``; None if impossible."""
    if template.predicate != fact.predicate or template.arity != fact.arity:
        return None
    result = dict(subst or {})
    for t, g in zip(template.args, fact.args):
        if t.is_var:
            bound = result.get(t.name)
            if bound is None:
                result[t.name] = g
            elif bound != g:
                return None
        elif t != g:
            return None
    return result


def _resolve(t: Term, subst: Mapping[str, Term]) -> Term:
    return subst.get(t.name, t) if t.is_var else t


def compare_terms(op: str, left: Term, right: Term) -> bool:
    if left.is_var or right.is_var:
        raise EvaluationError(f"comparison on unbound variable: {left} {op} {right}")
    if left.value is not None and right.value is not None:
        a, b = left.value, right.value
    elif op in ("==", "!="):
        a, b = left.name, right.name
    else:
        raise EvaluationError(f"ordering comparison needs numbers: {left} {op} {right}")
    return {
        "==": a == b,
        "!=": a != b,
        "<": a < b,
        "<=": a <= b,
        ">": a > b,
        ">=": a >= b,
    }[op]


def _ready(f: Formula, bound: set[str]) -> int | None:
    """Scheduling rank of a conjunct given the bound variables (lower runs first)."""
    if isinstance(f, (Not, Compare)):
        return 0 if variables(f) <= bound else None
    if isinstance(f, AtomNode):
        return 1
    return 2 if variables(f) - _binds(f) <= bound else None


def _solve(f: Formula, b: BeliefBase, subst: Substitution) -> Iterator[Substitution]:
    if isinstance(f, AtomNode):
        pattern = f.atom.substitute(subst)
        if pattern.is_ground:
            if pattern in b:
                yield subst
            return
        for fact in b.matching(pattern.predicate, pattern.arity):
            extended = match(pattern, fact, subst)
            if extended is not None:
                yield extended
    elif isinstance(f, And):
        yield from _solve_conj(conjuncts(f), b, subst)
    elif isinstance(f, Or):
        yield from _solve(f.left, b, subst)
        yield from _solve(f.right, b, subst)
    elif isinstance(f, Not):
        for _ in _solve(f.arg, b, subst):
            return
        yield subst
    else:
        if compare_terms(f.op, _resolve(f.left, subst), _resolve(f.right, subst)):
            yield subst


def _solve_conj(items: list[Formula], b: BeliefBase, subst: Substitution) -> Iterator[Substitution]:
    if not items:
        yield subst
        return
    bound = set(subst)
    ranked = [(r, i) for i, item in enumerate(items) if (r := _ready(item, bound)) is not None]
    pick = min(ranked)[1] if ranked else 0
    rest = items[:pick] + items[pick + 1 :]
    for extended in _solve(items[pick], b, subst):
        yield from _solve_conj(rest, b, extended)


def evaluate(f: Formula, b: BeliefBase, subst: Mapping[str, Term] | None = None) -> list[Substitution]:
    """All substitutions under which ``f`` holds in ``b``, sorted by bound constants.

    Negation is negation-as-failure on the grounded sub-formula.
    """
    seen: dict[tuple, Substitution] = {}
    names = sorted(variables(f) | set(subst or {}))
    for s in _solve(f, b, dict(subst or {})):
        key = tuple(s[n].name if n in s else "" for n in names)
        seen.setdefault(key, s)
    return [seen[k] for k in sorted(seen)]


def holds(f: Formula | None, b: BeliefBase, subst: Mapping[str, Term] | None = None) -> bool:
    if f is None:
        return True
    for _ in _solve(f, b, dict(subst or {})):
        return True
    return False
