"""Triple view of the belief base: ``p(a)`` is ``(a, type, p)`` and ``p(a, b)`` is ``(a, p, b)``."""

from __future__ import annotations

from typing import Iterable

from ..logic import Atom, BeliefBase, Term

TYPE = "type"

Triple = tuple[str, str, str]


def to_triple(a: Atom) -> Triple | None:
    """The triple for a unary or binary atom; None for other arities."""
    if a.arity == 1:
        return (a.args[0].name, TYPE, a.predicate)
    if a.arity == 2:
        return (a.args[0].name, a.predicate, a.args[1].name)
    return None


def from_triple(t: Triple) -> Atom:
    s, p, o = t
    if p == TYPE:
        return Atom(o, (Term(s),))
    return Atom(p, (Term(s), Term(o)))


class ContextStore:
    def __init__(self, atoms: Iterable[Atom] = ()):
        self._triples: set[Triple] = set()
        # numeric payloads do not survive the string triple, so keep the atom
        self._atoms: dict[Triple, Atom] = {}
        self.apply(atoms)

    def apply(self, asserted: Iterable[Atom] = (), retracted: Iterable[Atom] = ()) -> None:
        for a in retracted:
            t = to_triple(a)
            if t is not None and self._atoms.get(t) == a:
                self._triples.discard(t)
                del self._atoms[t]
        for a in asserted:
            t = to_triple(a)
            if t is not None:
                self._triples.add(t)
                self._atoms[t] = a

    def query(self, s: str | None = None, p: str | None = None, o: str | None = None) -> list[Triple]:
        """Triples matching the pattern; ``None`` is a wildcard. Sorted."""
        return sorted(
            t for t in self._triples if (s is None or t[0] == s) and (p is None or t[1] == p) and (o is None or t[2] == o)
        )

    def atoms(self) -> frozenset[Atom]:
        return frozenset(self._atoms.values())

    def agrees_with(self, b: BeliefBase) -> bool:
        """Whether the store is exactly the triple image of ``b``."""
        return self.atoms() == frozenset(a for a in b.as_set() if a.arity in (1, 2))

    def __len__(self) -> int:
        return len(self._triples)
