"""Grounding of action models and value-based admissibility of ground actions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from ..logic import Atom, AtomNode, BeliefBase, EvaluationError, Term, compare_terms, conjoin, evaluate
from ..values import ImpactRule, ImportanceOrder, violates
from .model import ActionModel, GroundAction, instantiate, split_condition


@dataclass
class ActionFilter:
    """Admissibility of ground actions under the action-impact rules.

    A ground action is inadmissible when some rule fires on it with a negative
    impact on a value present in the importance order.
    """

    models: Sequence[ActionModel]
    rules: Sequence[ImpactRule]
    iv: ImportanceOrder
    view: BeliefBase
    _cache: dict[Atom, bool] = field(default_factory=dict, repr=False)

    def admits(self, name: Atom) -> bool:
        if name not in self._cache:
            self._cache[name] = not violates(self.rules, self.view, name, self.iv)
        return self._cache[name]

    __call__ = admits

    def blocked(self, actions: Iterable[GroundAction]) -> list[Atom]:
        return [a.name for a in actions if not self.admits(a.name)]


def filter_actions(
    kw: Sequence[ActionModel], ai: Sequence[ImpactRule], iv: ImportanceOrder, b: BeliefBase
) -> ActionFilter:
    return ActionFilter(kw, ai, iv, b)


def universe(kw: Sequence[ActionModel], b: BeliefBase | Iterable[Atom], constants: Iterable[Term] = ()) -> list[Term]:
    atoms = b.as_set() if isinstance(b, BeliefBase) else b
    found = {t for a in atoms for t in a.args}
    found.update(constants)
    for m in kw:
        found |= m.constants()
    return sorted(t for t in found if not t.is_var)


def _bindings(model: ActionModel, reach: BeliefBase | None, consts: list[Term]):
    pos, _, cmps = split_condition(model.condition)
    if reach is not None and pos:
        partial = evaluate(conjoin(AtomNode(a) for a in pos), reach)
    else:
        partial = [{}]
    for subst in partial:
        free = [p for p in model.params if p not in subst]
        for combo in itertools.product(consts, repeat=len(free)):
            full = dict(subst)
            full.update(zip(free, combo))
            if _compares_hold(cmps, full):
                yield full


def _compares_hold(cmps, subst) -> bool:
    try:
        return all(
            compare_terms(c.op, subst.get(c.left.name, c.left), subst.get(c.right.name, c.right)) for c in cmps
        )
    except EvaluationError:
        return False


def ground(
    kw: Sequence[ActionModel],
    b: BeliefBase | Iterable[Atom],
    constants: Iterable[Term] = (),
    admissible: Callable[[Atom], bool] | None = None,
    reachable_only: bool = True,
) -> list[GroundAction]:
    """Ground every action model over the constant universe.

    With ``reachable_only`` (the default) a grounding is kept only if its
    positive preconditions are reachable from ``b`` when delete effects and
    negative preconditions are ignored. Output is sorted by action name.
    """
    base = b.copy() if isinstance(b, BeliefBase) else BeliefBase(b)
    consts = universe(kw, base, constants)
    found: dict[Atom, GroundAction] = {}
    reach = base if reachable_only else None
    changed = True
    while changed:
        changed = False
        for model in kw:
            for subst in _bindings(model, reach, consts):
                g = instantiate(model, subst)
                if g.name in found or (admissible is not None and not admissible(g.name)):
                    continue
                found[g.name] = g
                if reach is not None:
                    for a in g.add:
                        changed |= reach.add(a)
    return sorted(found.values(), key=lambda g: str(g.name))
