"""The acting layer: refine plan actions into device commands and execute them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .goals import GoalState, Source, Status
from .logic import Atom, BeliefBase, Formula, LogicError, Parser, evaluate, holds, match, parse_formula, variables
from .planning.model import ActionModel, GoalCondition, goal_formula, instantiate
from .values import ImpactRule, ImportanceOrder, violates


class RefinementError(LogicError):
    def __init__(self, message: str, reason: str):
        super().__init__(message)
        self.reason = reason


@dataclass(frozen=True)
class BodyItem:
    kind: str  # "command" or "action"
    atom: Atom

    def __post_init__(self):
        if self.kind not in ("command", "action"):
            raise LogicError(f"body item kind must be command or action, not {self.kind!r}")


def _template(text: str) -> Atom:
    p = Parser(text)
    a = p.atom()
    p.end()
    return a


@dataclass(frozen=True)
class Refinement:
    """A know-how entry ``(action, condition, body)``."""

    action: Atom
    condition: Formula | None
    body: tuple[BodyItem, ...]

    def __post_init__(self):
        bound = self.action.variables() | (variables(self.condition) if self.condition else set())
        for item in self.body:
            missing = item.atom.variables() - bound
            if missing:
                raise LogicError(f"refinement of {self.action}: unbound variables {sorted(missing)} in {item.atom}")

    @property
    def name(self) -> str:
        return self.action.predicate

    @classmethod
    def parse(cls, action: str, condition: str | None, body: Sequence[str | Mapping[str, str]]) -> "Refinement":
        items = []
        for entry in body:
            if isinstance(entry, str):
                items.append(BodyItem("command", _template(entry)))
            else:
                ((kind, text),) = entry.items()
                items.append(BodyItem(kind, _template(text)))
        return cls(_template(action), parse_formula(condition) if condition else None, tuple(items))


def refine(
    action: Atom,
    view: BeliefBase,
    kh: Sequence[Refinement],
    ci: Sequence[ImpactRule] = (),
    iv: ImportanceOrder | None = None,
    depth_budget: int = 32,
    _stack: tuple[Atom, ...] = (),
) -> list[Atom]:
    """Expand ``action`` into ground commands.

    The first entry (declaration order) whose action matches and whose condition
    holds is used. A command with a negative command-impact on a value in ``iv``
    aborts the whole refinement.
    """
    if depth_budget <= 0:
        raise RefinementError(f"depth budget exhausted refining {action}", "depth_exhausted")
    if action in _stack:
        raise RefinementError(f"refinement cycle through {action}", "cycle")
    for entry in kh:
        subst = match(entry.action, action)
        if subst is None:
            continue
        if entry.condition is not None:
            found = evaluate(entry.condition, view, subst)
            if not found:
                continue
            subst = found[0]
        out: list[Atom] = []
        for item in entry.body:
            ground = item.atom.substitute(subst)
            if item.kind == "action":
                out.extend(refine(ground, view, kh, ci, iv, depth_budget - 1, _stack + (action,)))
                continue
            if iv is not None:
                hurt = violates(ci, view, ground, iv)
                if hurt:
                    names = ", ".join(sorted(map(str, hurt)))
                    raise RefinementError(f"{ground} has a negative impact on {names}", "value_gate")
            out.append(ground)
        return out
    raise RefinementError(f"no applicable refinement for {action}", "no_refinement")


@dataclass(frozen=True)
class Signal:
    ok: bool
    err: str = ""

    def __bool__(self) -> bool:
        return self.ok


@dataclass
class CommandRecord:
    command: Atom
    goal: Atom
    action: Atom
    ok: bool
    err: str = ""
    # beliefs the command-impact gate was checked against
    view: frozenset[Atom] = frozenset()

    def to_json(self) -> dict:
        out = {"command": str(self.command), "goal": str(self.goal), "action": str(self.action), "ok": self.ok}
        if self.err:
            out["err"] = self.err
        return out


@dataclass
class Outcome:
    goal: GoalState
    status: Status
    reason: str = ""


@dataclass
class ActingResult:
    batch: list[CommandRecord] = field(default_factory=list)
    outcomes: list[Outcome] = field(default_factory=list)


def _observed_delta(before: frozenset[Atom], after: frozenset[Atom]) -> tuple[frozenset[Atom], frozenset[Atom]]:
    return after - before, before - after


def acting(
    b: BeliefBase,
    iv: ImportanceOrder,
    plans: Sequence,
    kh: Sequence[Refinement],
    ci: Sequence[ImpactRule],
    execute: Callable[[Atom], Signal],
    view: Callable[[], BeliefBase] | None = None,
    kw: Sequence[ActionModel] = (),
    goal_conditions: Sequence[GoalCondition] = (),
    depth_budget: int = 32,
    notes: list[str] | None = None,
) -> ActingResult:
    """Execute ``plans`` in order against the live belief base ``b``.

    ``execute`` performs one command and updates ``b`` with what the devices
    report. ``view`` builds the belief view rule conditions are evaluated on
    (``b`` itself by default); it is rebuilt before every action and command
    so that gates see the state at execution time.
    """
    view = view or (lambda: b)
    result = ActingResult()
    models = {m.name: m for m in kw}
    for plan in plans:
        state = GoalState(plan.goal, Status.ACTIVE, getattr(plan, "source", Source.USER))
        failure = ""
        for action in plan.body:
            before = b.as_set()
            try:
                commands = refine(action, view(), kh, ci, iv, depth_budget)
            except RefinementError as exc:
                failure = exc.reason
                if notes is not None:
                    notes.append(f"refining {action}: {exc}")
                break
            for cmd in commands:
                current = view()
                hurt = violates(ci, current, cmd, iv) if iv is not None else []
                if hurt:
                    failure = "value_gate"
                    if notes is not None:
                        notes.append(f"{cmd} withheld at execution: negative impact on {', '.join(map(str, hurt))}")
                    break
                signal = execute(cmd)
                result.batch.append(CommandRecord(cmd, plan.goal, action, signal.ok, signal.err, current.as_set()))
                if not signal.ok:
                    failure = signal.err or "device_error"
                    break
            if failure:
                break
            model = models.get(action.predicate)
            if model is not None and notes is not None:
                subst = match(model.action, action)
                if subst is not None:
                    g = instantiate(model, subst)
                    projected_add = g.add - before
                    projected_del = (g.delete - g.add) & before
                    seen_add, seen_del = _observed_delta(before, b.as_set())
                    diff = (projected_add ^ seen_add) | (projected_del ^ seen_del)
                    if diff:
                        notes.append(
                            f"{action}: projected and observed effects differ on {', '.join(sorted(map(str, diff)))}"
                        )
        if failure:
            result.outcomes.append(Outcome(state, Status.FAIL, failure))
        elif holds(goal_formula(plan.goal, goal_conditions), b):
            result.outcomes.append(Outcome(state, Status.SUCCESS, "goal condition observed"))
        else:
            result.outcomes.append(Outcome(state, Status.FAIL, "goal_not_reached"))
    return result
