"""Expected-vs-observed transition diffs and timing tables."""

from __future__ import annotations

import difflib
import statistics
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .runtime import CycleTrace
from .scenario import Scenario, run_scenario


def _key(t: Mapping[str, Any], with_from: bool) -> tuple:
    return (t["device"], t["property"], t.get("from") if with_from else None, t["to"])


def _show(t: Mapping[str, Any]) -> str:
    start = f"{t['from']}->" if t.get("from") is not None else "->"
    return f"{t['device']}.{t['property']} {start}{t['to']}"


@dataclass
class DiffLine:
    sign: str  # "-" expected but not observed, "+" observed but not expected
    position: int  # index into the expected list
    transition: dict
    cycle: int | None = None

    def __str__(self) -> str:
        where = f" (cycle {self.cycle})" if self.cycle is not None else ""
        return f"{self.sign} [{self.position}] {_show(self.transition)}{where}"


@dataclass
class ValidationReport:
    lines: list[DiffLine] = field(default_factory=list)
    observed: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.lines

    @property
    def first(self) -> DiffLine | None:
        return self.lines[0] if self.lines else None

    @property
    def divergence_cycle(self) -> int | None:
        """Cycle of the first divergence, from the observed side when there is one."""
        for line in self.lines:
            if line.cycle is not None:
                return line.cycle
        return None


def diff_transitions(expected: Sequence[Mapping[str, Any]], observed: Iterable[Mapping[str, Any]]) -> ValidationReport:
    """Ordered diff of expected transitions against the observed stream.

    Only (device, property) pairs named in ``expected`` are compared. Previous
    values take part in the comparison only when every expected entry gives one.
    """
    report = ValidationReport()
    if not expected:
        report.warnings.append("no expected transitions: validation passes vacuously")
        return report
    tracked = {(e["device"], e["property"]) for e in expected}
    report.observed = [dict(t) for t in observed if (t["device"], t["property"]) in tracked]
    with_from = all(e.get("from") is not None for e in expected)
    sm = difflib.SequenceMatcher(
        a=[_key(e, with_from) for e in expected],
        b=[_key(o, with_from) for o in report.observed],
        autojunk=False,
    )
    for tag, i1, i2, j1, j2 in sm.get_opcodes():
        if tag == "equal":
            continue
        for i in range(i1, i2):
            report.lines.append(DiffLine("-", i, dict(expected[i]), report.observed[j1]["cycle"] if j1 < j2 else None))
        for j in range(j1, j2):
            report.lines.append(DiffLine("+", i1, report.observed[j], report.observed[j].get("cycle")))
    return report


def validate_scenario(scenario: Scenario, **run_kwargs) -> ValidationReport:
    result = run_scenario(scenario, **run_kwargs)
    observed = [t for ts in result.transitions.values() for t in ts]
    return diff_transitions(scenario.expect, observed)


# -- timing ------------------------------------------------------------------


@dataclass
class Execution:
    """Per-layer seconds of one scenario run, summed over its cycles."""

    planning: dict[str, float] = field(default_factory=dict)
    value_goal: float = 0.0
    value_goal_max: float = 0.0
    acting: float = 0.0
    total: float = 0.0

    @classmethod
    def from_traces(cls, traces: Sequence[CycleTrace]) -> "Execution":
        ex = cls()
        for t in traces:
            tm = t.timings
            for entry in tm["planning"]:
                ex.planning[entry["goal"]] = ex.planning.get(entry["goal"], 0.0) + entry["seconds"]
            ex.value_goal += tm["value_goal"]
            ex.value_goal_max = max(ex.value_goal_max, tm["value_goal"])
            ex.acting += tm["acting"]
            ex.total += tm["total"]
        return ex

    @property
    def parts(self) -> float:
        return sum(self.planning.values()) + self.value_goal + self.acting


def additivity_error(traces: Sequence[CycleTrace]) -> float:
    """Relative gap between the summed cycle totals and the summed layer times."""
    ex = Execution.from_traces(traces)
    return abs(ex.total - ex.parts) / ex.total if ex.total else 0.0


def bench(scenario: Scenario, repetitions: int = 4) -> list[Execution]:
    return [Execution.from_traces(run_scenario(scenario).traces) for _ in range(repetitions)]


def render_table(executions: Sequence[Execution]) -> str:
    goals: list[str] = []
    for ex in executions:
        goals.extend(g for g in ex.planning if g not in goals)
    rows: list[tuple[str, list[float]]] = [(f"planning {g}", [ex.planning.get(g, 0.0) for ex in executions]) for g in goals]
    rows += [
        ("value+goal reasoning", [ex.value_goal for ex in executions]),
        ("value+goal (max cycle)", [ex.value_goal_max for ex in executions]),
        ("acting", [ex.acting for ex in executions]),
        ("total", [ex.total for ex in executions]),
    ]
    header = ["time (s)"] + [f"execution #{i + 1}" for i in range(len(executions))] + ["mean", "stddev"]
    body = []
    for label, xs in rows:
        sd = statistics.stdev(xs) if len(xs) > 1 else 0.0
        body.append([label] + [f"{x:.6f}" for x in xs] + [f"{statistics.fmean(xs):.6f}", f"{sd:.6f}"])
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    fmt = lambda r: " | ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))  # noqa: E731
    sep = "-+-".join("-" * w for w in widths)
    return "\n".join([fmt(header), sep] + [fmt(r) for r in body])
