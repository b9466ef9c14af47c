"""Agents, their reasoning cycle, and the driver that feeds them scenario events."""

from __future__ import annotations

import itertools
import json
import logging
import queue
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import IO, Any, Iterable, Mapping, Sequence

from .acting import Refinement, Signal, acting
from .env.bus import BusMessage
from .env.environment import CONTEXT, Environment, goals_topic, operations_topic
from .env.store import ContextStore
from .goals import GoalActivationRule, GoalStatusSet, Status, goal_reasoning, set_outcome
from .logic import Atom, BeliefBase, LogicError, Term, parse_atom
from .planning import ActionModel, GoalCondition, SearchLimits, planning
from .values import ImpactRule, ImportanceOrder, ValueOrderingRule, value_atoms, value_reasoning

log = logging.getLogger(__name__)


class ConfigError(LogicError):
    pass


@dataclass(frozen=True)
class AgentConfig:
    id: str
    iv_d: ImportanceOrder
    vo: tuple[ValueOrderingRule, ...] = ()
    ga: tuple[GoalActivationRule, ...] = ()
    gi: tuple[ImpactRule, ...] = ()
    kw: tuple[ActionModel, ...] = ()
    ai: tuple[ImpactRule, ...] = ()
    kh: tuple[Refinement, ...] = ()
    ci: tuple[ImpactRule, ...] = ()
    goal_conditions: tuple[GoalCondition, ...] = ()
    beliefs: tuple[Atom, ...] = ()
    constants: tuple[Term, ...] = ()
    devices: tuple[str, ...] = ()
    limits: SearchLimits = SearchLimits()
    strategy: str = "bfs"
    user_first: bool = True
    command_timeout: float = 2.0
    depth_budget: int = 32

    def validate(self) -> "AgentConfig":
        """Check cross-references between the know-what and know-how entries."""
        planned = {m.name for m in self.kw}
        if len(planned) != len(self.kw):
            raise ConfigError(f"agent {self.id}: duplicate action model names")
        refined = {r.name for r in self.kh}
        called = {i.atom.predicate for r in self.kh for i in r.body if i.kind == "action"}
        if missing := sorted(planned - refined):
            raise ConfigError(f"agent {self.id}: no refinement for action(s) {missing}")
        if missing := sorted(called - refined):
            raise ConfigError(f"agent {self.id}: sub-action(s) {missing} have no refinement")
        if orphans := sorted(refined - planned - called):
            raise ConfigError(f"agent {self.id}: refinement(s) {orphans} match no action model")
        if self.strategy not in ("bfs", "gbfs"):
            raise ConfigError(f"agent {self.id}: unknown strategy {self.strategy!r}")
        if CONTEXT in self.devices:
            raise ConfigError(f"agent {self.id}: {CONTEXT!r} is reserved")
        return self


@dataclass
class CycleTrace:
    index: int
    agent: str
    at: float
    trigger: dict
    iv: list[list[str]] = field(default_factory=list)
    gs_before: list[dict] = field(default_factory=list)
    gs_after: list[dict] = field(default_factory=list)
    goals: list[dict] = field(default_factory=list)
    plans: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    commands: list[dict] = field(default_factory=list)
    outcomes: list[dict] = field(default_factory=list)
    transitions: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    # not serialized below debug verbosity
    planning_view: frozenset[Atom] = frozenset()
    command_views: list[frozenset[Atom]] = field(default_factory=list)
    iv_order: ImportanceOrder | None = None

    WALL_CLOCK = ("timings",)

    def to_json(self, verbosity: str = "info") -> dict:
        out = {
            "cycle": self.index,
            "agent": self.agent,
            "at": self.at,
            "trigger": self.trigger,
            "iv": self.iv,
            "gs_before": self.gs_before,
            "gs_after": self.gs_after,
            "goals": self.goals,
            "plans": self.plans,
            "failures": self.failures,
            "commands": self.commands,
            "outcomes": self.outcomes,
            "transitions": self.transitions,
            "timings": self.timings,
        }
        if verbosity != "quiet":
            out["notes"] = self.notes
        if verbosity == "debug":
            out["planning_view"] = sorted(map(str, self.planning_view))
            out["command_views"] = [sorted(map(str, v)) for v in self.command_views]
        return out


def without_wall_clock(record: Mapping[str, Any]) -> dict:
    return {k: v for k, v in record.items() if k not in CycleTrace.WALL_CLOCK}


class TraceSink:
    """Append-only JSON-lines writer; safe to share between agent threads."""

    def __init__(self, stream: IO[str] | None = None, verbosity: str = "info"):
        self.stream = stream
        self.verbosity = verbosity
        self.records: list[CycleTrace] = []
        self._lock = threading.Lock()

    def write(self, trace: CycleTrace) -> None:
        with self._lock:
            self.records.append(trace)
            if self.stream is not None:
                self.stream.write(json.dumps(trace.to_json(self.verbosity), sort_keys=True) + "\n")
                self.stream.flush()


def _wire_arg(t: Term) -> Any:
    if t.value is not None:
        return int(t.value) if float(t.value).is_integer() else t.value
    return t.name


class Agent:
    """One reasoning agent: beliefs, goal statuses and a single FIFO of bus messages."""

    def __init__(
        self,
        config: AgentConfig,
        bus,
        clock: Environment | None = None,
        sink: TraceSink | None = None,
        pddl_out: str | None = None,
    ):
        self.config = config.validate()
        self.id = config.id
        self.bus = bus
        self.clock = clock
        self.sink = sink
        self.pddl_out = pddl_out
        self.beliefs = BeliefBase(config.beliefs)
        self.store = ContextStore(self.beliefs)
        self.gs = GoalStatusSet()
        self.traces: list[CycleTrace] = []
        self.transitions: list[dict] = []
        self.seqs: dict[str, list[int]] = {}
        self._queue: queue.Queue = queue.Queue()
        self._pending: deque[BusMessage] = deque()
        self._reqs = itertools.count(1)
        self._cycle = 0
        self._in_cycle: list[dict] | None = None
        for dev in (*config.devices, CONTEXT):
            bus.subscribe(f"devices/{dev}/properties/+", queue=self._queue)
        for dev in config.devices:
            bus.subscribe(f"devices/{dev}/signals", queue=self._queue)
        bus.subscribe(goals_topic(self.id), queue=self._queue)

    # -- message intake ----------------------------------------------------

    def _next(self, timeout: float) -> BusMessage | None:
        if self._pending:
            return self._pending.popleft()
        return self._next_fresh(timeout)

    def _apply(self, msg: BusMessage) -> bool:
        """Fold a property message into beliefs and the store; True if beliefs changed."""
        self.seqs.setdefault(msg.topic, []).append(msg.seq)
        p = msg.payload
        asserted = [parse_atom(a, ground=True) for a in p.get("assert", [])]
        retracted = [parse_atom(a, ground=True) for a in p.get("retract", [])]
        changed = self.beliefs.apply(asserted, retracted)
        self.store.apply(asserted, retracted)
        _, device, _, prop = msg.topic.split("/")
        if device != CONTEXT and not p.get("initial"):
            record = {
                "cycle": self._cycle,
                "device": device,
                "property": prop,
                "from": p.get("previous"),
                "to": p.get("value"),
            }
            self.transitions.append(record)
            if self._in_cycle is not None:
                self._in_cycle.append(record)
        return changed

    def sync(self) -> None:
        """Absorb initial device state without reasoning."""
        while (msg := self._next(0.0)) is not None:
            if "/properties/" in msg.topic:
                self._apply(msg)

    def process(self, until: Any = None, timeout: float = 10.0) -> list[CycleTrace]:
        """Handle queued messages; one cycle per belief change or goal arrival.

        With ``until`` set, keep going (blocking on a remote bus) until the
        matching sync marker arrives; otherwise stop when the queue is empty.
        """
        produced = []
        while True:
            msg = self._next(timeout)
            if msg is None:
                if until is not None and self.bus.remote:
                    raise TimeoutError(f"agent {self.id}: sync marker {until!r} never arrived")
                return produced
            p = msg.payload if isinstance(msg.payload, Mapping) else {}
            if msg.topic == goals_topic(self.id):
                if "sync" in p:
                    if p["sync"] == until:
                        return produced
                    continue
                goals = [parse_atom(g, ground=True) for g in p.get("goals", [])]
                self._in_cycle = []
                produced.append(self.run_cycle({"topic": msg.topic, "goals": [str(g) for g in goals]}, goals))
                self._in_cycle = None
            elif "/properties/" in msg.topic:
                self._in_cycle = []
                changed = self._apply(msg)
                if changed and not p.get("initial"):
                    trigger = {"topic": msg.topic, "assert": p.get("assert", []), "retract": p.get("retract", [])}
                    produced.append(self.run_cycle(trigger))
                self._in_cycle = None
            else:
                log.debug("agent %s ignores stray %s", self.id, msg.topic)

    # -- acting interface --------------------------------------------------

    def execute(self, cmd: Atom) -> Signal:
        """Send one command and wait for its completion signal."""
        device = cmd.args[0].name if cmd.args else None
        if device not in self.config.devices:
            return Signal(False, "unknown_device")
        req = f"{self.id}-{next(self._reqs)}"
        payload = {"device": device, "op": cmd.predicate, "args": [_wire_arg(t) for t in cmd.args[1:]], "req": req}
        self.bus.publish(operations_topic(device), payload)
        deferred = []
        try:
            while True:
                msg = self._next_fresh(self.config.command_timeout)
                if msg is None:
                    if self.clock is not None:
                        self.clock.time += self.config.command_timeout
                    return Signal(False, "timeout")
                p = msg.payload if isinstance(msg.payload, Mapping) else {}
                if p.get("req") != req:
                    deferred.append(msg)
                elif msg.topic.endswith("/signals"):
                    return Signal(bool(p.get("ok")), p.get("err") or "")
                else:
                    self._apply(msg)
        finally:
            self._pending.extend(deferred)

    def _next_fresh(self, timeout: float) -> BusMessage | None:
        try:
            if not self.bus.remote:
                return self._queue.get_nowait()
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            return None

    # -- the cycle ---------------------------------------------------------

    def view(self, iv: ImportanceOrder) -> BeliefBase:
        """Beliefs plus the derived value-order and goal-status atoms rules can test."""
        v = self.beliefs.copy()
        for a in value_atoms(iv):
            v.add(a)
        for a in self.gs.atoms():
            v.add(a)
        return v

    def run_cycle(self, trigger: dict, gg: Sequence[Atom] = ()) -> CycleTrace:
        """Value reasoning, goal reasoning, planning and acting on the current beliefs."""
        cfg = self.config
        trace = CycleTrace(self._cycle, self.id, self.clock.time if self.clock else 0.0, trigger)
        trace.gs_before = self.gs.to_json()
        notes = trace.notes
        planning_times: list[tuple] = []
        t_plan = t_act = t_end = None
        t0 = time.perf_counter()
        try:
            iv = value_reasoning(self.beliefs, cfg.iv_d, cfg.vo, notes)
            goals, self.gs = goal_reasoning(self.beliefs, gg, iv, self.gs, cfg.ga, cfg.gi, notes, cfg.user_first)
            pview = self.view(iv)
            t_plan = time.perf_counter()
            planned = planning(
                self.beliefs, iv, goals, cfg.kw, cfg.ai, cfg.goal_conditions, pview,
                cfg.constants, cfg.limits, cfg.strategy, self.pddl_out, notes,
            )  # fmt: skip
            planning_times = planned.timings
            for g, reason in planned.failures:
                self.gs = set_outcome(self.gs, g.goal, g.source, Status.FAIL, reason)
            t_act = time.perf_counter()
            acted = acting(
                self.beliefs, iv, planned.plans, cfg.kh, cfg.ci, self.execute, lambda: self.view(iv),
                cfg.kw, cfg.goal_conditions, cfg.depth_budget, notes,
            )  # fmt: skip
            for o in acted.outcomes:
                self.gs = set_outcome(self.gs, o.goal.goal, o.goal.source, o.status, o.reason)
            t_end = time.perf_counter()
        except Exception as exc:  # a layer blew up: contain it
            log.exception("agent %s cycle %d aborted", self.id, trace.index)
            notes.append(f"cycle aborted: {type(exc).__name__}: {exc}")
            live = self.gs.with_status(Status.ACTIVE)
            for e in live:
                self.gs = set_outcome(self.gs, e.goal, e.source, Status.FAIL, "cycle aborted")
            trace.outcomes = [
                {"goal": str(e.goal), "source": e.source.value, "status": "fail", "reason": "cycle aborted"}
                for e in live
            ]
            t_end = time.perf_counter()
        else:
            trace.iv = iv.to_lists()
            trace.iv_order = iv
            trace.goals = [{"goal": str(g.goal), "source": g.source.value} for g in goals]
            trace.plans = [p.to_json() for p in planned.plans]
            trace.failures = [{"goal": str(g.goal), "source": g.source.value, "reason": r} for g, r in planned.failures]
            trace.commands = [r.to_json() for r in acted.batch]
            trace.command_views = [r.view for r in acted.batch]
            trace.planning_view = pview.as_set()
            trace.outcomes = [
                {"goal": str(o.goal.goal), "source": o.goal.source.value, "status": o.status.value, "reason": o.reason}
                for o in acted.outcomes
            ]
        trace.timings = {
            "value_goal": (t_plan or t_end) - t0,
            "planning": [{"goal": str(g.goal), "seconds": s} for g, s in planning_times],
            "acting": (t_end - t_act) if t_act else 0.0,
            "total": t_end - t0,
        }
        trace.gs_after = self.gs.to_json()
        trace.transitions = list(self._in_cycle or [])
        self._cycle += 1
        self.traces.append(trace)
        if self.sink is not None:
            self.sink.write(trace)
        return trace

    def seq_gaps(self) -> dict[str, list[int]]:
        """Per topic, sequence numbers that were skipped or seen twice."""
        out = {}
        for topic, seen in self.seqs.items():
            expected = list(range(min(seen), max(seen) + 1))
            if sorted(seen) != expected:
                out[topic] = sorted(set(expected) ^ set(seen)) or sorted(seen)
        return out


def run_agents(
    configs: Sequence[AgentConfig],
    environment: Environment,
    events: Iterable[Mapping[str, Any]],
    sink: TraceSink | None = None,
    pddl_out: str | None = None,
    bus=None,
    agents_out: list | None = None,
) -> list[CycleTrace]:
    """Bootstrap, then fire each event and let every agent react to it.

    ``bus`` is the agents' bus handle; it defaults to the environment's bus and
    may be a remote client attached to it. The created agents are appended to
    ``agents_out`` when given.
    """
    ids = [c.id for c in configs]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"duplicate agent ids {ids}")
    owners: dict[str, str] = {}
    for c in configs:
        for d in c.devices:
            if d in owners:
                raise ConfigError(f"device {d!r} is claimed by both {owners[d]!r} and {c.id!r}")
            owners[d] = c.id
    bus = bus or environment.bus
    agents = [Agent(c, bus, environment, sink, pddl_out) for c in configs]
    if agents_out is not None:
        agents_out.extend(agents)
    environment.bootstrap()
    for a in agents:
        environment.bus.publish(goals_topic(a.id), {"sync": "boot"})
        a.process(until="boot")
    traces = []
    for n, event in enumerate(events):
        environment.fire(event, default_agent=ids[0] if ids else "smash")
        for a in agents:
            environment.bus.publish(goals_topic(a.id), {"sync": n})
            traces.extend(a.process(until=n))
    return traces
