"""Scripted device artifacts: status machines, sensors and fault injection.

A device never touches the bus itself. Operations and triggers return the
property changes they caused, each carrying the belief delta the change means
for an agent; :class:`~smash.env.environment.Environment` publishes them.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from ..acting import Signal
from ..logic import Atom, Term, normalize_name

ILLEGAL = "illegal_transition"
UNKNOWN_OP = "unknown_operation"
BAD_ARGS = "bad_arguments"
DEVICE_ERROR = "device_error"


def _const(value: Any) -> Term:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return Term(str(value), False, float(value))
    return Term(normalize_name(str(value)))


def belief(predicate: str, *args: Any) -> Atom:
    return Atom(normalize_name(predicate), tuple(_const(a) for a in args))


@dataclass
class PropertyChange:
    name: str
    value: Any
    previous: Any
    asserted: list[Atom] = field(default_factory=list)
    retracted: list[Atom] = field(default_factory=list)

    def payload(self) -> dict:
        return {
            "value": self.value,
            "previous": self.previous,
            "assert": [str(a) for a in self.asserted],
            "retract": [str(a) for a in self.retracted],
        }


@dataclass
class Fault:
    mode: str  # "device_error" or "silent"
    op: str | None = None
    times: int = 1

    def __post_init__(self):
        if self.mode not in (DEVICE_ERROR, "silent"):
            raise ValueError(f"unknown fault mode {self.mode!r}")


@dataclass
class StepResult:
    """Outcome of an operation. ``signal`` is None when the device stays silent."""

    signal: Signal | None
    changes: list[PropertyChange] = field(default_factory=list)


class Device:
    kind = "device"
    statuses: tuple[str, ...] = ()
    transitions: Mapping[str, frozenset[str]] = {}
    initial_status = ""

    def __init__(self, id: str, initial: Mapping[str, Any] | None = None):
        self.id = normalize_name(id)
        self.properties: dict[str, Any] = {}
        if self.statuses:
            self.properties["status"] = self.initial_status
        for k, v in (initial or {}).items():
            self.properties[k] = normalize_name(v) if isinstance(v, str) else v
        if self.statuses and self.properties["status"] not in self.statuses:
            raise ValueError(f"{self.id}: unknown initial status {self.properties['status']!r}")
        self.faults: list[Fault] = []

    # -- beliefs ---------------------------------------------------------

    def beliefs(self, name: str, value: Any) -> list[Atom]:
        """Beliefs that hold while property ``name`` has ``value``."""
        if name == "status" and value is not None:
            return [belief("deviceStatus", self.id, value)]
        return []

    def change(self, name: str, value: Any) -> PropertyChange | None:
        previous = self.properties.get(name)
        if previous == value:
            return None
        self.properties[name] = value
        old, new = self.beliefs(name, previous), self.beliefs(name, value)
        return PropertyChange(name, value, previous, [a for a in new if a not in old], [a for a in old if a not in new])

    def initial_changes(self) -> list[PropertyChange]:
        return [PropertyChange(k, v, None, self.beliefs(k, v), []) for k, v in sorted(self.properties.items())]

    # -- operations ------------------------------------------------------

    def inject(self, mode: str, op: str | None = None, times: int = 1) -> None:
        self.faults.append(Fault(mode, op, times))

    def _fault_for(self, op: str) -> Fault | None:
        for f in self.faults:
            if f.times > 0 and (f.op is None or f.op == op):
                f.times -= 1
                return f
        return None

    def operations(self) -> dict:
        return {"set_status": self.op_set_status} if self.statuses else {}

    def step(self, op: str, args: Sequence[Any]) -> StepResult:
        handler = self.operations().get(op)
        if handler is None:
            return StepResult(Signal(False, UNKNOWN_OP))
        fault = self._fault_for(op)
        if fault is not None:
            return StepResult(None if fault.mode == "silent" else Signal(False, DEVICE_ERROR))
        try:
            return handler(*args)
        except TypeError:
            return StepResult(Signal(False, BAD_ARGS))

    def op_set_status(self, status: Any) -> StepResult:
        status = normalize_name(str(status))
        current = self.properties["status"]
        if status == current:
            return StepResult(Signal(True))
        if status not in self.transitions.get(current, ()):
            return StepResult(Signal(False, ILLEGAL))
        return StepResult(Signal(True), [self.change("status", status)])

    def trigger(self, name: str, args: Sequence[Any]) -> list[PropertyChange]:
        raise ValueError(f"{self.kind} {self.id} has no trigger {name!r}")


def _table(spec: dict[str, str]) -> dict[str, frozenset[str]]:
    return {k: frozenset(v.split()) for k, v in spec.items()}


class TV(Device):
    kind = "tv"
    statuses = ("off", "standby", "playing", "mute", "recording")
    initial_status = "off"
    transitions = _table(
        {
            "off": "standby",
            "standby": "playing off",
            "playing": "mute recording standby off",
            "mute": "playing recording standby off",
            "recording": "playing standby off",
        }
    )

    def beliefs(self, name, value):
        if name == "channel" and value is not None:
            return [belief("displaying", self.id, value)]
        return super().beliefs(name, value)

    def operations(self):
        return {**super().operations(), "set_channel": self.op_set_channel}

    def op_set_channel(self, channel: Any) -> StepResult:
        if self.properties["status"] == "off":
            return StepResult(Signal(False, ILLEGAL))
        ch = self.change("channel", normalize_name(str(channel)))
        return StepResult(Signal(True), [ch] if ch else [])


class Phone(Device):
    kind = "phone"
    statuses = ("idle", "ringing", "voicemail", "in_call")
    initial_status = "idle"
    transitions = _table(
        {
            "idle": "ringing voicemail",
            "ringing": "in_call voicemail idle",
            "voicemail": "idle ringing",
            "in_call": "idle",
        }
    )

    def __init__(self, id, initial=None):
        super().__init__(id, initial)
        self.caller_types: dict[str, str] = {}

    def beliefs(self, name, value):
        if name == "caller" and value is not None:
            return [belief("callerType", value, self.caller_types[value])]
        return super().beliefs(name, value)

    def trigger(self, name, args):
        if name != "incoming_call":
            return super().trigger(name, args)
        caller, kind = (normalize_name(str(a)) for a in args)
        previous = self.properties.get("caller")
        old = self.beliefs("caller", previous)
        self.caller_types[caller] = kind
        new = self.beliefs("caller", caller)
        if old == new:
            return []
        self.properties["caller"] = caller
        return [PropertyChange("caller", caller, previous, [a for a in new if a not in old], [a for a in old if a not in new])]


class PC(Device):
    kind = "pc"
    statuses = ("off", "on")
    initial_status = "off"
    transitions = _table({"off": "on", "on": "off"})


VACANT = "vacant"
UNKNOWN = "unknown"


@dataclass
class WeightClassifier:
    """Nearest registered weight within ``tolerance``; below ``vacancy_threshold`` means nobody."""

    profiles: Mapping[str, float]
    tolerance: float = 5.0
    vacancy_threshold: float = 20.0

    def classify(self, reading: float) -> str:
        if reading < self.vacancy_threshold:
            return VACANT
        dists = sorted((abs(reading - w), normalize_name(u)) for u, w in self.profiles.items())
        dists = [(d, u) for d, u in dists if d <= self.tolerance]
        if not dists:
            return UNKNOWN
        if len(dists) > 1 and dists[0][0] == dists[1][0]:
            return UNKNOWN
        return dists[0][1]


class Sofa(Device):
    kind = "sofa"

    def __init__(self, id, initial=None, classifier: WeightClassifier | None = None, noise: float = 0.0, seed: int = 0):
        super().__init__(id, initial)
        self.classifier = classifier or WeightClassifier({})
        self.noise = noise
        self.rng = random.Random(seed)
        self.last_occupant: str | None = None
        self.properties.setdefault("occupant", VACANT)

    def beliefs(self, name, value):
        if name != "occupant":
            return super().beliefs(name, value)
        if value == VACANT:
            return [belief("isStand", self.last_occupant)] if self.last_occupant else []
        return [belief("beSeated", value, self.id)]

    def trigger(self, name, args):
        if name != "weight":
            return super().trigger(name, args)
        (reading,) = args
        reading = float(reading) + (self.rng.gauss(0.0, self.noise) if self.noise else 0.0)
        who = self.classifier.classify(reading)
        if who == UNKNOWN:
            return []
        previous = self.properties["occupant"]
        old = self.beliefs("occupant", previous)
        if who != VACANT:
            self.last_occupant = who
        if previous == who:
            return []
        self.properties["occupant"] = who
        new = self.beliefs("occupant", who)
        return [PropertyChange("occupant", who, previous, [a for a in new if a not in old], [a for a in old if a not in new])]


KINDS: dict[str, type[Device]] = {"tv": TV, "phone": Phone, "pc": PC, "sofa": Sofa}


def make_device(spec: Mapping[str, Any], seed: int = 0) -> Device:
    kind = spec.get("type", spec["id"])
    if kind not in KINDS:
        raise ValueError(f"unknown device type {kind!r}")
    if kind == "sofa":
        clf = WeightClassifier(
            dict(spec.get("profiles", {})), spec.get("tolerance", 5.0), spec.get("vacancy_threshold", 20.0)
        )
        return Sofa(spec["id"], spec.get("initial"), clf, spec.get("noise", 0.0), seed)
    return KINDS[kind](spec["id"], spec.get("initial"))


def device_step(device: Device, op: str, args: Sequence[Any] = ()) -> Signal:
    """Apply one operation and return its completion signal (``timeout`` if silent)."""
    result = device.step(op, args)
    return result.signal if result.signal is not None else Signal(False, "timeout")
