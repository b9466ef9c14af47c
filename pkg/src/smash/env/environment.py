"""Wires devices to a bus and turns scenario events into bus traffic."""

from __future__ import annotations

import logging
from typing import Any, Iterable, Mapping

from ..acting import Signal
from ..logic import parse_belief_event
from .bus import Bus, BusMessage
from .devices import Device, PropertyChange, StepResult

log = logging.getLogger(__name__)

CONTEXT = "context"


def property_topic(device: str, name: str) -> str:
    return f"devices/{device}/properties/{name}"


def operations_topic(device: str) -> str:
    return f"devices/{device}/operations"


def signals_topic(device: str) -> str:
    return f"devices/{device}/signals"


def goals_topic(agent: str) -> str:
    return f"agent/{agent}/goals"


class Environment:
    """Devices attached to ``bus``; each answers commands on its operations topic.

    ``time`` is the logical clock: scenario events set it, and simulated
    command timeouts advance it.
    """

    def __init__(self, bus: Bus, devices: Iterable[Device] = ()):
        self.bus = bus
        self.devices: dict[str, Device] = {}
        self.time = 0.0
        for d in devices:
            self.add(d)

    def add(self, device: Device) -> None:
        if device.id in self.devices or device.id == CONTEXT:
            raise ValueError(f"duplicate device id {device.id!r}")
        self.devices[device.id] = device
        self.bus.subscribe(operations_topic(device.id), lambda msg, d=device: self._on_command(d, msg))

    def publish_change(self, device: str, change: PropertyChange, req: Any = None, initial: bool = False) -> BusMessage:
        payload = change.payload()
        if req is not None:
            payload["req"] = req
        if initial:
            payload["initial"] = True
        return self.bus.publish(property_topic(device, change.name), payload)

    def _on_command(self, device: Device, msg: BusMessage) -> None:
        p = msg.payload if isinstance(msg.payload, Mapping) else {}
        req = p.get("req")
        op = p.get("op")
        if not isinstance(op, str) or not isinstance(p.get("args", []), list):
            result = StepResult(Signal(False, "bad_request"))
        else:
            result = device.step(op, p.get("args", []))
        for change in result.changes:
            self.publish_change(device.id, change, req)
        if result.signal is None:
            log.debug("%s stays silent on %s", device.id, op)
            return
        self.bus.publish(signals_topic(device.id), {"req": req, "ok": result.signal.ok, "err": result.signal.err})

    def bootstrap(self) -> None:
        """Publish every device's current properties, flagged as initial."""
        for dev_id in sorted(self.devices):
            for change in self.devices[dev_id].initial_changes():
                self.publish_change(dev_id, change, initial=True)

    def assert_beliefs(self, events: Iterable[str], initial: bool = False) -> BusMessage:
        """Publish raw belief events (``+p(a)`` / ``-p(a)``) through the context pseudo-device."""
        asserted, retracted = [], []
        for text in events:
            positive, atom = parse_belief_event(text)
            (asserted if positive else retracted).append(str(atom))
        payload = {"value": None, "previous": None, "assert": asserted, "retract": retracted}
        if initial:
            payload["initial"] = True
        return self.bus.publish(property_topic(CONTEXT, "belief"), payload)

    def fire(self, event: Mapping[str, Any], default_agent: str = "smash") -> None:
        """Inject one scenario event: a user goal, raw beliefs or a device trigger."""
        self.time = float(event.get("at", self.time))
        if "user_goal" in event:
            goals = event["user_goal"]
            goals = [goals] if isinstance(goals, str) else list(goals)
            self.bus.publish(goals_topic(event.get("agent", default_agent)), {"goals": goals})
        elif "belief" in event:
            beliefs = event["belief"]
            self.assert_beliefs([beliefs] if isinstance(beliefs, str) else beliefs)
        elif "trigger" in event:
            device = self.devices[event["device"]]
            for change in device.trigger(event["trigger"], event.get("args", [])):
                self.publish_change(device.id, change)
        elif "fault" in event:
            self.devices[event["device"]].inject(event["fault"], event.get("op"), event.get("times", 1))
        else:
            raise ValueError(f"unrecognized event {dict(event)!r}")
