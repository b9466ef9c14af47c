"""In-process publish/subscribe bus with MQTT-style topic wildcards."""

from __future__ import annotations

import itertools
import queue
import re
import threading
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Callable

_SEG = r"[A-Za-z0-9_.-]+"
_TOPIC = re.compile(
    rf"devices/{_SEG}/properties/{_SEG}|devices/{_SEG}/operations|devices/{_SEG}/signals|agent/{_SEG}/goals"
)


class TopicError(ValueError):
    pass


@dataclass(frozen=True)
class BusMessage:
    topic: str
    payload: Any
    seq: int

    def to_frame(self) -> dict:
        return {"t": self.topic, "p": self.payload, "seq": self.seq}


def check_topic(topic: str) -> str:
    if not isinstance(topic, str) or not _TOPIC.fullmatch(topic):
        raise TopicError(f"malformed topic {topic!r}")
    return topic


def check_pattern(pattern: str) -> str:
    parts = pattern.split("/") if isinstance(pattern, str) else []
    if not parts or any(p == "" for p in parts):
        raise TopicError(f"malformed pattern {pattern!r}")
    for i, part in enumerate(parts):
        if part == "#" and i != len(parts) - 1:
            raise TopicError(f"'#' must be the last segment: {pattern!r}")
        if part not in ("+", "#") and not re.fullmatch(_SEG, part):
            raise TopicError(f"malformed pattern segment {part!r} in {pattern!r}")
    return pattern


def topic_matches(pattern: str, topic: str) -> bool:
    pp, tp = pattern.split("/"), topic.split("/")
    for i, part in enumerate(pp):
        if part == "#":
            return True
        if i >= len(tp) or (part != "+" and part != tp[i]):
            return False
    return len(pp) == len(tp)


class Subscription:
    """Messages matching ``pattern``, either queued or handed to ``callback``.

    Several subscriptions may share one queue, which then interleaves their
    messages in delivery order.
    """

    _ids = itertools.count(1)

    def __init__(self, pattern: str, callback: Callable[[BusMessage], None] | None = None, target: queue.Queue | None = None):
        self.pattern = check_pattern(pattern)
        self.callback = callback
        self.queue: queue.Queue | None = None if callback else (target if target is not None else queue.Queue())
        self.id = next(self._ids)

    def deliver(self, msg: BusMessage) -> None:
        if self.callback is not None:
            self.callback(msg)
        else:
            self.queue.put(msg)

    def get(self, timeout: float | None = 0.0) -> BusMessage | None:
        """Next message, or None. ``timeout=0`` never blocks."""
        try:
            if timeout == 0:
                return self.queue.get_nowait()
            return self.queue.get(timeout=timeout)
        except queue.Empty:
            return None

    def drain(self) -> list[BusMessage]:
        out = []
        while (m := self.get()) is not None:
            out.append(m)
        return out


class Bus:
    """Thread-safe bus; messages on one topic are delivered in publish order.

    Delivery is synchronous: ``publish`` returns after every matching
    subscriber has its copy. Callbacks run on the publisher's thread and may
    publish in turn.
    """

    remote = False

    def __init__(self):
        self._lock = threading.RLock()
        self._seq: dict[str, int] = defaultdict(int)
        self._subs: list[Subscription] = []
        self.log: list[BusMessage] | None = None

    def subscribe(
        self,
        pattern: str,
        callback: Callable[[BusMessage], None] | None = None,
        queue: queue.Queue | None = None,
    ) -> Subscription:
        sub = Subscription(pattern, callback, queue)
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            self._subs = [s for s in self._subs if s is not sub]

    def publish(self, topic: str, payload: Any) -> BusMessage:
        check_topic(topic)
        with self._lock:
            self._seq[topic] += 1
            msg = BusMessage(topic, payload, self._seq[topic])
            if self.log is not None:
                self.log.append(msg)
            for sub in list(self._subs):
                if topic_matches(sub.pattern, topic):
                    sub.deliver(msg)
        return msg
