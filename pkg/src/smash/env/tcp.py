"""Newline-delimited JSON transport that exposes a :class:`Bus` over TCP.

Frames: ``{"t": topic, "p": payload, "seq": n}`` for messages and
``{"sub": pattern}`` to subscribe. The server answers a subscription with
``{"ack": pattern}`` once it is registered so clients never miss messages
published right after subscribing.
"""

from __future__ import annotations

import json
import logging
import queue
import socket
import socketserver
import threading
from typing import Any, Callable

from .bus import Bus, BusMessage, Subscription, check_pattern, check_topic, topic_matches

log = logging.getLogger(__name__)


def _send(sock: socket.socket, lock: threading.Lock, frame: dict) -> None:
    data = (json.dumps(frame, separators=(",", ":")) + "\n").encode("utf-8")
    with lock:
        sock.sendall(data)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        bus: Bus = self.server.bus
        lock = threading.Lock()
        subs = []
        last: list[BusMessage | None] = [None]

        def forward(msg: BusMessage) -> None:
            # one copy per connection even when several of its patterns match
            if msg is last[0]:
                return
            last[0] = msg
            try:
                _send(self.request, lock, msg.to_frame())
            except OSError:
                pass

        try:
            for raw in self.rfile:
                try:
                    frame = json.loads(raw)
                    if "sub" in frame:
                        subs.append(bus.subscribe(check_pattern(frame["sub"]), forward))
                        _send(self.request, lock, {"ack": frame["sub"]})
                    else:
                        bus.publish(check_topic(frame["t"]), frame.get("p"))
                except (ValueError, KeyError, TypeError) as exc:
                    log.warning("dropping bad frame %r: %s", raw[:80], exc)
        finally:
            for s in subs:
                bus.unsubscribe(s)


class BusServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, bus: Bus, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _Handler)
        self.bus = bus
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.server_address[1]

    def start(self) -> "BusServer":
        self._thread = threading.Thread(target=self.serve_forever, name="bus-server", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()


class BusClient:
    """Remote bus handle with the same ``publish``/``subscribe`` surface as :class:`Bus`."""

    remote = True

    def __init__(self, host: str, port: int, timeout: float = 5.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._sock.settimeout(None)
        self._lock = threading.Lock()
        self._subs: list[Subscription] = []
        self._subs_lock = threading.Lock()
        self._acks: queue.Queue = queue.Queue()
        self._timeout = timeout
        self._reader = threading.Thread(target=self._read, name="bus-client", daemon=True)
        self._reader.start()

    def _read(self) -> None:
        with self._sock.makefile("rb") as f:
            for raw in f:
                frame = json.loads(raw)
                if "ack" in frame:
                    self._acks.put(frame["ack"])
                    continue
                msg = BusMessage(frame["t"], frame.get("p"), frame.get("seq", 0))
                with self._subs_lock:
                    subs = list(self._subs)
                for s in subs:
                    if topic_matches(s.pattern, msg.topic):
                        s.deliver(msg)

    def subscribe(
        self,
        pattern: str,
        callback: Callable[[BusMessage], None] | None = None,
        queue: queue.Queue | None = None,
    ) -> Subscription:
        sub = Subscription(pattern, callback, queue)
        with self._subs_lock:
            self._subs.append(sub)
        _send(self._sock, self._lock, {"sub": pattern})
        self._acks.get(timeout=self._timeout)
        return sub

    def publish(self, topic: str, payload: Any) -> None:
        _send(self._sock, self._lock, {"t": check_topic(topic), "p": payload})

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()
