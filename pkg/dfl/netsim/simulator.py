"""Deterministic discrete-event network simulator.

Simulated time is integer microseconds. Events are processed in (time,
sequence number) order, so equal-time events run in enqueue order and a given
NetConfig seed always produces the same trace. Every envelope consumes exactly
three draws from the simulator RNG (drop, latency, tail latency), in that order.
"""

from __future__ import annotations
from dataclasses import dataclass
import heapq
import os
import sys
from typing import Callable, Optional, Protocol

import numpy as np

from dfl.config.models import NetConfig
from dfl.netsim.blobstore import BlobStore
from dfl.netsim.ledger import LedgerEntry, TrafficLedger


def _debug(message: str) -> None:
    """Emit debug diagnostics when DFL_DEBUG is enabled."""
    if os.getenv("DFL_DEBUG") == "1":
        print(f"[DEBUG] netsim: {message}", file=sys.stderr)


def ms_to_us(ms: float) -> int:
    return int(round(ms * 1000.0))


@dataclass
class Envelope:
    seq: int
    src: int
    dst: int
    kind: str
    payload: bytes
    send_time: int
    deliver_time: int
    topic: Optional[str] = None
    dropped: bool = False
    outcome: str = "pending"
    reply_to: Optional[int] = None  # seq of the request this answers
    category: Optional[str] = None  # "update" / "reply" for ledger payload accounting
    vector_bytes: int = 0

    @property
    def size(self) -> int:
        return len(self.payload)


@dataclass(frozen=True)
class TraceRecord:
    time: int
    src: int
    dst: str
    kind: str
    size: int
    outcome: str

    def line(self) -> str:
        return f"{self.time}\t{self.src}\t{self.dst}\t{self.kind}\t{self.size}\t{self.outcome}"


class Node(Protocol):
    id: int

    def on_message(self, env: Envelope) -> None: ...

    def on_timeout(self, request: Envelope) -> None: ...


class Simulator:
    def __init__(self, net: NetConfig, ledger: Optional[TrafficLedger] = None) -> None:
        self.net = net
        self.ledger = ledger or TrafficLedger()
        self.blobs = BlobStore()
        self.now = 0
        self.trace: list[TraceRecord] = []
        self.in_flight = 0
        self._rng = np.random.default_rng(net.seed)
        self._queue: list[tuple[int, int, Callable[[], None]]] = []
        self._seq = 0
        self._nodes: dict[int, Node] = {}
        self._subs: dict[str, set[int]] = {}
        self._offline: set[int] = set()
        self._departed: set[int] = set()
        self._pending: dict[int, Envelope] = {}

    # membership

    def register(self, node: Node) -> None:
        self._nodes[node.id] = node
        self._departed.discard(node.id)
        self.ledger.register(node.id)

    def remove(self, agent: int) -> None:
        """Permanent departure: the agent sends and receives nothing afterwards."""
        self._departed.add(agent)
        for members in self._subs.values():
            members.discard(agent)

    def set_offline(self, agent: int, offline: bool) -> None:
        if offline:
            self._offline.add(agent)
        else:
            self._offline.discard(agent)

    def is_online(self, agent: int) -> bool:
        return agent in self._nodes and agent not in self._offline and agent not in self._departed

    def subscribe(self, agent: int, topic: str) -> None:
        self._subs.setdefault(topic, set()).add(agent)

    def unsubscribe(self, agent: int, topic: str) -> None:
        self._subs.get(topic, set()).discard(agent)

    def subscribers(self, topic: str) -> tuple[int, ...]:
        return tuple(sorted(self._subs.get(topic, ())))

    # scheduling

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def call_at(self, time: int, callback: Callable[[], None], owner: Optional[int] = None) -> None:
        """Run ``callback`` at ``time``; skipped if ``owner`` is offline or gone by then."""
        def fire() -> None:
            if owner is None or self.is_online(owner):
                callback()

        heapq.heappush(self._queue, (max(time, self.now), self._next_seq(), fire))

    def call_later(self, delay_ms: float, callback: Callable[[], None], owner: Optional[int] = None) -> None:
        self.call_at(self.now + ms_to_us(delay_ms), callback, owner)

    def advance_to(self, time: int) -> None:
        if time > self.now:
            self.now = time

    # messaging

    def _sample(self) -> tuple[bool, int]:
        dropped = bool(self._rng.random() < self.net.drop_prob)
        latency = self._rng.uniform(
            self.net.latency_mean - self.net.latency_jitter,
            self.net.latency_mean + self.net.latency_jitter,
        )
        late = bool(self._rng.random() < self.net.late_prob)
        latency = max(latency, 0.0) + (self.net.late_extra if late else 0.0)
        return dropped, ms_to_us(latency)

    def _record(self, env: Envelope) -> None:
        dst = f"{env.topic}:{env.dst}" if env.topic else str(env.dst)
        self.trace.append(TraceRecord(self.now, env.src, dst, env.kind, env.size, env.outcome))

    def _dispatch(
        self,
        src: int,
        dst: int,
        payload: bytes,
        kind: str,
        topic: Optional[str] = None,
        reply_to: Optional[int] = None,
        category: Optional[str] = None,
        vector_bytes: int = 0,
    ) -> Optional[Envelope]:
        if not self.is_online(src):
            return None
        dropped, latency = self._sample()
        env = Envelope(
            seq=self._next_seq(),
            src=src,
            dst=dst,
            kind=kind,
            payload=payload,
            send_time=self.now,
            deliver_time=self.now + latency,
            topic=topic,
            reply_to=reply_to,
            category=category,
            vector_bytes=vector_bytes,
        )
        self.ledger.record_send(src, env.size, category, vector_bytes)
        if dropped or not self.is_online(dst):
            env.dropped = True
            env.outcome = "dropped" if dropped else "unreachable"
            self.ledger.record_drop(src)
            self._record(env)
            return env
        self.in_flight += 1
        heapq.heappush(self._queue, (env.deliver_time, env.seq, lambda: self._deliver(env)))
        return env

    def _deliver(self, env: Envelope) -> None:
        self.in_flight -= 1
        if not self.is_online(env.dst):
            env.dropped = True
            env.outcome = "lost"
            self.ledger.record_drop(env.src)
            self._record(env)
            return
        if env.reply_to is not None:
            self._pending.pop(env.reply_to, None)
        env.outcome = "delivered"
        self.ledger.record_receive(env.dst, env.size, env.category, env.vector_bytes)
        self._record(env)
        self._nodes[env.dst].on_message(env)

    def publish(
        self,
        src: int,
        topic: str,
        payload: bytes,
        kind: str,
        category: Optional[str] = None,
        vector_bytes: int = 0,
    ) -> list[Envelope]:
        """Fan out one envelope per current subscriber other than ``src``."""
        out = []
        for dst in self.subscribers(topic):
            if dst == src:
                continue
            env = self._dispatch(src, dst, payload, kind, topic=topic, category=category, vector_bytes=vector_bytes)
            if env is not None:
                out.append(env)
        return out

    def send(
        self,
        src: int,
        dst: int,
        payload: bytes,
        kind: str,
        category: Optional[str] = None,
        vector_bytes: int = 0,
    ) -> Optional[Envelope]:
        return self._dispatch(src, dst, payload, kind, category=category, vector_bytes=vector_bytes)

    def request(
        self,
        src: int,
        dst: int,
        payload: bytes,
        kind: str,
        timeout_ms: float,
        category: Optional[str] = None,
        vector_bytes: int = 0,
    ) -> Optional[Envelope]:
        """Send a request; ``on_timeout`` fires at ``src`` unless a reply arrives in time."""
        env = self._dispatch(src, dst, payload, kind, category=category, vector_bytes=vector_bytes)
        if env is None:
            return None
        self._pending[env.seq] = env

        def expire() -> None:
            if self._pending.pop(env.seq, None) is not None:
                self._nodes[src].on_timeout(env)

        self.call_later(timeout_ms, expire, owner=src)
        return env

    def reply(
        self,
        request: Envelope,
        src: int,
        payload: bytes,
        kind: str,
        category: Optional[str] = None,
        vector_bytes: int = 0,
    ) -> Optional[Envelope]:
        return self._dispatch(
            src, request.src, payload, kind,
            reply_to=request.seq, category=category, vector_bytes=vector_bytes,
        )

    def ledger_snapshot(self, round_index: int) -> dict[int, LedgerEntry]:
        return self.ledger.snapshot(round_index)

    # event loop

    def run_until(
        self,
        until: Optional[int] = None,
        condition: Optional[Callable[[], bool]] = None,
    ) -> list[TraceRecord]:
        """Process events up to time ``until`` (inclusive) or until ``condition()`` holds.

        Returns the trace records produced by this call.
        """
        start = len(self.trace)
        while self._queue:
            if condition is not None and condition():
                break
            time, _, action = self._queue[0]
            if until is not None and time > until:
                break
            heapq.heappop(self._queue)
            self.now = time
            action()
        if until is not None:
            self.advance_to(until)
        return self.trace[start:]

    def run_until_idle(self) -> list[TraceRecord]:
        return self.run_until()

    def run_until_quiescent(self) -> list[TraceRecord]:
        """Process events until no envelope is in flight (pending timers may remain)."""
        return self.run_until(condition=lambda: self.in_flight == 0)
