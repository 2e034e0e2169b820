from __future__ import annotations
from dataclasses import dataclass, field, replace
from typing import Optional


class LedgerError(ValueError):
    pass


@dataclass
class LedgerEntry:
    bytes_sent: int = 0
    bytes_received: int = 0
    messages_sent: int = 0
    messages_dropped: int = 0
    update_bytes_sent: int = 0
    update_bytes_received: int = 0
    reply_bytes_sent: int = 0
    reply_bytes_received: int = 0


@dataclass
class TrafficLedger:
    """Byte and message counters per (round, agent).

    ``bytes_*`` count whole envelopes; ``update_bytes_*`` and ``reply_bytes_*``
    count only the vector payload of update and reply messages.
    """

    agents: set[int] = field(default_factory=set)
    current: Optional[int] = None
    _rounds: dict[int, dict[int, LedgerEntry]] = field(default_factory=dict)
    _closed: set[int] = field(default_factory=set)

    def register(self, agent: int) -> None:
        self.agents.add(agent)

    def open_round(self, round_index: int) -> None:
        if round_index in self._closed:
            raise LedgerError(f"round {round_index} already closed")
        self._rounds.setdefault(round_index, {})
        self.current = round_index

    def close_round(self, round_index: int) -> None:
        if round_index not in self._rounds:
            raise LedgerError(f"round {round_index} was never opened")
        self._closed.add(round_index)
        if self.current == round_index:
            self.current = None

    def _entry(self, agent: int) -> Optional[LedgerEntry]:
        if self.current is None:
            return None
        return self._rounds[self.current].setdefault(agent, LedgerEntry())

    def record_send(self, agent: int, size: int, category: Optional[str], vector_bytes: int) -> None:
        entry = self._entry(agent)
        if entry is None:
            return
        entry.bytes_sent += size
        entry.messages_sent += 1
        if category == "update":
            entry.update_bytes_sent += vector_bytes
        elif category == "reply":
            entry.reply_bytes_sent += vector_bytes

    def record_drop(self, agent: int) -> None:
        entry = self._entry(agent)
        if entry is not None:
            entry.messages_dropped += 1

    def record_receive(self, agent: int, size: int, category: Optional[str], vector_bytes: int) -> None:
        entry = self._entry(agent)
        if entry is None:
            return
        entry.bytes_received += size
        if category == "update":
            entry.update_bytes_received += vector_bytes
        elif category == "reply":
            entry.reply_bytes_received += vector_bytes

    def snapshot(self, round_index: int) -> dict[int, LedgerEntry]:
        """Copies of the entries of a closed round, zero entries for silent agents."""
        if round_index not in self._closed:
            state = "open" if round_index in self._rounds else "unknown"
            raise LedgerError(f"round {round_index} is {state}; only closed rounds can be read")
        entries = self._rounds[round_index]
        return {a: replace(entries.get(a, LedgerEntry())) for a in sorted(self.agents | set(entries))}
