from __future__ import annotations
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class ProtocolEvent:
    round: int
    agent: int
    kind: str  # e.g. "late-update", "update-timeout", "handoff"
    detail: str = ""
    time: int = 0  # simulated microseconds


@dataclass
class ProtocolLog:
    """In-memory record of noteworthy protocol events, shared by all agents of one run."""

    events: list[ProtocolEvent] = field(default_factory=list)

    def record(self, round_index: int, agent: int, kind: str, detail: str = "", time: int = 0) -> None:
        self.events.append(ProtocolEvent(round=round_index, agent=agent, kind=kind, detail=detail, time=time))

    def for_round(self, round_index: int, agent: Optional[int] = None) -> list[ProtocolEvent]:
        return [
            e for e in self.events
            if e.round == round_index and (agent is None or e.agent == agent)
        ]

    def kinds(self, kind: str) -> list[ProtocolEvent]:
        return [e for e in self.events if e.kind == kind]

    def summary(self, round_index: int, agent: Optional[int] = None) -> str:
        """Compact ``kind:count`` tags joined by ``;`` in first-seen order."""
        counts = Counter(e.kind for e in self.for_round(round_index, agent))
        return ";".join(f"{kind}:{n}" for kind, n in counts.items())
