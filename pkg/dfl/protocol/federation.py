"""Wires agents into one simulator and drives the round schedule of a scenario."""

from __future__ import annotations
from dataclasses import dataclass, field
import os
import sys
from typing import Optional

from dfl.config.models import ScenarioConfig, SyncMode
from dfl.data.loader import FederatedDataset
from dfl.log.protocol import ProtocolLog
from dfl.model.mlp import FlatWeights, evaluate
from dfl.netsim.ledger import LedgerEntry, TrafficLedger
from dfl.netsim.simulator import Simulator, ms_to_us
from dfl.protocol.agent import Agent
from dfl.protocol.state import HandshakeError
from dfl.registry.table import PartitionTable

INITIATOR = 1


def _debug(message: str) -> None:
    """Emit debug diagnostics when DFL_DEBUG is enabled."""
    if os.getenv("DFL_DEBUG") == "1":
        print(f"[DEBUG] protocol.federation: {message}", file=sys.stderr)


@dataclass
class AgentView:
    agent: int
    accuracy: float
    loss: float
    epsilon_mean: Optional[float]


@dataclass
class RoundReport:
    round: int
    observer: int
    accuracy: float
    loss: float
    traffic: dict[int, LedgerEntry]
    epsilon_mean: Optional[float]
    events: list[str] = field(default_factory=list)
    views: list[AgentView] = field(default_factory=list)

    @property
    def bytes_sent(self) -> int:
        return sum(e.bytes_sent for e in self.traffic.values())

    @property
    def bytes_received(self) -> int:
        return sum(e.bytes_received for e in self.traffic.values())


class Federation:
    def __init__(self, cfg: ScenarioConfig, data: FederatedDataset) -> None:
        if len(data.shards) != cfg.agents:
            raise ValueError(f"{len(data.shards)} shards for {cfg.agents} agents")
        self.cfg = cfg
        self.data = data
        self.log = ProtocolLog()
        self.ledger = TrafficLedger()
        self.sim = Simulator(cfg.net, self.ledger)
        self.agents: dict[int, Agent] = {
            shard.owner: Agent(shard.owner, shard, cfg, self.sim, self.log, initiator=INITIATOR)
            for shard in data.shards
        }
        self.round = 0
        self._round_us = ms_to_us(cfg.round_timeout)

    # membership

    def initialize(self) -> PartitionTable:
        """Run the handshake to completion; round 0 traffic is the handshake traffic."""
        self.ledger.open_round(0)
        for agent in self.agents.values():
            self.sim.register(agent)
        for agent_id in sorted(self.agents):
            if agent_id != INITIATOR:
                self.agents[agent_id].start()
        self.agents[INITIATOR].start()
        self.sim.run_until_idle()
        self.ledger.close_round(0)

        initiator = self.agents[INITIATOR]
        if not initiator.initialized:
            raise HandshakeError("initiator never completed the handshake")
        for agent in self.agents.values():
            if not agent.initialized:
                self.log.record(0, agent.id, "handshake-abort", "agent excluded from the run")
        _debug(f"table after handshake: {initiator.table.to_canonical()}")
        return initiator.table

    @property
    def active(self) -> list[Agent]:
        return [a for _, a in sorted(self.agents.items()) if a.initialized and not a.departed]

    def observer(self) -> Agent:
        """The initiator, or the lowest-ID remaining agent once it has left."""
        initiator = self.agents[INITIATOR]
        if initiator.initialized and not initiator.departed:
            return initiator
        remaining = self.active
        if not remaining:
            raise HandshakeError("no agent left to observe")
        return remaining[0]

    def global_model(self) -> FlatWeights:
        return self.observer().load_model()

    # rounds

    def _apply_schedules(self, round_index: int) -> list[str]:
        tags = []
        for leave in self.cfg.leaves:
            if leave.round == round_index and leave.agent in self.agents:
                self.agents[leave.agent].terminate(round_index)
                tags.append(f"leave:{leave.agent}")
        for window in self.cfg.net.disconnects:
            agent = self.agents.get(window.agent)
            if agent is None or agent.departed:
                continue
            if window.to_round + 1 == round_index:
                agent.reconnect(window.memory, round_index)
                tags.append(f"reconnect:{window.agent}")
            if window.from_round == round_index:
                agent.disconnect(round_index)
                tags.append(f"disconnect:{window.agent}")
        return tags

    def run_round(self, round_index: int) -> RoundReport:
        self.round = round_index
        self.ledger.open_round(round_index)
        tags = self._apply_schedules(round_index)
        start = max(self.sim.now, round_index * self._round_us)
        self.sim.advance_to(start)

        if self.cfg.sync_mode is SyncMode.SYNCHRONOUS:
            for agent in self.active:
                agent.run_round(round_index)
            self.sim.run_until_quiescent()
            for agent in self.active:
                agent.publish_sync(round_index)
            self.sim.run_until_quiescent()
            for agent in self.active:
                agent.close_round(round_index)
            self.sim.run_until_quiescent()
            self.sim.run_until(max(self.sim.now, start + self._round_us - 1))
        else:
            sync_at = start + int(self.cfg.sync_fraction * self._round_us)
            close_at = start + int(self.cfg.close_fraction * self._round_us)
            for agent in self.active:
                agent.run_round(round_index)
            self.sim.call_at(sync_at, lambda: [a.publish_sync(round_index) for a in self.active])
            self.sim.call_at(close_at, lambda: [a.close_round(round_index) for a in self.active])
            self.sim.run_until(start + self._round_us - 1)

        self.ledger.close_round(round_index)
        return self.report(round_index, tags)

    def report(self, round_index: int, tags: Optional[list[str]] = None) -> RoundReport:
        """Evaluate the observer's assembled model on the evaluation shard."""
        observer = self.observer()
        spec = self.cfg.model
        loss, accuracy = evaluate(spec, observer.load_model(), self.data.eval)
        eps = [e for a in self.active if (e := a.state.epsilon_mean()) is not None]
        events = list(tags or [])
        if summary := self.log.summary(round_index):
            events.append(summary)

        views = []
        if self.cfg.per_agent_metrics:
            for agent in self.active:
                a_loss, a_acc = evaluate(spec, agent.load_model(), self.data.eval)
                views.append(AgentView(agent.id, a_acc, a_loss, agent.state.epsilon_mean()))

        return RoundReport(
            round=round_index,
            observer=observer.id,
            accuracy=accuracy,
            loss=loss,
            traffic=self.ledger.snapshot(round_index),
            epsilon_mean=sum(eps) / len(eps) if eps else None,
            events=events,
            views=views,
        )
