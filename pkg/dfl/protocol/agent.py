"""Event-driven agent: handshake, round loop, aggregation, replica sync and handoff.

An agent never blocks. The federation (or a test) calls ``start``,
``run_round``, ``publish_sync``, ``close_round``, ``terminate``, ``disconnect``
and ``reconnect``; everything else happens in ``on_message`` / ``on_timeout``
callbacks driven by the simulator.
"""

from __future__ import annotations
from dataclasses import dataclass
import os
import sys
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from dfl.config.models import ModelSpec, ScenarioConfig
from dfl.log.protocol import ProtocolLog
from dfl.model.mlp import FlatWeights, derive_train_config, sgd_fit
from dfl.model.partition import SubVector, slice_bounds
from dfl.model.shard import DatasetShard
from dfl.netsim.simulator import Envelope, Simulator
from dfl.protocol.aggregation import compute_delta, mean_values, next_epsilon, sum_contributions
from dfl.protocol.messages import (
    MEMBERSHIP_TOPIC,
    Announce,
    CodecError,
    FetchRequest,
    HandoffMessage,
    JoinOffer,
    Message,
    ReplicaSyncMessage,
    ReplyMessage,
    TableMessage,
    TableRequest,
    UpdateMessage,
    decode,
    partition_topic,
    vector_from_bytes,
    vector_to_bytes,
)
from dfl.protocol.state import AgentState
from dfl.registry.table import (
    HandoffPlan,
    NoSuccessorError,
    PartitionTable,
    Reassignment,
    RegistryError,
    apply_leave,
    bootstrap,
    join,
    lookup,
    plan_leave,
)


def _debug(message: str) -> None:
    """Emit debug diagnostics when DFL_DEBUG is enabled."""
    if os.getenv("DFL_DEBUG") == "1":
        print(f"[DEBUG] protocol.agent: {message}", file=sys.stderr)


def _category(msg: Message) -> Optional[str]:
    if isinstance(msg, UpdateMessage):
        return "update"
    if isinstance(msg, ReplyMessage):
        return "reply"
    return None


@dataclass
class _Outstanding:
    partition: int
    delta: NDArray[np.float64]
    round: int
    holder: int


class Agent:
    def __init__(
        self,
        agent_id: int,
        shard: DatasetShard,
        cfg: ScenarioConfig,
        sim: Simulator,
        log: ProtocolLog,
        initiator: int = 1,
    ) -> None:
        self.id = agent_id
        self.cfg = cfg
        self.sim = sim
        self.log = log
        self.initiator = initiator
        self.state = AgentState(id=agent_id, shard=shard, alpha=cfg.alpha, fixed_epsilon=cfg.fixed_epsilon)
        self.roster: tuple[int, ...] = ()
        self.initialized = False
        self.aborted = False
        self.departed = False
        self.rounds_trained = 0

        self._offers: list[JoinOffer] = []
        self._handshake_open = False
        self._table_attempts = 0
        self._pending: dict[int, dict[int, NDArray[np.float64]]] = {}
        self._carry: dict[int, dict[int, NDArray[np.float64]]] = {}
        self._sync_values: dict[int, dict[int, NDArray[np.float64]]] = {}
        self._deferred: list[tuple[Envelope, int]] = []
        self._closed_round = -1
        self._outstanding: dict[int, _Outstanding] = {}
        self._fetches: dict[int, tuple[int, int]] = {}  # request seq -> (partition, holder)
        self._fetch_attempts: dict[int, int] = {}
        self._awaiting: set[int] = set()
        self._fetch_failed = False
        self._train_round: Optional[int] = None
        self._suspected: dict[int, int] = {}  # holder -> round the suspicion expires
        self._handoffs: list[HandoffMessage] = []  # applied departures, served with the table
        self._resyncing = False
        self._resync_seq: Optional[int] = None
        self._resync_attempts = 0

    # helpers

    @property
    def is_initiator(self) -> bool:
        return self.id == self.initiator

    @property
    def online(self) -> bool:
        return self.initialized and not self.departed and self.sim.is_online(self.id)

    @property
    def table(self) -> Optional[PartitionTable]:
        return self.state.table

    def _record(self, kind: str, detail: str = "", round_index: Optional[int] = None) -> None:
        round_index = self.state.round if round_index is None else round_index
        self.log.record(round_index, self.id, kind, detail, self.sim.now)
        _debug(f"agent {self.id} round {round_index}: {kind} {detail}".rstrip())

    def _send(self, dst: int, msg: Message) -> Optional[Envelope]:
        return self.sim.send(self.id, dst, msg.encode(), msg.kind.label, _category(msg), msg.vector_bytes)

    def _request(self, dst: int, msg: Message, timeout_ms: float) -> Optional[Envelope]:
        return self.sim.request(
            self.id, dst, msg.encode(), msg.kind.label, timeout_ms, _category(msg), msg.vector_bytes
        )

    def _reply(self, request: Envelope, msg: Message) -> Optional[Envelope]:
        return self.sim.reply(request, self.id, msg.encode(), msg.kind.label, _category(msg), msg.vector_bytes)

    def _publish(self, topic: str, msg: Message) -> None:
        self.sim.publish(self.id, topic, msg.encode(), msg.kind.label, _category(msg), msg.vector_bytes)

    def _sync_topics(self) -> None:
        held = set(self.state.held)
        for partition in range(1, self.state.k + 1):
            if partition in held:
                self.sim.subscribe(self.id, partition_topic(partition))
            else:
                self.sim.unsubscribe(self.id, partition_topic(partition))

    def _suspect(self, holder: int) -> None:
        self._suspected[holder] = self.state.round + self.cfg.suspicion_rounds

    def _clear_suspicion(self, agent: int) -> None:
        self._suspected.pop(agent, None)

    def _choose_holder(self, partition: int) -> Optional[int]:
        """Least loaded non-suspected holder, lowest ID on ties.

        When every holder is suspected the suspected ones are tried anyway.
        """
        table = self.state.table
        holders = [a for a in lookup(table, partition) if a != self.id]
        candidates = [a for a in holders if a not in self._suspected] or holders
        if not candidates:
            return None
        return min(candidates, key=lambda a: (table.load(a), a))

    def _partition_bytes(self) -> int:
        return 8 * max(length for _, length in slice_bounds(self.cfg.model.parameter_count, self.cfg.k))

    # handshake

    def start(self) -> None:
        """Begin the membership handshake (announce as initiator, listen as joiner)."""
        self.sim.subscribe(self.id, MEMBERSHIP_TOPIC)
        if not self.is_initiator:
            return
        self.state.spec = self.cfg.model
        self.state.table = bootstrap(self.cfg.k, self.cfg.pi, self.cfg.rho, self.id)
        self.state.reset_model()
        self.roster = (self.id,)
        self._sync_topics()
        self._handshake_open = True
        self._publish(MEMBERSHIP_TOPIC, Announce(
            initiator=self.id,
            model=self.cfg.model.model_dump(mode="json"),
            k=self.cfg.k,
            pi=self.cfg.pi,
            rho=self.cfg.rho,
        ))
        self.sim.call_later(self.cfg.join_timeout, self._finish_handshake, owner=self.id)

    def _admit(self, offer: JoinOffer) -> None:
        if offer.agent in self.roster:
            return
        result = join(self.state.table, offer.agent, offer.storage, self._partition_bytes())
        self.state.adopt_table(result.table)
        self.roster = tuple(sorted(self.roster + (offer.agent,)))
        kind = "trainer-only" if result.trainer_only else "join"
        self._record(kind, f"agent={offer.agent} assigned={list(result.assigned)}")

    def _table_message(self) -> TableMessage:
        return TableMessage(
            table=self.state.table.to_canonical(),
            roster=self.roster,
            handoffs=tuple(self._handoffs),
        )

    def _broadcast_table(self) -> None:
        self._sync_topics()
        self._publish(MEMBERSHIP_TOPIC, self._table_message())

    def _finish_handshake(self) -> None:
        self._handshake_open = False
        if not self._offers:
            self._record("solo", "no responders; proceeding alone")
        for offer in self._offers:
            self._admit(offer)
        self._offers = []
        self.initialized = True
        self._broadcast_table()

    def _on_announce(self, msg: Announce) -> None:
        if self.initialized or self.is_initiator:
            return
        self.initiator = msg.initiator
        self.state.spec = ModelSpec.model_validate(msg.model)
        self._send(self.initiator, JoinOffer(agent=self.id, storage=self.cfg.storage.get(self.id)))
        self.sim.call_later(2 * self.cfg.join_timeout, self._check_table, owner=self.id)

    def _check_table(self) -> None:
        if self.initialized or self.departed:
            return
        if self._table_attempts >= self.cfg.table_retries:
            self.aborted = True
            self._record("handshake-abort", f"no table after {self._table_attempts} retries")
            self.departed = True
            self.sim.remove(self.id)
            return
        self._table_attempts += 1
        self._send(self.initiator, JoinOffer(agent=self.id, storage=self.cfg.storage.get(self.id)))
        self._request(self.initiator, TableRequest(agent=self.id), self.cfg.join_timeout)

    def _on_table(self, msg: TableMessage) -> None:
        if self.is_initiator:
            return
        if self.id not in msg.roster and not self.initialized:
            return
        table = PartitionTable.from_canonical(msg.table)
        if not self.initialized:
            self.state.table = table
            self.state.reset_model()
            self.initialized = True
            self._handoffs = list(msg.handoffs)
            self._record("table", f"held={list(self.state.held)}")
        else:
            self._replay_handoffs(msg.handoffs)
            self.state.adopt_table(table)
        self.roster = msg.roster
        self._sync_topics()

    def _on_join_offer(self, msg: JoinOffer) -> None:
        if not self.is_initiator:
            return
        if self._handshake_open:
            if all(o.agent != msg.agent for o in self._offers):
                self._offers.append(msg)
            return
        if msg.agent in self.roster:
            return
        self._record("late-join", f"agent={msg.agent}")
        self._admit(msg)
        self._broadcast_table()

    # round loop

    def run_round(self, round_index: int) -> None:
        """Load the model (fetching what is missing), train locally and submit the deltas."""
        if not self.online:
            return
        self.state.round = round_index
        self._suspected = {a: until for a, until in self._suspected.items() if until > round_index}
        self._pending = self._carry
        self._carry = {}
        self._sync_values = {}
        self._fetch_failed = False
        self._train_round = round_index
        if self._resyncing:
            # training starts once the refreshed table arrives
            return
        self._begin_training()

    def _begin_training(self) -> None:
        missing = self.state.missing()
        self._fetch_attempts = {p: 0 for p in missing}
        self._awaiting.update(missing)
        for partition in missing:
            self._fetch(partition)
        self._maybe_train()

    def load_model(self) -> FlatWeights:
        return self.state.load_model()

    def _fetch(self, partition: int) -> None:
        table = self.state.table
        others = [a for a in lookup(table, partition) if a != self.id]
        ranked = sorted(others, key=lambda a: (a in self._suspected, table.load(a), a))
        attempt = self._fetch_attempts.get(partition, 0)
        if not ranked or attempt >= self.cfg.fetch_retries:
            self._record("partition-unavailable", f"partition={partition}")
            self._fetch_failed = True
            self._awaiting.discard(partition)
            self._maybe_train()
            return
        holder = ranked[attempt % len(ranked)]
        self._fetch_attempts[partition] = attempt + 1
        env = self._request(holder, FetchRequest(self.id, self.state.round, partition), self.cfg.fetch_timeout)
        if env is not None:
            self._fetches[env.seq] = (partition, holder)

    def _maybe_train(self) -> None:
        if self._awaiting or self._train_round is None or self._train_round != self.state.round:
            return
        round_index, self._train_round = self._train_round, None
        if self._fetch_failed:
            self._record("skip-training", "model could not be assembled")
            return
        self._train(round_index)

    def _train(self, round_index: int) -> None:
        spec = self.state.spec
        w_before = self.state.load_model()
        cfg = derive_train_config(self.cfg.train, self.id, round_index)
        w_after = sgd_fit(spec, w_before, self.state.shard, cfg)
        self.rounds_trained += 1
        self.update_model(compute_delta(w_before, w_after, self.state.k), round_index)

    def update_model(self, deltas: list[SubVector], round_index: int) -> None:
        """Keep the deltas of held partitions, send the rest to one holder each."""
        held = set(self.state.held)
        for sub in deltas:
            if sub.partition_id in held:
                self._pending.setdefault(sub.partition_id, {})[self.id] = sub.values
            else:
                self._send_update(sub.partition_id, sub.values, round_index)

    def _send_update(self, partition: int, delta: NDArray[np.float64], round_index: int) -> None:
        holder = self._choose_holder(partition)
        if holder is None:
            self._record("partition-unavailable", f"partition={partition} update dropped")
            return
        msg = UpdateMessage(sender=self.id, round=round_index, partition_id=partition, delta=delta)
        env = self._request(holder, msg, self.cfg.round_timeout)
        if env is not None:
            self._outstanding[env.seq] = _Outstanding(partition, delta, round_index, holder)

    def publish_sync(self, round_index: int) -> None:
        """Share this round's received contributions with the co-holders of each held partition."""
        if not self.online or self.state.round != round_index:
            return
        for partition in self.state.held:
            if self.state.table.replication(partition) < 2:
                continue
            contributions = tuple(sorted(self._pending.get(partition, {}).items()))
            self._publish(partition_topic(partition), ReplicaSyncMessage(
                origin=self.id,
                partition_id=partition,
                round=round_index,
                contributions=contributions,
                values=self.state.global_subvectors[partition].values,
            ))

    def replica_sync(self, msg: ReplicaSyncMessage) -> None:
        partition = msg.partition_id
        if partition not in self.state.held:
            self._record("sync-ignored", f"partition={partition} origin={msg.origin} not held")
            return
        if msg.round != self.state.round or self._closed_round >= self.state.round:
            self._record("late-sync", f"partition={partition} origin={msg.origin} round={msg.round}")
            return
        pending = self._pending.setdefault(partition, {})
        for submitter, delta in msg.contributions:
            pending.setdefault(submitter, delta)
        if msg.values is not None:
            self._sync_values.setdefault(partition, {})[msg.origin] = msg.values

    def aggregate(self, partition: int, received: dict[int, NDArray[np.float64]]) -> None:
        """Apply w_k -= eps * sum(deltas) after updating eps for ``len(received)`` submitters."""
        if not received:
            return
        eps = next_epsilon(self.state.epsilon.get(partition), len(received), self.state.alpha, self.state.fixed_epsilon)
        self.state.epsilon[partition] = eps
        current = self.state.global_subvectors[partition]
        values = current.values - eps * sum_contributions(received)
        self.state.global_subvectors[partition] = SubVector(partition, current.offset, values)

    def close_round(self, round_index: int) -> None:
        """Repair diverged replicas, aggregate every held partition and answer deferred updates."""
        if not self.online or self.state.round != round_index or self._closed_round >= round_index:
            return
        self._closed_round = round_index
        for partition in self.state.held:
            current = self.state.global_subvectors[partition]
            others = self._sync_values.get(partition, {})
            if any(not np.array_equal(v, current.values) for v in others.values()):
                repaired = mean_values({**others, self.id: current.values})
                self.state.global_subvectors[partition] = SubVector(partition, current.offset, repaired)
                self._record("value-repair", f"partition={partition} holders={len(others) + 1}")
            self.aggregate(partition, self._pending.get(partition, {}))
        self._pending = {}
        self._sync_values = {}
        for request, partition in self._deferred:
            self._answer(request, partition)
        self._deferred = []

    def _answer(self, request: Envelope, partition: int) -> None:
        sub = self.state.global_subvectors.get(partition)
        if sub is None:
            return
        self._reply(request, ReplyMessage(self.id, self.state.round, partition, sub.values))

    # message handlers

    def on_message(self, env: Envelope) -> None:
        if self.departed:
            return
        try:
            msg = decode(env.payload)
        except CodecError as e:
            self._record("bad-message", f"from={env.src}: {e}")
            return
        self._clear_suspicion(env.src)

        if isinstance(msg, Announce):
            self._on_announce(msg)
        elif isinstance(msg, JoinOffer):
            self._on_join_offer(msg)
        elif isinstance(msg, TableMessage):
            if self._resyncing and env.reply_to is not None and env.reply_to == self._resync_seq:
                self._on_resync(msg)
            else:
                self._on_table(msg)
        elif isinstance(msg, TableRequest):
            # any initialized agent serves its view; a joiner only asks the initiator
            if self.initialized and not self._resyncing:
                self._reply(env, self._table_message())
        elif not self.initialized:
            return
        elif isinstance(msg, UpdateMessage):
            self._on_update(env, msg)
        elif isinstance(msg, ReplyMessage):
            self._on_reply(env, msg)
        elif isinstance(msg, FetchRequest):
            self._on_fetch(env, msg)
        elif isinstance(msg, ReplicaSyncMessage):
            self.replica_sync(msg)
        elif isinstance(msg, HandoffMessage):
            self._on_handoff(msg)

    def _on_update(self, env: Envelope, msg: UpdateMessage) -> None:
        partition = msg.partition_id
        if partition not in self.state.held:
            self._record("update-ignored", f"partition={partition} sender={msg.sender} not held")
            return
        expected = slice_bounds(self.state.spec.parameter_count, self.state.k)[partition - 1][1]
        if len(msg.delta) != expected:
            self._record(
                "bad-update",
                f"partition={partition} sender={msg.sender} length={len(msg.delta)} expected={expected}",
            )
            return
        late = msg.round < self.state.round or self._closed_round >= self.state.round
        if late:
            carry = self._carry.setdefault(partition, {})
            if msg.sender in carry:
                carry[msg.sender] = carry[msg.sender] + msg.delta
            else:
                carry[msg.sender] = msg.delta
            self._record("late-update", f"partition={partition} sender={msg.sender} round={msg.round}")
            self._answer(env, partition)
            return
        self._pending.setdefault(partition, {}).setdefault(msg.sender, msg.delta)
        self._deferred.append((env, partition))

    def _store_cache(self, partition: int, values: NDArray[np.float64], round_index: int) -> None:
        if partition in self.state.held:
            return
        if round_index < self.state.cache_round.get(partition, -1):
            return
        offset = slice_bounds(self.state.spec.parameter_count, self.state.k)[partition - 1][0]
        self.state.cache[partition] = SubVector(partition, offset, values)
        self.state.cache_round[partition] = round_index
        self.state.stale.discard(partition)

    def _on_reply(self, env: Envelope, msg: ReplyMessage) -> None:
        self._store_cache(msg.partition_id, msg.values, msg.round)
        if env.reply_to is None:
            return
        self._outstanding.pop(env.reply_to, None)
        fetch = self._fetches.pop(env.reply_to, None)
        if fetch is not None:
            self._awaiting.discard(fetch[0])
            self._maybe_train()

    def _on_fetch(self, env: Envelope, msg: FetchRequest) -> None:
        if msg.partition_id not in self.state.held:
            self._record("fetch-ignored", f"partition={msg.partition_id} requester={msg.requester}")
            return
        self._answer(env, msg.partition_id)

    def on_timeout(self, request: Envelope) -> None:
        if self.departed:
            return
        outstanding = self._outstanding.pop(request.seq, None)
        if outstanding is not None:
            self._suspect(outstanding.holder)
            self._record("update-timeout", f"partition={outstanding.partition} holder={outstanding.holder}")
            return
        fetch = self._fetches.pop(request.seq, None)
        if fetch is not None:
            partition, holder = fetch
            self._suspect(holder)
            self._record("fetch-timeout", f"partition={partition} holder={holder}")
            self._fetch(partition)
            return
        if request.kind == TableRequest.kind.label:
            if self._resyncing and request.seq == self._resync_seq:
                self._record("resync-timeout", f"peer={request.dst}")
                self._request_resync()
            else:
                self._check_table()

    # departures

    def terminate(self, round_index: Optional[int] = None) -> Optional[HandoffPlan]:
        """Leave for good, handing solely held partitions to their successors.

        Returns the plan, or None for trainer-only agents and for the last
        holder, whose model is persisted to the blob store instead.
        """
        if self.departed:
            return None
        table = self.state.table
        if table is None or self.id not in table.held:
            self._publish(MEMBERSHIP_TOPIC, HandoffMessage(leaver=self.id))
            self._record("leave", "trainer-only", round_index)
            self._depart()
            return None
        try:
            plan = plan_leave(table, self.id)
        except NoSuccessorError:
            digest = self.sim.blobs.put(vector_to_bytes(self.state.load_model()))
            self._record("model-persisted", digest, round_index)
            self._depart()
            return None
        blobs = {
            r.partition: self.sim.blobs.put(vector_to_bytes(self.state.global_subvectors[r.partition].values))
            for r in plan.reassignments
        }
        self._publish(MEMBERSHIP_TOPIC, HandoffMessage(
            leaver=self.id,
            reassignments=tuple((r.partition, r.from_agent, r.to_agent) for r in plan.reassignments),
            blobs=blobs,
        ))
        self._record("leave", f"reassigned={[r.partition for r in plan.reassignments]}", round_index)
        self._depart()
        return plan

    def _depart(self) -> None:
        self.departed = True
        self.sim.remove(self.id)

    def _replay_handoffs(self, handoffs: tuple[HandoffMessage, ...]) -> None:
        for msg in handoffs:
            self._on_handoff(msg)

    def _on_handoff(self, msg: HandoffMessage) -> None:
        if any(h.leaver == msg.leaver for h in self._handoffs):
            return
        self._handoffs.append(msg)
        self.roster = tuple(a for a in self.roster if a != msg.leaver)
        self._suspected.pop(msg.leaver, None)
        table = self.state.table
        if msg.leaver in table.held:
            plan = HandoffPlan(
                leaver=msg.leaver,
                reassignments=tuple(Reassignment(*r) for r in msg.reassignments),
            )
            before = {p: s.values for p, s in self.state.global_subvectors.items()}
            try:
                after = apply_leave(table, plan)
            except RegistryError as e:
                self._record("handoff-skipped", f"leaver={msg.leaver}: {e}")
                return
            self.state.adopt_table(after)
            offsets = slice_bounds(self.state.spec.parameter_count, self.state.k)
            for r in plan.reassignments:
                if r.to_agent != self.id:
                    continue
                downloaded = vector_from_bytes(self.sim.blobs.get(msg.blobs[r.partition]))
                if r.partition in before:
                    merged = mean_values({msg.leaver: downloaded, self.id: before[r.partition]})
                else:
                    merged = downloaded
                offset = offsets[r.partition - 1][0]
                self.state.global_subvectors[r.partition] = SubVector(r.partition, offset, merged)
                self.state.epsilon[r.partition] = None
                self._record("handoff", f"partition={r.partition} from={msg.leaver}")
            self._sync_topics()
        for seq, outstanding in sorted(self._outstanding.items()):
            if outstanding.holder != msg.leaver:
                continue
            del self._outstanding[seq]
            self._record("update-redelivered", f"partition={outstanding.partition}")
            if outstanding.partition in self.state.held:
                self._pending.setdefault(outstanding.partition, {}).setdefault(self.id, outstanding.delta)
            else:
                self._send_update(outstanding.partition, outstanding.delta, outstanding.round)

    # connectivity

    def disconnect(self, round_index: Optional[int] = None) -> None:
        self.sim.set_offline(self.id, True)
        self._record("disconnect", round_index=round_index)

    def reconnect(self, with_memory: bool = True, round_index: Optional[int] = None) -> None:
        """Come back online; memoryless agents restart from the initial model.

        Either way the agent asks a peer for the current table and the
        handoffs it missed, and every non-held partition is refetched before
        the next training step.
        """
        self.sim.set_offline(self.id, False)
        self._pending = {}
        self._carry = {}
        self._sync_values = {}
        self._deferred = []
        self._outstanding = {}
        self._fetches = {}
        self._awaiting = set()
        self._train_round = None
        self._suspected = {}
        if not with_memory:
            self.state.reset_model()
        held = set(self.state.held)
        self.state.stale = {p for p in range(1, self.state.k + 1) if p not in held}
        self._record("reconnect", "with-memory" if with_memory else "memoryless", round_index)
        if not self.initialized:
            return
        self._resyncing = True
        self._resync_attempts = 0
        self._request_resync()

    def _resync_peers(self) -> list[int]:
        """Initiator first, then the rest of the roster in ID order."""
        order = [self.initiator] + [a for a in self.roster if a != self.initiator]
        return [a for a in order if a != self.id]

    def _request_resync(self) -> None:
        peers = self._resync_peers()
        while peers and self._resync_attempts <= self.cfg.table_retries:
            peer = peers[self._resync_attempts % len(peers)]
            self._resync_attempts += 1
            env = self._request(peer, TableRequest(agent=self.id), self.cfg.join_timeout)
            if env is not None:
                self._resync_seq = env.seq
                return
        if peers:
            self._record("resync-failed", f"no table after {self._resync_attempts} attempts; keeping own view")
        self._finish_resync()

    def _on_resync(self, msg: TableMessage) -> None:
        self._resync_seq = None
        self._replay_handoffs(msg.handoffs)
        self.state.adopt_table(PartitionTable.from_canonical(msg.table))
        self.roster = msg.roster
        self._sync_topics()
        self._record("resync", f"held={list(self.state.held)}")
        self._finish_resync()

    def _finish_resync(self) -> None:
        self._resyncing = False
        self._resync_seq = None
        if self._train_round is not None and self._train_round == self.state.round:
            self._begin_training()
