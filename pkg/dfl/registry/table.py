"""Partition-to-holder registry under the pi/rho constraints.

Every operation is a pure function: it returns a new PartitionTable (or a plan)
and never mutates its input, so every agent replaying the same calls ends up
with the identical table.
"""

from __future__ import annotations
from dataclasses import dataclass, field
import json
import os
import sys
from typing import Optional


class RegistryError(ValueError):
    pass


class NoSuccessorError(RegistryError):
    pass


def _debug(message: str) -> None:
    """Emit debug diagnostics when DFL_DEBUG is enabled."""
    if os.getenv("DFL_DEBUG") == "1":
        print(f"[DEBUG] registry: {message}", file=sys.stderr)


@dataclass(frozen=True)
class PartitionTable:
    k: int
    pi: int
    rho: int
    holders: dict[int, tuple[int, ...]]  # partition -> ascending agent IDs
    held: dict[int, tuple[int, ...]]  # agent -> ascending partition IDs (non-empty only)

    @property
    def agents(self) -> tuple[int, ...]:
        return tuple(sorted(self.held))

    def replication(self, partition: int) -> int:
        return len(self.holders.get(partition, ()))

    def load(self, agent: int) -> int:
        return len(self.held.get(agent, ()))

    def holds(self, agent: int, partition: int) -> bool:
        return partition in self.held.get(agent, ())

    def to_canonical(self) -> str:
        payload = {
            "K": self.k,
            "pi": self.pi,
            "rho": self.rho,
            "holders": {str(p): list(a) for p, a in self.holders.items()},
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_canonical(cls, text: str) -> "PartitionTable":
        try:
            payload = json.loads(text)
            holders = {int(p): tuple(sorted(int(a) for a in agents)) for p, agents in payload["holders"].items()}
            table = _build(int(payload["K"]), int(payload["pi"]), int(payload["rho"]), holders)
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, RegistryError):
                raise
            raise RegistryError(f"malformed partition table: {e}") from e
        table.check_invariants()
        return table

    def check_invariants(self) -> None:
        if set(self.holders) != set(range(1, self.k + 1)):
            raise RegistryError("holders must cover partitions 1..K")
        for partition, agents in self.holders.items():
            if not 1 <= len(agents) <= self.rho:
                raise RegistryError(
                    f"partition {partition} has {len(agents)} holders, allowed 1..{self.rho}"
                )
            for agent in agents:
                if partition not in self.held.get(agent, ()):
                    raise RegistryError(f"holders/held disagree on partition {partition}, agent {agent}")
        for agent, partitions in self.held.items():
            if not partitions:
                raise RegistryError(f"agent {agent} listed with no partitions")
            for partition in partitions:
                if agent not in self.holders.get(partition, ()):
                    raise RegistryError(f"held/holders disagree on agent {agent}, partition {partition}")
        bootstrap_state = len(self.held) == 1 and self.k >= self.pi
        if not bootstrap_state:
            for agent, partitions in self.held.items():
                if len(partitions) < self.pi:
                    raise RegistryError(f"agent {agent} holds {len(partitions)} < pi={self.pi} partitions")


@dataclass(frozen=True)
class Transfer:
    partition: int
    donor: int
    relinquished: bool


@dataclass(frozen=True)
class JoinResult:
    assigned: tuple[int, ...]
    transfers: tuple[Transfer, ...]
    table: PartitionTable

    @property
    def trainer_only(self) -> bool:
        return not self.assigned


@dataclass(frozen=True)
class Reassignment:
    partition: int
    from_agent: int
    to_agent: int


@dataclass(frozen=True)
class HandoffPlan:
    leaver: int
    reassignments: tuple[Reassignment, ...] = field(default_factory=tuple)

    def recipients(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for r in self.reassignments:
            out.setdefault(r.to_agent, []).append(r.partition)
        return {agent: tuple(parts) for agent, parts in sorted(out.items())}


def _build(k: int, pi: int, rho: int, holders: dict[int, tuple[int, ...]]) -> PartitionTable:
    held: dict[int, list[int]] = {}
    for partition in sorted(holders):
        for agent in holders[partition]:
            held.setdefault(agent, []).append(partition)
    return PartitionTable(
        k=k,
        pi=pi,
        rho=rho,
        holders={p: tuple(sorted(holders[p])) for p in sorted(holders)},
        held={a: tuple(held[a]) for a in sorted(held)},
    )


def bootstrap(k: int, pi: int, rho: int, initiator: int) -> PartitionTable:
    """Initial table: the initiator holds every partition."""
    if k < 1:
        raise RegistryError(f"K must be >= 1, got {k}")
    if not 1 <= pi <= k:
        raise RegistryError(f"pi must lie in [1, K={k}], got {pi}")
    if rho < 1:
        raise RegistryError(f"rho must be >= 1, got {rho}")
    return _build(k, pi, rho, {p: (initiator,) for p in range(1, k + 1)})


def join(
    table: PartitionTable,
    newcomer: int,
    storage: Optional[int] = None,
    partition_bytes: int = 0,
) -> JoinResult:
    """Assign partitions to ``newcomer``.

    Repeatedly picks, among the partitions not yet chosen that can still be
    co-held (replication < rho) or relinquished by their most loaded holder
    (holder keeps > pi afterwards), the one with the lowest replication, then
    the most loaded donor, then the highest ID. The donor gives the partition
    away when it can afford to, otherwise both keep it. Fewer than ``pi``
    obtainable partitions (or a storage offer below ``pi`` partitions) leaves
    the table unchanged and the newcomer trainer-only.
    """
    if newcomer in table.held:
        raise RegistryError(f"agent {newcomer} already joined")
    empty = JoinResult(assigned=(), transfers=(), table=table)
    if storage is not None and storage < table.pi * partition_bytes:
        _debug(f"agent {newcomer} offers {storage} bytes < {table.pi}x{partition_bytes}; trainer-only")
        return empty

    holders = {p: list(a) for p, a in table.holders.items()}
    held = {a: list(p) for a, p in table.held.items()}
    chosen: list[int] = []
    transfers: list[Transfer] = []

    while len(chosen) < table.pi:
        best: Optional[tuple[tuple[int, int, int], int, int, bool]] = None
        for partition in range(1, table.k + 1):
            if partition in chosen:
                continue
            current = holders[partition]
            donor = max(current, key=lambda a: (len(held[a]), -a))
            can_relinquish = len(held[donor]) > table.pi
            if not can_relinquish and len(current) >= table.rho:
                continue
            rank = (len(current), -len(held[donor]), -partition)
            if best is None or rank < best[0]:
                best = (rank, partition, donor, can_relinquish)
        if best is None:
            break
        _, partition, donor, relinquish = best
        if relinquish:
            holders[partition].remove(donor)
            held[donor].remove(partition)
        holders[partition].append(newcomer)
        held.setdefault(newcomer, []).append(partition)
        chosen.append(partition)
        transfers.append(Transfer(partition=partition, donor=donor, relinquished=relinquish))

    if len(chosen) < table.pi:
        _debug(f"agent {newcomer} could obtain {len(chosen)} < pi={table.pi} partitions; trainer-only")
        return empty

    new_table = _build(table.k, table.pi, table.rho, {p: tuple(a) for p, a in holders.items()})
    _debug(f"agent {newcomer} joined with {sorted(chosen)}")
    return JoinResult(assigned=tuple(sorted(chosen)), transfers=tuple(transfers), table=new_table)


def lookup(table: PartitionTable, partition: int) -> tuple[int, ...]:
    if partition not in table.holders:
        raise RegistryError(f"unknown partition {partition}; valid range is 1..{table.k}")
    return table.holders[partition]


def plan_leave(table: PartitionTable, leaver: int) -> HandoffPlan:
    """Hand every partition held only by ``leaver`` to the least loaded remaining agent."""
    if leaver not in table.held:
        raise RegistryError(f"unknown agent {leaver}")
    loads = {a: len(p) for a, p in table.held.items() if a != leaver}
    reassignments = []
    for partition in table.held[leaver]:
        if len(table.holders[partition]) > 1:
            continue
        if not loads:
            raise NoSuccessorError(f"no successor for partition {partition}: agent {leaver} is the last holder")
        successor = min(loads, key=lambda a: (loads[a], a))
        loads[successor] += 1
        reassignments.append(Reassignment(partition=partition, from_agent=leaver, to_agent=successor))
    return HandoffPlan(leaver=leaver, reassignments=tuple(reassignments))


def apply_leave(table: PartitionTable, plan: HandoffPlan) -> PartitionTable:
    """Remove the leaver and apply the plan's reassignments."""
    if plan.leaver not in table.held:
        raise RegistryError(f"unknown agent {plan.leaver}")
    holders = {p: [a for a in agents if a != plan.leaver] for p, agents in table.holders.items()}
    for r in plan.reassignments:
        if r.to_agent not in holders[r.partition]:
            holders[r.partition].append(r.to_agent)
    new_table = _build(table.k, table.pi, table.rho, {p: tuple(a) for p, a in holders.items()})
    new_table.check_invariants()
    return new_table
