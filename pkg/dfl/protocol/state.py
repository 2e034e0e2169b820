from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from dfl.config.models import ModelSpec
from dfl.model.mlp import FlatWeights, init_weights
from dfl.model.partition import PartitionError, SubVector, assemble, slice_bounds
from dfl.model.shard import DatasetShard
from dfl.registry.table import PartitionTable


class AgentMode(str, Enum):
    HOLDER = "holder"
    TRAINER_ONLY = "trainer-only"


class PartitionUnavailableError(RuntimeError):
    pass


class HandshakeError(RuntimeError):
    pass


@dataclass
class AgentState:
    id: int
    shard: DatasetShard
    alpha: float
    fixed_epsilon: bool = False
    spec: Optional[ModelSpec] = None  # known once the announcement arrives
    table: Optional[PartitionTable] = None
    round: int = 0
    global_subvectors: dict[int, SubVector] = field(default_factory=dict)
    cache: dict[int, SubVector] = field(default_factory=dict)
    cache_round: dict[int, int] = field(default_factory=dict)
    stale: set[int] = field(default_factory=set)  # cached partitions to refetch before use
    epsilon: dict[int, Optional[float]] = field(default_factory=dict)

    @property
    def held(self) -> tuple[int, ...]:
        if self.table is None:
            return ()
        return self.table.held.get(self.id, ())

    @property
    def mode(self) -> AgentMode:
        return AgentMode.HOLDER if self.held else AgentMode.TRAINER_ONLY

    @property
    def k(self) -> int:
        return self.table.k if self.table is not None else 0

    def bounds(self) -> list[tuple[int, int]]:
        return slice_bounds(self.spec.parameter_count, self.k)

    def reset_model(self) -> None:
        """Start from the initial weights derived from the announced model seed."""
        w0 = init_weights(self.spec)
        held = set(self.held)
        self.global_subvectors = {}
        self.cache = {}
        self.cache_round = {}
        self.epsilon = {}
        for partition, (offset, length) in enumerate(self.bounds(), start=1):
            sub = SubVector(partition, offset, np.array(w0[offset:offset + length]))
            if partition in held:
                self.global_subvectors[partition] = sub
                self.epsilon[partition] = None
            else:
                self.cache[partition] = sub
                self.cache_round[partition] = 0

    def adopt_table(self, table: PartitionTable) -> None:
        """Switch to ``table``; relinquished partitions move to the cache, new ones come from it."""
        before = set(self.held)
        self.table = table
        after = set(self.held)
        for partition in sorted(before - after):
            self.cache[partition] = self.global_subvectors.pop(partition)
            self.cache_round[partition] = self.round
            self.epsilon.pop(partition, None)
        for partition in sorted(after - before):
            sub = self.cache.pop(partition, None)
            self.cache_round.pop(partition, None)
            self.stale.discard(partition)
            if sub is not None:
                self.global_subvectors[partition] = sub
            self.epsilon[partition] = None

    def missing(self) -> list[int]:
        """Non-held partitions that must be fetched before the model can be assembled."""
        held = set(self.held)
        return [
            p for p in range(1, self.k + 1)
            if p not in held and (p not in self.cache or p in self.stale)
        ]

    def load_model(self) -> FlatWeights:
        """Assemble held global sub-vectors with cached remote ones."""
        parts = [self.global_subvectors[p] for p in self.held if p in self.global_subvectors]
        held = set(self.held)
        parts.extend(sub for p, sub in self.cache.items() if p not in held)
        try:
            return assemble(parts, self.spec.parameter_count)
        except PartitionError as e:
            raise PartitionUnavailableError(f"agent {self.id}: {e}") from e

    def epsilon_mean(self) -> Optional[float]:
        values = [e for e in self.epsilon.values() if e is not None]
        return float(np.mean(values)) if values else None
