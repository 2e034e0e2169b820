"""Server-orchestrated federated averaging over the same shards and seeds."""

from __future__ import annotations
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from dfl.config.models import ModelSpec, TrainConfig
from dfl.model.mlp import FlatWeights, derive_train_config, evaluate, init_weights, sgd_fit
from dfl.model.shard import DatasetShard


@dataclass(frozen=True)
class CentralRoundRecord:
    round: int
    global_weights: FlatWeights
    accuracy: float
    loss: float


def central_round(
    spec: ModelSpec,
    w: FlatWeights,
    shards: Sequence[DatasetShard],
    train: TrainConfig,
    round_index: int,
) -> FlatWeights:
    """Every shard owner fits from ``w``; the new model is the unweighted mean, summed by owner ID."""
    if not shards:
        raise ValueError("no shards to train on")
    total: Optional[FlatWeights] = None
    for shard in sorted(shards, key=lambda s: s.owner):
        local = sgd_fit(spec, w, shard, derive_train_config(train, shard.owner, round_index))
        total = local if total is None else total + local
    return total / len(shards)


def central_train(
    spec: ModelSpec,
    shards: Sequence[DatasetShard],
    train: TrainConfig,
    rounds: int,
    eval_shard: DatasetShard,
    w0: Optional[FlatWeights] = None,
) -> list[CentralRoundRecord]:
    """Records for rounds 0..rounds; round 0 is the initial model."""
    w = init_weights(spec) if w0 is None else np.array(w0, dtype=np.float64, copy=True)
    loss, accuracy = evaluate(spec, w, eval_shard)
    records = [CentralRoundRecord(0, w, accuracy, loss)]
    for round_index in range(1, rounds + 1):
        w = central_round(spec, w, shards, train, round_index)
        loss, accuracy = evaluate(spec, w, eval_shard)
        records.append(CentralRoundRecord(round_index, w, accuracy, loss))
    return records
