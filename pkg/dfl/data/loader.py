from __future__ import annotations
from dataclasses import dataclass
import os
from pathlib import Path
import sys

import numpy as np
from numpy.typing import NDArray

from dfl.config.models import IdxDataset, ScenarioConfig, SyntheticDataset
from dfl.data.idx import load_idx
from dfl.data.synthetic import make_blobs
from dfl.model.shard import DatasetShard

DATA_DIR_ENV = "DFL_DATA_DIR"


class DatasetError(ValueError):
    pass


def _debug(message: str) -> None:
    """Emit debug diagnostics when DFL_DEBUG is enabled."""
    if os.getenv("DFL_DEBUG") == "1":
        print(f"[DEBUG] data.loader: {message}", file=sys.stderr)


@dataclass(frozen=True)
class FederatedDataset:
    shards: list[DatasetShard]  # shards[i].owner == i + 1
    eval: DatasetShard


def iid_split(
    features: NDArray[np.float64],
    labels: NDArray[np.int64],
    agents: int,
    eval_fraction: float,
    seed: int,
) -> FederatedDataset:
    """Stratified IID split into ``agents`` equal shards plus an evaluation shard.

    Per class, samples are shuffled, the first ``eval_fraction`` go to the
    evaluation shard and the rest are dealt round-robin, continuing across
    classes. Shards longer than the shortest one hand their surplus to the
    evaluation shard, taken from a class where they hold more than their share.
    """
    if agents < 1:
        raise DatasetError("need at least one agent")
    rng = np.random.default_rng(seed)
    eval_idx: list[int] = []
    dealt: list[list[int]] = [[] for _ in range(agents)]
    cursor = 0
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        n_eval = int(round(len(idx) * eval_fraction))
        eval_idx.extend(int(i) for i in idx[:n_eval])
        train = idx[n_eval:]
        for j, sample in enumerate(train):
            dealt[(cursor + j) % agents].append(int(sample))
        cursor = (cursor + len(train)) % agents

    size = min(len(d) for d in dealt)
    if size == 0:
        raise DatasetError(f"{len(labels)} samples cannot fill {agents} non-empty shards")

    classes = np.unique(labels)
    totals = {int(c): sum(int(labels[i] == c) for d in dealt for i in d) for c in classes}
    for shard_idx in dealt:
        while len(shard_idx) > size:
            counts = {int(c): sum(1 for i in shard_idx if labels[i] == c) for c in classes}
            # surplus comes from a class where this shard is above the floor share
            over = [c for c in counts if counts[c] > totals[c] // agents]
            cls = max(over) if over else int(labels[shard_idx[-1]])
            victim = max(pos for pos, i in enumerate(shard_idx) if labels[i] == cls)
            eval_idx.append(shard_idx.pop(victim))

    shards = [
        DatasetShard(features=features[d], labels=labels[d], owner=owner)
        for owner, d in enumerate(dealt, start=1)
    ]
    eval_sorted = sorted(eval_idx)
    eval_shard = DatasetShard(features=features[eval_sorted], labels=labels[eval_sorted], owner=0)
    _debug(f"split {len(labels)} samples into {agents} shards of {size}, eval {len(eval_sorted)}")
    return FederatedDataset(shards=shards, eval=eval_shard)


def _resolve(path: str) -> Path:
    p = Path(path)
    if not p.is_absolute() and (base := os.getenv(DATA_DIR_ENV)):
        p = Path(base) / p
    return p


def load_dataset(cfg: ScenarioConfig) -> FederatedDataset:
    """Build the per-agent shards and the evaluation shard for a scenario."""
    ds = cfg.dataset
    if isinstance(ds, SyntheticDataset):
        features, labels = make_blobs(ds)
        data = iid_split(features, labels, cfg.agents, cfg.eval_fraction, ds.seed)
    elif isinstance(ds, IdxDataset):
        features, labels = load_idx(_resolve(ds.images), _resolve(ds.labels), ds.subsample)
        if ds.eval_images and ds.eval_labels:
            eval_features, eval_labels = load_idx(_resolve(ds.eval_images), _resolve(ds.eval_labels))
            train = iid_split(features, labels, cfg.agents, 0.0, cfg.train.seed)
            data = FederatedDataset(
                shards=train.shards,
                eval=DatasetShard(features=eval_features, labels=eval_labels, owner=0),
            )
        else:
            data = iid_split(features, labels, cfg.agents, cfg.eval_fraction, cfg.train.seed)
    else:  # pragma: no cover - guarded by the discriminated union
        raise DatasetError(f"unsupported dataset kind {ds!r}")

    if data.shards[0].dimension != cfg.model.input_size:
        raise DatasetError(
            f"dataset has {data.shards[0].dimension} features, model expects {cfg.model.input_size}"
        )
    shard_size = len(data.shards[0])
    if shard_size < cfg.train.batch_size:
        raise DatasetError(
            f"shard size {shard_size} is smaller than batch size {cfg.train.batch_size}"
        )
    return data
