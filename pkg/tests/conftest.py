import gzip
from pathlib import Path
import struct

import numpy as np
import pytest

from dfl.config.models import ScenarioConfig
from dfl.model.shard import DatasetShard


class RecordingNode:
    def __init__(self, node_id, sim=None, echo=False):
        self.id = node_id
        self.sim = sim
        self.echo = echo
        self.received = []
        self.timeouts = []

    def on_message(self, env):
        self.received.append(env)
        if self.echo and env.reply_to is None:
            self.sim.reply(env, self.id, env.payload, "echo")

    def on_timeout(self, request):
        self.timeouts.append(request)


@pytest.fixture
def make_node():
    def make(node_id, sim=None, echo=False):
        node = RecordingNode(node_id, sim, echo)
        if sim is not None:
            sim.register(node)
        return node
    return make


@pytest.fixture
def small_config():
    """ScenarioConfig factory; keyword arguments are merged over a short default run."""
    def make(**overrides):
        return ScenarioConfig.model_validate({"rounds": 3, **overrides})
    return make


@pytest.fixture
def make_shard():
    def make(n=40, dim=5, classes=3, seed=0, owner=1):
        rng = np.random.default_rng(seed)
        features = np.hstack([rng.normal(size=(n, dim - 1)), np.ones((n, 1))])
        labels = np.arange(n, dtype=np.int64) % classes
        return DatasetShard(features=features, labels=labels, owner=owner)
    return make


def write_idx(images_path: Path, labels_path: Path, images: np.ndarray, labels: np.ndarray) -> None:
    count, rows, cols = images.shape
    opener = gzip.open if images_path.suffix == ".gz" else open
    with opener(images_path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, count, rows, cols))
        f.write(images.astype(np.uint8).tobytes())
    opener = gzip.open if labels_path.suffix == ".gz" else open
    with opener(labels_path, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


@pytest.fixture
def idx_files(tmp_path):
    """Write an IDX image/label pair into tmp_path and return both paths."""
    def make(images, labels, gz=False, prefix="train"):
        suffix = ".gz" if gz else ""
        images_path = tmp_path / f"{prefix}-images-idx3-ubyte{suffix}"
        labels_path = tmp_path / f"{prefix}-labels-idx1-ubyte{suffix}"
        write_idx(images_path, labels_path, images, labels)
        return images_path, labels_path
    return make
