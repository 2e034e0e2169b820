"""Multilayer perceptron on a flat weight vector.

Layers are plain weight matrices (the bias is a constant-1 input feature),
stored layer by layer in row-major order. Hidden layers use ReLU, the output
layer a softmax with mean cross-entropy loss. Everything is float64.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from dfl.config.models import ModelSpec, TrainConfig
from dfl.model.shard import DatasetShard

FlatWeights = NDArray[np.float64]


def init_weights(spec: ModelSpec) -> FlatWeights:
    """Uniform Glorot initialization, deterministic for ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    parts = []
    for fan_in, fan_out in spec.layer_shapes:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        parts.append(rng.uniform(-bound, bound, size=fan_in * fan_out))
    return np.concatenate(parts).astype(np.float64)


def unflatten(spec: ModelSpec, w: FlatWeights) -> list[NDArray[np.float64]]:
    """Return per-layer (fan_in, fan_out) views into ``w``."""
    if w.ndim != 1 or len(w) != spec.parameter_count:
        raise ValueError(
            f"weight vector has length {len(w)}, expected {spec.parameter_count}"
        )
    mats = []
    offset = 0
    for fan_in, fan_out in spec.layer_shapes:
        size = fan_in * fan_out
        mats.append(w[offset:offset + size].reshape(fan_in, fan_out))
        offset += size
    return mats


def derive_train_config(train: TrainConfig, agent_id: int, round_index: int) -> TrainConfig:
    """Per-(agent, round) training config; the shuffle seed mixes all three values."""
    seq = np.random.SeedSequence([train.seed, agent_id, round_index])
    seed = int(seq.generate_state(1, dtype=np.uint32)[0])
    return train.model_copy(update={"seed": seed})


def _check_data(spec: ModelSpec, data: DatasetShard) -> None:
    if data.dimension != spec.input_size:
        raise ValueError(
            f"dimension mismatch: shard has {data.dimension} features, model expects {spec.input_size}"
        )
    if len(data) and (data.labels.min() < 0 or data.labels.max() >= spec.num_classes):
        raise ValueError(f"dimension mismatch: labels must lie in [0, {spec.num_classes})")


def _forward(mats: list[NDArray[np.float64]], x: NDArray[np.float64]):
    activations = [x]
    a = x
    for m in mats[:-1]:
        a = np.maximum(a @ m, 0.0)
        activations.append(a)
    return activations, a @ mats[-1]


def _softmax(logits: NDArray[np.float64]) -> NDArray[np.float64]:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _cross_entropy(logits: NDArray[np.float64], labels: NDArray[np.int64]) -> float:
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    nll = log_norm - shifted[np.arange(len(labels)), labels]
    return float(nll.mean())


def batch_loss(
    spec: ModelSpec,
    w: FlatWeights,
    features: NDArray[np.float64],
    labels: NDArray[np.int64],
) -> float:
    """Mean cross-entropy of a raw batch, no shape checks."""
    _, logits = _forward(unflatten(spec, w), features)
    return _cross_entropy(logits, labels)


def evaluate(spec: ModelSpec, w: FlatWeights, data: DatasetShard) -> tuple[float, float]:
    """Mean softmax cross-entropy and accuracy (argmax ties go to the lowest class)."""
    _check_data(spec, data)
    if len(data) == 0:
        raise ValueError("cannot evaluate on an empty shard")
    _, logits = _forward(unflatten(spec, w), data.features)
    loss = _cross_entropy(logits, data.labels)
    predictions = np.argmax(logits, axis=1)
    accuracy = float(np.mean(predictions == data.labels))
    return loss, accuracy


def gradient(
    spec: ModelSpec,
    w: FlatWeights,
    features: NDArray[np.float64],
    labels: NDArray[np.int64],
) -> FlatWeights:
    """Gradient of the mean cross-entropy over the given batch, flattened like ``w``."""
    mats = unflatten(spec, w)
    activations, logits = _forward(mats, features)
    delta = _softmax(logits)
    delta[np.arange(len(labels)), labels] -= 1.0
    delta /= len(labels)

    grads: list[NDArray[np.float64]] = [np.empty(0)] * len(mats)
    for layer in range(len(mats) - 1, -1, -1):
        grads[layer] = activations[layer].T @ delta
        if layer > 0:
            delta = (delta @ mats[layer].T) * (activations[layer] > 0)
    return np.concatenate([g.ravel() for g in grads])


def local_steps(cfg: TrainConfig, n: int) -> int:
    """SGD steps of one local fit on a shard of ``n`` samples.

    With ``local_epochs`` set, every epoch is one pass over the shard's full
    mini-batches, so larger shards get more steps.
    """
    if cfg.local_epochs is None:
        return cfg.local_iterations
    return cfg.local_epochs * (n // min(cfg.batch_size, n))


def sgd_fit(
    spec: ModelSpec,
    w: FlatWeights,
    data: DatasetShard,
    cfg: TrainConfig,
) -> FlatWeights:
    """Run ``local_steps(cfg, len(data))`` mini-batch SGD steps from ``w``; ``w`` is left untouched.

    Mini-batches are consecutive chunks of a seeded permutation; a fresh
    permutation starts whenever the current one cannot fill a whole batch.
    """
    if len(data) == 0:
        raise ValueError("empty shard")
    _check_data(spec, data)
    out = np.array(w, dtype=np.float64, copy=True)
    n = len(data)
    steps = local_steps(cfg, n)
    if steps == 0:
        return out

    rng = np.random.default_rng(cfg.seed)
    batch = min(cfg.batch_size, n)
    order = rng.permutation(n)
    pos = 0
    for _ in range(steps):
        if pos + batch > n:
            order = rng.permutation(n)
            pos = 0
        idx = order[pos:pos + batch]
        pos += batch
        out -= cfg.learning_rate * gradient(spec, out, data.features[idx], data.labels[idx])
    return out
