import math

import numpy as np
import pytest

from dfl.config.models import ModelSpec, SyntheticDataset, TrainConfig
from dfl.data.synthetic import make_blobs
from dfl.model import mlp
from dfl.model.shard import DatasetShard


def test_parameter_count_and_layer_shapes():
    spec = ModelSpec(layer_sizes=[785, 500, 100, 10])

    assert spec.layer_shapes == [(785, 500), (500, 100), (100, 10)]
    assert spec.parameter_count == 785 * 500 + 500 * 100 + 100 * 10
    assert spec.input_size == 785
    assert spec.num_classes == 10


def test_model_spec_rejects_single_layer():
    with pytest.raises(ValueError):
        ModelSpec(layer_sizes=[10])


def test_init_weights_is_deterministic_per_seed():
    a = mlp.init_weights(ModelSpec(layer_sizes=[5, 4, 3], seed=7))
    b = mlp.init_weights(ModelSpec(layer_sizes=[5, 4, 3], seed=7))
    c = mlp.init_weights(ModelSpec(layer_sizes=[5, 4, 3], seed=8))

    assert a.dtype == np.float64
    assert len(a) == 5 * 4 + 4 * 3
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_unflatten_rejects_wrong_length():
    spec = ModelSpec(layer_sizes=[5, 4, 3])
    with pytest.raises(ValueError, match="expected 32"):
        mlp.unflatten(spec, np.zeros(31))


def test_zero_weights_give_uniform_loss_and_lowest_class_predictions(make_shard):
    spec = ModelSpec(layer_sizes=[5, 4, 3])
    shard = make_shard(n=40, dim=5, classes=3)

    loss, accuracy = mlp.evaluate(spec, np.zeros(spec.parameter_count), shard)

    assert loss == pytest.approx(math.log(3))
    # every argmax tie resolves to class 0
    assert accuracy == pytest.approx(np.mean(shard.labels == 0))


def test_evaluate_rejects_dimension_mismatch(make_shard):
    spec = ModelSpec(layer_sizes=[6, 4, 3])
    with pytest.raises(ValueError, match="dimension mismatch"):
        mlp.evaluate(spec, mlp.init_weights(spec), make_shard(dim=5))


def test_evaluate_rejects_out_of_range_labels(make_shard):
    spec = ModelSpec(layer_sizes=[5, 2])
    with pytest.raises(ValueError, match="labels"):
        mlp.evaluate(spec, mlp.init_weights(spec), make_shard(dim=5, classes=3))


def test_gradient_matches_central_differences():
    spec = ModelSpec(layer_sizes=[4, 3, 3], seed=3)
    rng = np.random.default_rng(1)
    w = mlp.init_weights(spec)
    x = rng.normal(size=(8, 4))
    y = rng.integers(0, 3, size=8)

    analytic = mlp.gradient(spec, w, x, y)
    numeric = np.empty_like(w)
    step = 1e-6
    for i in range(len(w)):
        e = np.zeros_like(w)
        e[i] = step
        numeric[i] = (mlp.batch_loss(spec, w + e, x, y) - mlp.batch_loss(spec, w - e, x, y)) / (2 * step)

    rel = np.linalg.norm(analytic - numeric) / (np.linalg.norm(analytic) + np.linalg.norm(numeric))
    assert rel < 1e-5


def test_sgd_fit_with_zero_iterations_returns_a_copy(make_shard):
    spec = ModelSpec(layer_sizes=[5, 4, 3])
    w = mlp.init_weights(spec)

    out = mlp.sgd_fit(spec, w, make_shard(), TrainConfig(local_iterations=0))

    assert np.array_equal(out, w)
    assert out is not w


def test_sgd_fit_is_deterministic_and_leaves_input_untouched(make_shard):
    spec = ModelSpec(layer_sizes=[5, 4, 3])
    w = mlp.init_weights(spec)
    before = w.copy()
    cfg = TrainConfig(learning_rate=0.1, batch_size=8, local_iterations=12, seed=5)
    shard = make_shard()

    a = mlp.sgd_fit(spec, w, shard, cfg)
    b = mlp.sgd_fit(spec, w, shard, cfg)

    assert np.array_equal(a, b)
    assert np.array_equal(w, before)
    assert not np.array_equal(a, w)


def test_sgd_fit_rejects_empty_shard():
    spec = ModelSpec(layer_sizes=[5, 3])
    empty = DatasetShard(features=np.zeros((0, 5)), labels=np.zeros(0, dtype=np.int64))
    with pytest.raises(ValueError, match="empty"):
        mlp.sgd_fit(spec, mlp.init_weights(spec), empty, TrainConfig())


def test_sgd_fit_lowers_training_loss_on_blobs():
    features, labels = make_blobs(SyntheticDataset(samples=300))
    shard = DatasetShard(features=features, labels=labels)
    spec = ModelSpec()
    w0 = mlp.init_weights(spec)

    w1 = mlp.sgd_fit(spec, w0, shard, TrainConfig(local_iterations=100))

    assert mlp.evaluate(spec, w1, shard)[0] < mlp.evaluate(spec, w0, shard)[0]


def test_derive_train_config_mixes_agent_and_round():
    train = TrainConfig(seed=3)

    same = mlp.derive_train_config(train, 2, 5)
    assert same == mlp.derive_train_config(train, 2, 5)
    assert same.seed != mlp.derive_train_config(train, 3, 5).seed
    assert same.seed != mlp.derive_train_config(train, 2, 6).seed
    assert same.learning_rate == train.learning_rate


def test_full_shard_step_is_one_gradient_descent_step(make_shard):
    spec = ModelSpec(layer_sizes=[5, 4, 3], seed=2)
    shard = make_shard(n=24)
    w = mlp.init_weights(spec)
    cfg = TrainConfig(learning_rate=0.3, batch_size=64, local_iterations=1, seed=9)

    out = mlp.sgd_fit(spec, w, shard, cfg)

    expected = w - 0.3 * mlp.gradient(spec, w, shard.features, shard.labels)
    np.testing.assert_allclose(out, expected, rtol=1e-12, atol=1e-14)


def test_evaluate_matches_a_per_sample_computation(make_shard):
    spec = ModelSpec(layer_sizes=[5, 6, 3], seed=4)
    shard = make_shard(n=30, seed=3)
    w = mlp.init_weights(spec)
    first, second = mlp.unflatten(spec, w)

    losses, hits = [], []
    for x, y in zip(shard.features, shard.labels):
        logits = np.maximum(x @ first, 0.0) @ second
        log_probs = logits - np.log(np.sum(np.exp(logits)))
        losses.append(-log_probs[y])
        hits.append(int(np.argmax(logits)) == y)

    loss, accuracy = mlp.evaluate(spec, w, shard)

    assert loss == pytest.approx(np.mean(losses), rel=1e-12)
    assert accuracy == pytest.approx(np.mean(hits))


def test_vanishing_learning_rate_leaves_weights_in_place(make_shard):
    spec = ModelSpec(layer_sizes=[5, 4, 3])
    w = mlp.init_weights(spec)

    out = mlp.sgd_fit(spec, w, make_shard(), TrainConfig(learning_rate=1e-12, batch_size=8, local_iterations=5))

    np.testing.assert_allclose(out, w, rtol=0, atol=1e-9)


def test_local_epochs_scale_steps_with_shard_size(make_shard):
    spec = ModelSpec(layer_sizes=[5, 4, 3])
    w = mlp.init_weights(spec)
    shard = make_shard(n=40)
    by_epochs = TrainConfig(batch_size=8, local_epochs=2, seed=1)

    assert mlp.local_steps(by_epochs, 40) == 10
    assert mlp.local_steps(by_epochs, 100) == 24
    assert mlp.local_steps(TrainConfig(batch_size=8, local_iterations=7), 100) == 7
    assert np.array_equal(
        mlp.sgd_fit(spec, w, shard, by_epochs),
        mlp.sgd_fit(spec, w, shard, TrainConfig(batch_size=8, local_iterations=10, seed=1)),
    )
