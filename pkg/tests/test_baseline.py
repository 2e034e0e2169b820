import numpy as np
import pytest

from dfl.baseline.central import central_round, central_train
from dfl.config.models import ModelSpec, TrainConfig
from dfl.model.mlp import derive_train_config, init_weights, sgd_fit

SPEC = ModelSpec()
TRAIN = TrainConfig(local_iterations=3, batch_size=8)


def test_single_shard_round_is_a_plain_fit(make_shard):
    shard = make_shard(dim=11)
    w = init_weights(SPEC)

    result = central_round(SPEC, w, [shard], TRAIN, 1)

    assert np.array_equal(result, sgd_fit(SPEC, w, shard, derive_train_config(TRAIN, 1, 1)))


def test_two_shards_average_by_hand(make_shard):
    shards = [make_shard(dim=11, seed=1, owner=2), make_shard(dim=11, seed=2, owner=1)]
    w = init_weights(SPEC)

    result = central_round(SPEC, w, shards, TRAIN, 4)

    first = sgd_fit(SPEC, w, shards[1], derive_train_config(TRAIN, 1, 4))
    second = sgd_fit(SPEC, w, shards[0], derive_train_config(TRAIN, 2, 4))
    assert np.array_equal(result, (first + second) / 2)


def test_zero_iterations_keep_the_model(make_shard):
    w = init_weights(SPEC)
    shards = [make_shard(dim=11, owner=i) for i in (1, 2, 3)]

    result = central_round(SPEC, w, shards, TRAIN.model_copy(update={"local_iterations": 0}), 1)

    np.testing.assert_allclose(result, w)


def test_zero_rounds_gives_only_the_initial_record(make_shard):
    eval_shard = make_shard(dim=11, seed=9)

    records = central_train(SPEC, [make_shard(dim=11)], TRAIN, 0, eval_shard)

    assert [r.round for r in records] == [0]
    assert np.array_equal(records[0].global_weights, init_weights(SPEC))
    assert 0.0 <= records[0].accuracy <= 1.0


def test_training_is_deterministic(make_shard):
    shards = [make_shard(dim=11, seed=s, owner=s + 1) for s in range(3)]
    eval_shard = make_shard(dim=11, seed=7)

    a = central_train(SPEC, shards, TRAIN, 3, eval_shard)
    b = central_train(SPEC, shards, TRAIN, 3, eval_shard)

    assert [r.round for r in a] == [0, 1, 2, 3]
    for x, y in zip(a, b):
        assert np.array_equal(x.global_weights, y.global_weights)
        assert (x.accuracy, x.loss) == (y.accuracy, y.loss)


def test_no_shards_is_an_error():
    with pytest.raises(ValueError, match="no shards"):
        central_round(SPEC, init_weights(SPEC), [], TRAIN, 1)
