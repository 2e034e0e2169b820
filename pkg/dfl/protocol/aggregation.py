from __future__ import annotations
from typing import Mapping, Optional

import numpy as np
from numpy.typing import NDArray

from dfl.model.mlp import FlatWeights
from dfl.model.partition import SubVector, slice_weights


def compute_delta(w_before: FlatWeights, w_after: FlatWeights, k: int) -> list[SubVector]:
    """delta = retrieved model - locally trained model, sliced into ``k`` partitions."""
    if len(w_before) != len(w_after):
        raise ValueError(f"length mismatch: {len(w_before)} != {len(w_after)}")
    return slice_weights(np.asarray(w_before, dtype=np.float64) - np.asarray(w_after, dtype=np.float64), k)


def next_epsilon(epsilon: Optional[float], r: int, alpha: float, fixed: bool = False) -> float:
    """Weight factor after a round with ``r`` contributions.

    Unset (first aggregation) or fixed mode gives 1/r, otherwise an exponential
    moving average towards 1/r.
    """
    if r < 1:
        raise ValueError("need at least one contribution")
    if fixed or epsilon is None:
        return 1.0 / r
    return alpha * epsilon + (1.0 - alpha) * (1.0 / r)


def sum_contributions(received: Mapping[int, NDArray[np.float64]]) -> NDArray[np.float64]:
    """Sum of deltas in ascending submitter order."""
    senders = sorted(received)
    total = np.array(received[senders[0]], dtype=np.float64, copy=True)
    for sender in senders[1:]:
        total = total + received[sender]
    return total


def mean_values(values: Mapping[int, NDArray[np.float64]]) -> NDArray[np.float64]:
    """Elementwise mean of sub-vectors, summed in ascending holder order."""
    return sum_contributions(values) / len(values)
