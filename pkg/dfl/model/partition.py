from __future__ import annotations
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numpy.typing import NDArray

from dfl.model.mlp import FlatWeights


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class SubVector:
    partition_id: int
    offset: int
    values: NDArray[np.float64]

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> int:
        return self.offset + len(self.values)


def slice_bounds(size: int, k: int) -> list[tuple[int, int]]:
    """(offset, length) of each of the ``k`` contiguous partitions of a length-``size`` vector.

    The first ``size % k`` partitions get one extra element.
    """
    if not 1 <= k <= size:
        raise PartitionError(f"partition count {k} out of range [1, {size}]")
    base, extra = divmod(size, k)
    bounds = []
    offset = 0
    for index in range(k):
        length = base + (1 if index < extra else 0)
        bounds.append((offset, length))
        offset += length
    return bounds


def slice_weights(w: FlatWeights, k: int) -> list[SubVector]:
    """Split ``w`` into ``k`` sub-vectors with partition IDs 1..k."""
    return [
        SubVector(partition_id=index, offset=offset, values=np.array(w[offset:offset + length]))
        for index, (offset, length) in enumerate(slice_bounds(len(w), k), start=1)
    ]


def assemble(parts: Iterable[SubVector], size: int) -> FlatWeights:
    """Concatenate sub-vectors by offset; they must cover [0, size) exactly once."""
    parts = list(parts)
    ids = [p.partition_id for p in parts]
    if len(set(ids)) != len(ids):
        raise PartitionError("overlap: duplicate partition id")

    cursor = 0
    chunks = []
    for part in sorted(parts, key=lambda p: p.offset):
        if part.offset < cursor:
            raise PartitionError(f"overlap at offset {part.offset}")
        if part.offset > cursor:
            raise PartitionError(f"incomplete model: gap at offset {cursor}")
        chunks.append(part.values)
        cursor = part.end

    if cursor != size:
        raise PartitionError(f"incomplete model: covered {cursor} of {size} values")
    if not chunks:
        raise PartitionError("incomplete model: no partitions")
    return np.concatenate(chunks).astype(np.float64)
