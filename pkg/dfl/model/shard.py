from __future__ import annotations
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True)
class DatasetShard:
    """A private dataset: one feature row per sample plus its class label."""

    features: NDArray[np.float64]
    labels: NDArray[np.int64]
    owner: int = 0

    def __post_init__(self) -> None:
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.ndim != 1 or len(self.labels) != len(self.features):
            raise ValueError(
                f"labels shape {self.labels.shape} does not match {len(self.features)} samples"
            )

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dimension(self) -> int:
        return self.features.shape[1]

    def class_histogram(self, num_classes: int) -> NDArray[np.int64]:
        return np.bincount(self.labels, minlength=num_classes)
