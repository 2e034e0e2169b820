from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from dfl.config.models import SyntheticDataset


def make_blobs(cfg: SyntheticDataset) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    """Gaussian class blobs with a trailing constant-1 feature.

    Class centres are drawn with standard deviation ``cfg.separation``; samples
    add unit Gaussian noise. Classes are balanced (labels cycle 0..classes-1).
    """
    rng = np.random.default_rng(cfg.seed)
    raw_dim = cfg.dimension - 1
    centres = rng.normal(0.0, cfg.separation, size=(cfg.classes, raw_dim))
    labels = np.arange(cfg.samples, dtype=np.int64) % cfg.classes
    noise = rng.normal(0.0, 1.0, size=(cfg.samples, raw_dim))
    features = np.hstack([centres[labels] + noise, np.ones((cfg.samples, 1))])
    return features, labels
