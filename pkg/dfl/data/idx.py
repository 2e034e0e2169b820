"""Reader for MNIST-style IDX files (optionally gzipped)."""

from __future__ import annotations
import gzip
from pathlib import Path
import struct
from typing import BinaryIO

import numpy as np
from numpy.typing import NDArray

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    pass


def _open(path: Path) -> BinaryIO:
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return path.open("rb")


def read_images(path: Path) -> NDArray[np.float64]:
    """Return an (count, rows*cols) array of pixels scaled to [0, 1]."""
    # big endian: u32 magic | u32 count | u32 rows | u32 cols | u8 pixels...
    with _open(path) as f:
        header = f.read(16)
        if len(header) < 16:
            raise IdxFormatError(f"{path}: truncated image header")
        magic, count, rows, cols = struct.unpack(">IIII", header)
        if magic != IMAGES_MAGIC:
            raise IdxFormatError(f"{path}: bad image magic 0x{magic:08x}")
        pixels = np.frombuffer(f.read(), dtype=np.uint8)
    if pixels.size != count * rows * cols:
        raise IdxFormatError(
            f"{path}: expected {count * rows * cols} pixels, found {pixels.size}"
        )
    return pixels.reshape(count, rows * cols).astype(np.float64) / 255.0


def read_labels(path: Path) -> NDArray[np.int64]:
    # big endian: u32 magic | u32 count | u8 labels...
    with _open(path) as f:
        header = f.read(8)
        if len(header) < 8:
            raise IdxFormatError(f"{path}: truncated label header")
        magic, count = struct.unpack(">II", header)
        if magic != LABELS_MAGIC:
            raise IdxFormatError(f"{path}: bad label magic 0x{magic:08x}")
        labels = np.frombuffer(f.read(), dtype=np.uint8)
    if labels.size != count:
        raise IdxFormatError(f"{path}: expected {count} labels, found {labels.size}")
    return labels.astype(np.int64)


def load_idx(
    images_path: Path,
    labels_path: Path,
    subsample: int | None = None,
) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    """Load an image/label pair, append the constant-1 bias feature, keep the first ``subsample`` rows."""
    images = read_images(images_path)
    labels = read_labels(labels_path)
    if len(images) != len(labels):
        raise IdxFormatError(
            f"{images_path} has {len(images)} images but {labels_path} has {len(labels)} labels"
        )
    if subsample is not None:
        images, labels = images[:subsample], labels[:subsample]
    features = np.hstack([images, np.ones((len(images), 1))])
    return features, labels
