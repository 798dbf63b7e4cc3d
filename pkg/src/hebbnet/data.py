"""Dataset loading, normalization, splits and minibatch streams.

Supported on-disk formats:

* IDX (big-endian): magic 0x00000803 for image files, 0x00000801 for label
  files, dimension sizes following the magic, then raw uint8 payload.
* CIFAR-10 binary batches: consecutive 3073-byte records, one label byte
  followed by 3072 pixel bytes stored channel-planar (R plane, G plane,
  B plane).  Rows are flattened in exactly that on-disk order; the learning
  task is permutation invariant, so the fixed order only serves
  reproducibility.

Datasets are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import ConsistencyError, DataFormatError, DataIOError
from .rng import permutation

__all__ = [
    "Dataset",
    "Batch",
    "load_mnist",
    "load_cifar10",
    "normalize",
    "split",
    "minibatches",
    "IMAGE_MAGIC",
    "LABEL_MAGIC",
    "CIFAR_RECORD_BYTES",
]

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049
CIFAR_RECORD_BYTES = 3073


@dataclass(frozen=True)
class Dataset:
    """Flat example vectors with integer labels.

    ``examples`` is an (N, n_features) float64 array, ``labels`` an (N,) int64
    array with values in [0, n_classes).
    """

    examples: np.ndarray
    labels: np.ndarray
    n_classes: int
    name: str = ""

    def __post_init__(self) -> None:
        if self.examples.ndim != 2:
            raise ValueError(f"examples must be a 2-d array, got shape {self.examples.shape}")
        if self.labels.shape != (self.examples.shape[0],):
            raise ConsistencyError(
                f"{self.examples.shape[0]} examples but {self.labels.shape[0]} labels"
            )
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise DataFormatError(
                f"labels must lie in [0, {self.n_classes}), found range "
                f"[{self.labels.min()}, {self.labels.max()}]"
            )
        self.examples.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n_features(self) -> int:
        return self.examples.shape[1]

    def __len__(self) -> int:
        return self.examples.shape[0]

    def take(self, indices: np.ndarray, name: str | None = None) -> "Dataset":
        """New dataset holding the rows at ``indices``, in that order."""
        return Dataset(
            examples=self.examples[indices].copy(),
            labels=self.labels[indices].copy(),
            n_classes=self.n_classes,
            name=self.name if name is None else name,
        )


@dataclass(frozen=True)
class Batch:
    """A minibatch: row indices plus views into the parent dataset."""

    indices: np.ndarray
    dataset: Dataset = field(repr=False)

    @property
    def examples(self) -> np.ndarray:
        return self.dataset.examples[self.indices]

    @property
    def labels(self) -> np.ndarray:
        return self.dataset.labels[self.indices]

    def __len__(self) -> int:
        return len(self.indices)


def _read_exact(f, n: int, path: Path, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise DataIOError(f"{path}: truncated while reading {what} ({len(data)}/{n} bytes)")
    return data


def _read_idx(path: Path, expected_magic: int, expected_ndim: int) -> np.ndarray:
    with open(path, "rb") as f:
        header = _read_exact(f, 4, path, "magic number")
        (magic,) = struct.unpack(">i", header)
        if magic != expected_magic:
            raise DataFormatError(
                f"{path}: bad IDX magic number, expected {expected_magic}, got {magic}"
            )
        dims = struct.unpack(
            f">{expected_ndim}i", _read_exact(f, 4 * expected_ndim, path, "dimension header")
        )
        if any(d < 0 for d in dims):
            raise DataFormatError(f"{path}: negative dimension in IDX header: {dims}")
        count = int(np.prod(dims, dtype=np.int64))
        payload = _read_exact(f, count, path, f"{count} data bytes")
        if f.read(1):
            raise DataFormatError(f"{path}: trailing bytes after {count}-byte IDX payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def load_mnist(images_path: str | Path, labels_path: str | Path) -> Dataset:
    """Load an IDX image/label file pair as raw 0..255 pixel values.

    The image count must match between the two files.
    """
    images_path, labels_path = Path(images_path), Path(labels_path)
    images = _read_idx(images_path, IMAGE_MAGIC, 3)
    labels = _read_idx(labels_path, LABEL_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise ConsistencyError(
            f"{images_path} holds {images.shape[0]} images but {labels_path} holds "
            f"{labels.shape[0]} labels"
        )
    n, rows, cols = images.shape
    return Dataset(
        examples=images.reshape(n, rows * cols).astype(np.float64),
        labels=labels.astype(np.int64),
        n_classes=10,
        name=images_path.stem,
    )


def load_cifar10(batch_paths: Sequence[str | Path]) -> Dataset:
    """Load CIFAR-10 binary batch files as raw 0..255 pixel values."""
    all_pixels: list[np.ndarray] = []
    all_labels: list[np.ndarray] = []
    for raw_path in batch_paths:
        path = Path(raw_path)
        try:
            blob = path.read_bytes()
        except OSError as exc:
            raise DataIOError(f"{path}: {exc.strerror or exc}") from exc
        if len(blob) == 0 or len(blob) % CIFAR_RECORD_BYTES != 0:
            raise DataFormatError(
                f"{path}: size {len(blob)} is not a positive multiple of "
                f"{CIFAR_RECORD_BYTES}-byte records"
            )
        records = np.frombuffer(blob, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
        labels = records[:, 0]
        if labels.max() > 9:
            raise DataFormatError(f"{path}: label byte {labels.max()} exceeds 9")
        all_labels.append(labels.astype(np.int64))
        all_pixels.append(records[:, 1:].astype(np.float64))
    if not all_pixels:
        raise DataFormatError("no CIFAR-10 batch files given")
    return Dataset(
        examples=np.concatenate(all_pixels),
        labels=np.concatenate(all_labels),
        n_classes=10,
        name=Path(batch_paths[0]).stem,
    )


def normalize(d: Dataset, mode: str, scale_divisor: float = 255.0) -> Dataset:
    """Return a normalized copy of ``d``.

    ``scale01`` divides every component by ``scale_divisor`` (255 maps raw
    pixels onto [0, 1], keeping them nonnegative).  ``unit_l2`` rescales each
    example to unit Euclidean length and rejects all-zero examples.
    """
    if mode == "scale01":
        examples = d.examples / scale_divisor
    elif mode == "unit_l2":
        norms = np.linalg.norm(d.examples, axis=1)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise ValueError(f"cannot unit_l2-normalize all-zero example at index {zero[0]}")
        examples = d.examples / norms[:, None]
    else:
        raise ValueError(f"unknown normalization mode {mode!r}")
    return Dataset(examples=examples, labels=d.labels.copy(), n_classes=d.n_classes, name=d.name)


def split(d: Dataset, n_train: int, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic random partition into (n_train, rest) datasets."""
    if not 0 < n_train < len(d):
        raise ValueError(f"n_train must be in (0, {len(d)}), got {n_train}")
    order = permutation(len(d), seed)
    return (
        d.take(np.sort(order[:n_train]), name=f"{d.name}-train"),
        d.take(np.sort(order[n_train:]), name=f"{d.name}-val"),
    )


def minibatches(d: Dataset, size: int, seed: int, epoch: int) -> Iterator[Batch]:
    """Yield one epoch of minibatches under a fresh seeded shuffle.

    The shuffle seed is ``seed XOR epoch``, so every epoch reorders the data
    and the whole stream replays exactly for the same (seed, epoch).  Every
    example appears exactly once per epoch; the last batch may be short.
    """
    if size < 1:
        raise ValueError(f"batch size must be >= 1, got {size}")
    order = permutation(len(d), seed ^ epoch)
    for start in range(0, len(d), size):
        yield Batch(indices=order[start : start + size], dataset=d)
