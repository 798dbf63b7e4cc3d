"""Shared fixtures: synthetic datasets, on-disk format builders, and the
acceptance-criteria summary printed at the end of a run."""

from __future__ import annotations

import re
import struct
from pathlib import Path

import numpy as np
import pytest

from hebbnet.data import Dataset

# ----------------------------------------------------------------------
# synthetic data


def make_blobs(
    n: int,
    n_features: int = 784,
    n_classes: int = 10,
    seed: int = 0,
    noise: float = 0.08,
    name: str = "blobs",
) -> Dataset:
    """Clustered nonnegative vectors in [0, 1]: one sparse prototype per class
    plus pixel noise.  Easy enough that a working pipeline separates it."""
    rng = np.random.default_rng(seed)
    mask = rng.random((n_classes, n_features)) < 0.25
    prototypes = mask * rng.uniform(0.55, 1.0, size=(n_classes, n_features))
    labels = rng.integers(0, n_classes, size=n)
    intensity = rng.uniform(0.7, 1.0, size=(n, 1))
    examples = prototypes[labels] * intensity + rng.normal(0.0, noise, size=(n, n_features))
    examples = np.clip(examples, 0.0, 1.0)
    return Dataset(examples=examples, labels=labels, n_classes=n_classes, name=name)


@pytest.fixture(scope="session")
def blob_train() -> Dataset:
    return make_blobs(1200, seed=7)


@pytest.fixture(scope="session")
def blob_test() -> Dataset:
    return make_blobs(300, seed=8)


# ----------------------------------------------------------------------
# on-disk fixtures in the real binary formats


def idx_image_bytes(images: np.ndarray, magic: int = 2051) -> bytes:
    n, rows, cols = images.shape
    return struct.pack(">iiii", magic, n, rows, cols) + images.astype(np.uint8).tobytes()


def idx_label_bytes(labels: np.ndarray, magic: int = 2049) -> bytes:
    return struct.pack(">ii", magic, len(labels)) + labels.astype(np.uint8).tobytes()


def cifar_batch_bytes(pixels: np.ndarray, labels: np.ndarray) -> bytes:
    records = np.concatenate([labels.reshape(-1, 1), pixels], axis=1).astype(np.uint8)
    return records.tobytes()


def write_mnist_files(
    directory: Path, n: int, seed: int = 0, side: int = 28, prefix: str = "train"
) -> tuple[Path, Path]:
    """Write an IDX image/label pair of blob digits; returns the two paths."""
    data = make_blobs(n, n_features=side * side, seed=seed)
    images = np.round(data.examples * 255.0).astype(np.uint8).reshape(n, side, side)
    img_path = directory / f"{prefix}-images.idx3-ubyte"
    lbl_path = directory / f"{prefix}-labels.idx1-ubyte"
    img_path.write_bytes(idx_image_bytes(images))
    lbl_path.write_bytes(idx_label_bytes(data.labels))
    return img_path, lbl_path


@pytest.fixture(scope="session")
def mnist_fixture(tmp_path_factory) -> dict[str, Path]:
    root = tmp_path_factory.mktemp("mnist-fixture")
    train_img, train_lbl = write_mnist_files(root, 400, seed=7, prefix="train")
    test_img, test_lbl = write_mnist_files(root, 120, seed=8, prefix="t10k")
    return {
        "train_images": train_img,
        "train_labels": train_lbl,
        "test_images": test_img,
        "test_labels": test_lbl,
    }


# ----------------------------------------------------------------------
# real-dataset discovery (optional, for the data-dependent criteria)


def mnist_dir() -> Path | None:
    import os

    value = os.environ.get("HEBBNET_MNIST_DIR")
    return Path(value) if value else None


def cifar_dir() -> Path | None:
    import os

    value = os.environ.get("HEBBNET_CIFAR_DIR")
    return Path(value) if value else None


def find_mnist_file(root: Path, stems: tuple[str, ...]) -> Path | None:
    for stem in stems:
        for candidate in (root / stem, root / f"{stem}.idx3-ubyte", root / f"{stem}.idx1-ubyte"):
            if candidate.exists():
                return candidate
    return None


needs_mnist = pytest.mark.skipif(
    mnist_dir() is None,
    reason="real MNIST IDX files required; set HEBBNET_MNIST_DIR",
)
needs_cifar = pytest.mark.skipif(
    cifar_dir() is None,
    reason="real CIFAR-10 binary batches required; set HEBBNET_CIFAR_DIR",
)

full_scale = pytest.mark.skipif(
    __import__("os").environ.get("HEBBNET_FULL_SCALE") != "1",
    reason="full-scale reproduction (hours on CPU); set HEBBNET_FULL_SCALE=1",
)


# ----------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the run

_CRITERION_RE = re.compile(r"test_criterion_(\d+)")
_criterion_results: dict[int, list[str]] = {}


def pytest_runtest_logreport(report):
    match = _CRITERION_RE.search(report.nodeid)
    if not match:
        return
    number = int(match.group(1))
    if report.when == "call" or (report.when == "setup" and report.skipped):
        _criterion_results.setdefault(number, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criterion_results):
        outcomes = _criterion_results[number]
        if any(o == "failed" for o in outcomes):
            status = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"[{status}] criterion {number}")
