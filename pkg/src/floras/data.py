"""MNIST ingestion (IDX format) and client partitioning.

The experiments use 20 x 20 digit images obtained by center-cropping the
28 x 28 MNIST rasters (a fixed 4-pixel border is dropped on every side),
pixel values scaled to [0, 1], with a class-balanced subsample of 4000
training and 1000 test examples.  Class balance is what makes the
one-label-per-client partition come out with equal, single-label shards.
"""

import gzip
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, IngestionError

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

TRAIN_IMAGES = "train-images-idx3-ubyte.gz"
TRAIN_LABELS = "train-labels-idx1-ubyte.gz"
TEST_IMAGES = "t10k-images-idx3-ubyte.gz"
TEST_LABELS = "t10k-labels-idx1-ubyte.gz"

IID = "iid"
ONE_LABEL = "one_label"

N_CLASSES = 10


@dataclass(frozen=True)
class Dataset:
    """Flat feature rows plus integer labels."""

    images: np.ndarray  # n x n_features, float64 in [0, 1]
    labels: np.ndarray  # n, int64

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise ValueError("images and labels must align row by row")

    def __len__(self) -> int:
        return self.images.shape[0]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.images[idx], self.labels[idx])


def _open_maybe_gzip(path: str):
    if str(path).endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_exact(f, n: int, path: str, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise IngestionError(
            f"{path}: truncated while reading {what} "
            f"(wanted {n} bytes at offset {f.tell() - len(buf)}, got {len(buf)})")
    return buf


def read_idx_images(path: str) -> np.ndarray:
    """Parse a big-endian IDX image file into an (n, rows, cols) uint8 array."""
    if not os.path.exists(path):
        raise IngestionError(f"image file not found: {path}")
    with _open_maybe_gzip(path) as f:
        magic, count, rows, cols = struct.unpack(">IIII", _read_exact(f, 16, path, "header"))
        if magic != IMAGES_MAGIC:
            raise IngestionError(
                f"{path}: bad magic 0x{magic:08x} at offset 0, expected 0x{IMAGES_MAGIC:08x}")
        raw = _read_exact(f, count * rows * cols, path, f"{count} images")
    return np.frombuffer(raw, dtype=np.uint8).reshape(count, rows, cols)


def read_idx_labels(path: str) -> np.ndarray:
    """Parse a big-endian IDX label file into an (n,) uint8 array."""
    if not os.path.exists(path):
        raise IngestionError(f"label file not found: {path}")
    with _open_maybe_gzip(path) as f:
        magic, count = struct.unpack(">II", _read_exact(f, 8, path, "header"))
        if magic != LABELS_MAGIC:
            raise IngestionError(
                f"{path}: bad magic 0x{magic:08x} at offset 0, expected 0x{LABELS_MAGIC:08x}")
        raw = _read_exact(f, count, path, f"{count} labels")
    return np.frombuffer(raw, dtype=np.uint8)


def center_crop(images: np.ndarray, size: int = 20) -> np.ndarray:
    """Drop an equal border on every side; 28 x 28 -> rows/cols 4..23 for size 20."""
    n, rows, cols = images.shape
    if rows < size or cols < size or (rows - size) % 2 or (cols - size) % 2:
        raise ValueError(f"cannot center-crop {rows}x{cols} to {size}x{size}")
    r0 = (rows - size) // 2
    c0 = (cols - size) // 2
    return images[:, r0:r0 + size, c0:c0 + size]


def _balanced_subsample(labels: np.ndarray, n_total: int,
                        rng: np.random.Generator) -> np.ndarray:
    if n_total % N_CLASSES:
        raise ConfigurationError(
            f"subsample size {n_total} must be a multiple of {N_CLASSES} for class balance")
    per_class = n_total // N_CLASSES
    picks = []
    for cls in range(N_CLASSES):
        pool = np.flatnonzero(labels == cls)
        if pool.size < per_class:
            raise IngestionError(
                f"class {cls} has only {pool.size} examples, need {per_class}")
        picks.append(rng.choice(pool, size=per_class, replace=False))
    idx = np.concatenate(picks)
    rng.shuffle(idx)
    return idx


def _load_split(images_path: str, labels_path: str, n_keep: int,
                crop: int, rng: np.random.Generator) -> Dataset:
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise IngestionError(
            f"{images_path} has {images.shape[0]} images but "
            f"{labels_path} has {labels.shape[0]} labels")
    idx = _balanced_subsample(labels, n_keep, rng)
    flat = center_crop(images[idx], crop).reshape(n_keep, crop * crop)
    return Dataset(images=flat.astype(np.float64) / 255.0,
                   labels=labels[idx].astype(np.int64))


def load_mnist(data_dir: str, n_train: int = 4000, n_test: int = 1000,
               rng: np.random.Generator | None = None,
               crop: int = 20):
    """Load the four standard IDX files from ``data_dir`` and subsample.

    The subsample is drawn uniformly within each class (equal class counts)
    so the one-label partition is well defined.  Returns (train, test).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    train = _load_split(os.path.join(data_dir, TRAIN_IMAGES),
                        os.path.join(data_dir, TRAIN_LABELS), n_train, crop, rng)
    test = _load_split(os.path.join(data_dir, TEST_IMAGES),
                       os.path.join(data_dir, TEST_LABELS), n_test, crop, rng)
    return train, test


def partition(train: Dataset, n_clients: int, mode: str,
              rng: np.random.Generator) -> list[Dataset]:
    """Split a dataset into equal, disjoint client shards.

    ``iid`` shuffles and splits evenly; ``one_label`` sorts by label and
    hands every client the data of exactly one digit (requires the client
    count to be a multiple of the label count and a class-balanced dataset).
    """
    n = len(train)
    if n % n_clients:
        raise ConfigurationError(
            f"{n} examples do not split evenly over {n_clients} clients")
    shard = n // n_clients
    if mode == IID:
        order = rng.permutation(n)
        return [train.subset(order[i * shard:(i + 1) * shard])
                for i in range(n_clients)]
    if mode == ONE_LABEL:
        if n_clients % N_CLASSES:
            raise ConfigurationError(
                f"one_label needs a multiple of {N_CLASSES} clients, got {n_clients}")
        counts = np.bincount(train.labels, minlength=N_CLASSES)
        if np.any(counts != n // N_CLASSES):
            raise ConfigurationError(
                "one_label requires equal class counts; "
                f"got {counts.tolist()}")
        order = np.argsort(train.labels, kind="stable")
        chunks = [order[i * shard:(i + 1) * shard] for i in range(n_clients)]
        # chunks are grouped per label; deal them to clients at random
        assignment = rng.permutation(n_clients)
        return [train.subset(chunks[assignment[c]]) for c in range(n_clients)]
    raise ConfigurationError(f"unknown partition mode {mode!r}")
