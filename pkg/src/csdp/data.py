"""Dataset ingestion, splits and on-the-fly negative-sample synthesis.

Images arrive in the classic IDX container (big-endian magic, dimension
sizes, raw bytes); ``.gz`` paths are decompressed transparently. Pixels are
normalized to [0, 1] by dividing by 255 and labels are one-hot encoded.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import DataFormatError, UsageError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


@dataclass
class Dataset:
    """Normalized images with aligned one-hot labels."""

    images: np.ndarray   # (N, D) float32 in [0, 1]
    labels: np.ndarray   # (N, C) one-hot float32
    tag: str = "train"

    @property
    def n(self) -> int:
        return self.images.shape[0]

    @property
    def classes(self) -> int:
        return self.labels.shape[1]

    @property
    def label_indices(self) -> np.ndarray:
        return np.argmax(self.labels, axis=1)

    def take(self, idx, tag: str | None = None) -> "Dataset":
        return Dataset(self.images[idx], self.labels[idx], tag or self.tag)


def _read_bytes(path: str | Path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def _parse_header(raw: bytes, expected_magic: int, ndim: int, path) -> tuple:
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise DataFormatError(f"{path}: truncated IDX header")
    magic = struct.unpack(">i", raw[:4])[0]
    if magic != expected_magic:
        raise DataFormatError(
            f"{path}: bad IDX magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
        )
    dims = struct.unpack(f">{ndim}i", raw[4:header])
    count = int(np.prod(dims))
    if len(raw) != header + count:
        raise DataFormatError(
            f"{path}: payload holds {len(raw) - header} bytes, expected {count}"
        )
    return dims, raw[header:]


def read_idx_images(path: str | Path) -> np.ndarray:
    """Raw (N, rows, cols) uint8 image stack from an IDX file."""
    dims, payload = _parse_header(_read_bytes(path), IMAGE_MAGIC, 3, path)
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def read_idx_labels(path: str | Path) -> np.ndarray:
    """Raw (N,) uint8 labels from an IDX file."""
    dims, payload = _parse_header(_read_bytes(path), LABEL_MAGIC, 1, path)
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def write_idx_images(path: str | Path, images: np.ndarray) -> None:
    images = np.ascontiguousarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise DataFormatError("image stack must be (N, rows, cols)")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">iiii", IMAGE_MAGIC, *images.shape))
        fh.write(images.tobytes())


def write_idx_labels(path: str | Path, labels: np.ndarray) -> None:
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    if labels.ndim != 1:
        raise DataFormatError("labels must be a flat vector")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">ii", LABEL_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes())


def one_hot(labels: np.ndarray, classes: int = 10) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise DataFormatError(
            f"label values outside 0..{classes - 1}: "
            f"[{labels.min()}, {labels.max()}]"
        )
    out = np.zeros((labels.shape[0], classes), dtype=np.float32)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def load_idx(images_path: str | Path, labels_path: str | Path,
             classes: int = 10, tag: str = "train") -> Dataset:
    """Load an aligned image/label IDX pair into a normalized Dataset."""
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise DataFormatError(
            f"{images_path} holds {images.shape[0]} images but "
            f"{labels_path} holds {labels.shape[0]} labels"
        )
    flat = images.reshape(images.shape[0], -1).astype(np.float32) / 255.0
    return Dataset(images=flat, labels=one_hot(labels, classes), tag=tag)


def split_validation(train: Dataset, per_class: int,
                     rng: np.random.Generator) -> tuple[Dataset, Dataset]:
    """Carve a class-balanced validation subset out of a training set.

    Exactly ``per_class`` samples of every class are drawn without
    replacement; the remainder keeps its original order.
    """
    if per_class == 0:
        return train.take(np.arange(train.n)), train.take(np.array([], dtype=int), "val")
    idx_by_class = train.label_indices
    chosen = []
    for c in range(train.classes):
        pool = np.flatnonzero(idx_by_class == c)
        if pool.size < per_class:
            raise DataFormatError(
                f"class {c} has only {pool.size} samples, need {per_class}"
            )
        chosen.append(rng.choice(pool, size=per_class, replace=False))
    val_idx = np.sort(np.concatenate(chosen))
    mask = np.ones(train.n, dtype=bool)
    mask[val_idx] = False
    return train.take(np.flatnonzero(mask)), train.take(val_idx, "val")


def negative_labels(y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """For each one-hot row, a uniformly random *different* one-hot class."""
    y = np.asarray(y)
    classes = y.shape[1]
    if classes < 2:
        raise UsageError("negative labels need at least two classes")
    correct = np.argmax(y, axis=1)
    wrong = (correct + rng.integers(1, classes, size=correct.shape[0])) % classes
    return one_hot(wrong, classes)


def rotate_image(flat: np.ndarray, angle_rad: float) -> np.ndarray:
    """Rotate a flattened square image counterclockwise about its center.

    Bilinear interpolation, zero fill outside the source frame.
    """
    side = int(round(np.sqrt(flat.shape[-1])))
    if side * side != flat.shape[-1]:
        raise UsageError(f"cannot rotate non-square image of {flat.shape[-1]} pixels")
    img = flat.reshape(side, side)
    out = ndimage.rotate(img, np.degrees(angle_rad), reshape=False, order=1,
                         mode="constant", cval=0.0, prefilter=False)
    return np.clip(out, 0.0, 1.0).reshape(-1).astype(flat.dtype)


def negative_patterns(x: np.ndarray, rng: np.random.Generator,
                      eta_mix: float = 0.55) -> np.ndarray:
    """Out-of-distribution patterns by mixing each image with a rotated partner.

    Every image is convexly combined (weight ``eta_mix`` on itself) with a
    different batch member rotated by an angle drawn from [pi/4, 7pi/4).
    """
    x = np.asarray(x)
    n = x.shape[0]
    if n < 2:
        raise UsageError("negative patterns need at least two images in the batch")
    if not 0.0 <= eta_mix <= 1.0:
        raise UsageError("eta_mix must lie in [0, 1]")
    partner = (np.arange(n) + rng.integers(1, n, size=n)) % n
    angles = rng.uniform(np.pi / 4, 7 * np.pi / 4, size=n)
    rotated = np.stack([rotate_image(x[j], a) for j, a in zip(partner, angles)])
    return (eta_mix * x + (1.0 - eta_mix) * rotated).astype(x.dtype)


@dataclass
class Batch:
    """Positive rows with their synthesized negative half appended."""

    x: np.ndarray                 # (2k, D)
    y_input: np.ndarray | None    # (2k, C) label drive, None when unsupervised
    y_type: np.ndarray            # (2k,) 1 for positive rows, 0 for negative
    y_class: np.ndarray           # (k, C) true labels of the positive rows

    @property
    def rows(self) -> int:
        return self.x.shape[0]


def batches(dataset: Dataset, batch_size: int, rng: np.random.Generator, *,
            supervised: bool, eta_mix: float = 0.55):
    """One shuffled epoch of batches, each with a matched negative half.

    Supervised mode duplicates the images under freshly sampled wrong
    labels; unsupervised mode mixes rotated partners (which needs batches
    of at least two, including a possible short final batch).
    """
    perm = rng.permutation(dataset.n)
    for start in range(0, dataset.n, batch_size):
        idx = perm[start:start + batch_size]
        x = dataset.images[idx]
        y = dataset.labels[idx]
        k = x.shape[0]
        if supervised:
            x_all = np.concatenate([x, x])
            y_all = np.concatenate([y, negative_labels(y, rng)])
        else:
            x_all = np.concatenate([x, negative_patterns(x, rng, eta_mix)])
            y_all = None
        y_type = np.concatenate([np.ones(k, dtype=np.float32),
                                 np.zeros(k, dtype=np.float32)])
        yield Batch(x=x_all, y_input=y_all, y_type=y_type, y_class=y)
