import os
from pathlib import Path

import numpy as np
import pytest

from csdp.data import Dataset, one_hot

REPO_ROOT = Path(__file__).resolve().parent.parent


def mnist_dir() -> Path:
    return Path(os.environ.get("CSDP_DATA_DIR", REPO_ROOT / "data")) / "mnist"


@pytest.fixture(scope="session")
def mnist_paths():
    base = mnist_dir()
    paths = {
        "train_images": base / "train-images-idx3-ubyte.gz",
        "train_labels": base / "train-labels-idx1-ubyte.gz",
        "test_images": base / "t10k-images-idx3-ubyte.gz",
        "test_labels": base / "t10k-labels-idx1-ubyte.gz",
    }
    missing = [str(p) for p in paths.values() if not p.exists()]
    if missing:
        pytest.fail(f"MNIST IDX files missing: {missing}; see README for setup")
    return paths


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def toy_dataset(n=32, dim=16, classes=10, seed=7, tag="train") -> Dataset:
    """Small synthetic dataset with class-dependent intensity structure."""
    gen = np.random.default_rng(seed)
    labels = gen.integers(0, classes, size=n)
    images = gen.random((n, dim)).astype(np.float32)
    images[np.arange(n), labels % dim] = 1.0
    return Dataset(images=images, labels=one_hot(labels, classes), tag=tag)
