"""Evaluation metrics and the line-delimited metrics log."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def accuracy(labels_onehot: np.ndarray, probs: np.ndarray) -> float:
    """Percent of rows whose argmax prediction matches the argmax label.

    Ties resolve to the lowest index on both sides.
    """
    truth = np.argmax(labels_onehot, axis=1)
    pred = np.argmax(probs, axis=1)
    return 100.0 * float(np.mean(truth == pred))


def reconstruction_bce(x: np.ndarray, x_hat: np.ndarray,
                       eps: float = 1e-6) -> float:
    """Mean per-image pixel-summed binary cross-entropy, in nats.

    Reconstructions are clamped to [eps, 1-eps] before the logs.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    q = np.clip(np.atleast_2d(np.asarray(x_hat, dtype=np.float64)), eps, 1.0 - eps)
    per_image = -np.sum(x * np.log(q) + (1.0 - x) * np.log1p(-q), axis=1)
    return float(per_image.mean())


def append_metrics_row(path: str | Path, row: dict) -> None:
    with open(path, "a") as fh:
        fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_metrics(path: str | Path) -> list[dict]:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line:
            rows.append(json.loads(line))
    return rows
