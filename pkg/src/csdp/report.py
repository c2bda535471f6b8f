"""Matplotlib renderings saved next to the delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def training_curves(rows: list[dict], path: str | Path) -> None:
    """Validation accuracy, reconstruction BCE and sequence loss per epoch."""
    if not rows:
        return
    epochs = [r["epoch"] for r in rows]
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.2))
    axes[0].plot(epochs, [r["val_acc"] for r in rows], "o-")
    axes[0].set_ylabel("validation ACC (%)")
    axes[1].plot(epochs, [r["val_bce"] for r in rows], "o-", color="tab:red")
    axes[1].set_ylabel("validation BCE (nats)")
    axes[2].plot(epochs, [r["train_seq_loss"] for r in rows], "o-", color="tab:green")
    axes[2].set_ylabel("mean sequence loss (nats)")
    for ax in axes:
        ax.set_xlabel("epoch")
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def gray_figure(img, path: str | Path, title: str = "") -> None:
    """Save a [0, 1] grayscale array as a PNG figure."""
    if img.size == 0:
        return
    height, width = img.shape
    fig, ax = plt.subplots(figsize=(max(2.0, width / 56), max(2.0, height / 56)))
    ax.imshow(img, cmap="gray", vmin=0.0, vmax=1.0, interpolation="nearest")
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
