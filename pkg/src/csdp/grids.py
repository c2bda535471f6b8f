"""Grayscale grid assembly and portable graymap (PGM) output."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import DataFormatError


def to_bytes(img: np.ndarray) -> np.ndarray:
    """Map [0, 1] intensities to 8-bit gray values."""
    return np.round(255.0 * np.clip(img, 0.0, 1.0)).astype(np.uint8)


def write_pgm(path: str | Path, img: np.ndarray) -> None:
    """Binary 8-bit PGM. A zero-width image still gets a valid header."""
    img = np.atleast_2d(np.asarray(img, dtype=np.uint8))
    height, width = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5" or parts[2] != b"255":
        raise DataFormatError(f"{path}: not an 8-bit binary PGM")
    width, height = (int(tok) for tok in parts[1].split())
    data = np.frombuffer(parts[3], dtype=np.uint8)
    if data.size != width * height:
        raise DataFormatError(f"{path}: pixel payload does not match header")
    return data.reshape(height, width)


def minmax_rows(mat: np.ndarray) -> np.ndarray:
    """Normalize each row to [0, 1]; constant rows map to all 0.5."""
    mat = np.asarray(mat, dtype=np.float64)
    lo = mat.min(axis=1, keepdims=True)
    hi = mat.max(axis=1, keepdims=True)
    span = hi - lo
    flat = span[:, 0] == 0
    span[flat] = 1.0
    out = (mat - lo) / span
    out[flat] = 0.5
    return out


def tile_grid(tiles: np.ndarray, cols: int | None = None) -> np.ndarray:
    """Pack (n, h, w) tiles row-major into one image, padding gaps with zero."""
    tiles = np.asarray(tiles)
    n, h, w = tiles.shape
    if cols is None:
        cols = int(np.ceil(np.sqrt(n)))
    rows = int(np.ceil(n / cols))
    grid = np.zeros((rows * h, cols * w), dtype=tiles.dtype)
    for k in range(n):
        r, c = divmod(k, cols)
        grid[r * h:(r + 1) * h, c * w:(c + 1) * w] = tiles[k]
    return grid


def interleave_pairs(originals: np.ndarray, reconstructions: np.ndarray) -> np.ndarray:
    """One-row strip alternating original and reconstruction columns."""
    originals = np.asarray(originals)
    reconstructions = np.asarray(reconstructions)
    if originals.shape != reconstructions.shape:
        raise DataFormatError("original and reconstruction stacks differ in shape")
    n, h, w = originals.shape
    if n == 0:
        return np.zeros((h, 0), dtype=originals.dtype)
    paired = np.empty((2 * n, h, w), dtype=originals.dtype)
    paired[0::2] = originals
    paired[1::2] = reconstructions
    return tile_grid(paired, cols=2 * n)
