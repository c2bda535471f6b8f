"""Bit-exact binary container for trained synapses and optimizer moments.

Layout: the magic ``CSDP``, a little-endian u32 format version, a JSON
architecture header, then named matrix records. Each record is a u16
name length, the UTF-8 name, u32 rows, u32 cols and row-major 32-bit
little-endian floats. Optimizer moments ride along as ``opt.m.*`` /
``opt.v.*`` records; per-bundle step counters live in the header.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .circuit import NetworkParams, bundle_shapes
from .errors import DataFormatError
from .lif import LayerWiring
from .plasticity import OptimizerState

MAGIC = b"CSDP"
VERSION = 1


def _pack_record(fh, name: str, arr: np.ndarray) -> None:
    if arr.ndim != 2:
        raise DataFormatError(f"record {name} must be a matrix, got {arr.shape}")
    raw = np.ascontiguousarray(arr, dtype="<f4")
    encoded = name.encode("utf-8")
    fh.write(struct.pack("<H", len(encoded)))
    fh.write(encoded)
    fh.write(struct.pack("<II", raw.shape[0], raw.shape[1]))
    fh.write(raw.tobytes())


def _read_exact(fh, n: int) -> bytes:
    raw = fh.read(n)
    if len(raw) != n:
        raise DataFormatError("checkpoint truncated")
    return raw


def _unpack_record(fh) -> tuple[str, np.ndarray]:
    (name_len,) = struct.unpack("<H", _read_exact(fh, 2))
    name = _read_exact(fh, name_len).decode("utf-8")
    rows, cols = struct.unpack("<II", _read_exact(fh, 8))
    data = np.frombuffer(_read_exact(fh, 4 * rows * cols), dtype="<f4")
    return name, data.reshape(rows, cols).copy()


def save_checkpoint(path: str | Path, params: NetworkParams, *, seed: int,
                    epoch: int,
                    opt: dict[str, OptimizerState] | None = None) -> None:
    header = {
        "input_dim": params.input_dim,
        "layer_sizes": list(params.layer_sizes),
        "classes": params.classes,
        "supervised": params.supervised,
        "seed": int(seed),
        "epoch": int(epoch),
        "adam": None,
    }
    records = [(name, arr) for name, arr, _ in params.bundles()]
    if opt is not None:
        any_state = next(iter(opt.values()))
        header["adam"] = {
            "step_size": any_state.step_size,
            "beta1": any_state.beta1,
            "beta2": any_state.beta2,
            "eps": any_state.eps,
            "t": {name: st.t for name, st in opt.items()},
        }
        for name, st in opt.items():
            records.append((f"opt.m.{name}", st.m))
            records.append((f"opt.v.{name}", st.v))
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(records)))
        for name, arr in records:
            _pack_record(fh, name, arr)


def load_checkpoint(path: str | Path):
    """Read a checkpoint; returns ``(params, meta, opt_or_None)``."""
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != MAGIC:
            raise DataFormatError(f"{path}: not a CSDP checkpoint")
        (version,) = struct.unpack("<I", _read_exact(fh, 4))
        if version != VERSION:
            raise DataFormatError(
                f"{path}: unsupported checkpoint version {version}, expected {VERSION}"
            )
        (hlen,) = struct.unpack("<I", _read_exact(fh, 4))
        header = json.loads(_read_exact(fh, hlen).decode("utf-8"))
        (n_records,) = struct.unpack("<I", _read_exact(fh, 4))
        matrices = dict(_unpack_record(fh) for _ in range(n_records))
        if fh.read(1):
            raise DataFormatError(f"{path}: trailing bytes after records")

    expected = bundle_shapes(header["input_dim"], tuple(header["layer_sizes"]),
                             header["classes"], header["supervised"])

    def grab(name):
        if name not in matrices:
            raise DataFormatError(f"{path}: missing record {name}")
        arr = matrices.pop(name)
        if arr.shape != expected[name]:
            raise DataFormatError(
                f"{path}: record {name} has shape {arr.shape}, expected {expected[name]}"
            )
        return arr

    depth = len(header["layer_sizes"])
    layers = []
    for i in range(1, depth + 1):
        layers.append(LayerWiring(
            w=grab(f"w{i}"),
            m=grab(f"m{i}"),
            v=grab(f"v{i}") if i < depth else None,
            b=grab(f"b{i}") if header["supervised"] else None))
    gen = [grab(f"g{i}") for i in range(1, depth + 1)]
    cls = [grab(f"a{i}") for i in range(1, depth + 1)]
    params = NetworkParams(input_dim=header["input_dim"],
                           layer_sizes=tuple(header["layer_sizes"]),
                           classes=header["classes"],
                           supervised=header["supervised"],
                           layers=layers, gen=gen, cls=cls)

    opt = None
    if header.get("adam"):
        adam = header["adam"]
        opt = {}
        for name, _, _ in params.bundles():
            m = matrices.pop(f"opt.m.{name}", None)
            v = matrices.pop(f"opt.v.{name}", None)
            if m is None or v is None:
                raise DataFormatError(f"{path}: missing optimizer moments for {name}")
            opt[name] = OptimizerState(m=m, v=v, step_size=adam["step_size"],
                                       beta1=adam["beta1"], beta2=adam["beta2"],
                                       eps=adam["eps"], t=int(adam["t"][name]))
    if matrices:
        raise DataFormatError(
            f"{path}: unexpected records {sorted(matrices)}"
        )
    meta = {"seed": header["seed"], "epoch": header["epoch"]}
    return params, meta, opt
