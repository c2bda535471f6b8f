"""Command-line entry points: train, eval, reconstruct, fields, encode."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import grids, report
from .checkpoint import load_checkpoint
from .circuit import run_window
from .config import RunConfig
from .errors import ConfigError, CsdpError
from .metrics import accuracy, reconstruction_bce
from .train import evaluate, evaluate_scan, seed_streams, train_run, validation_split

# (flag, RunConfig field, type)
_CONFIG_FLAGS = [
    ("--dt", "dt", float),
    ("--t-window", "t_window", float),
    ("--tau-m", "tau_m", float),
    ("--tau-tr", "tau_tr", float),
    ("--gamma", "gamma", float),
    ("--r-e", "r_e", float),
    ("--r-i", "r_i", float),
    ("--v-thr0", "v_thr0", float),
    ("--lambda-v", "lambda_v", float),
    ("--theta-z", "theta_z", float),
    ("--eta", "eta", float),
    ("--lambda-d", "lambda_d", float),
    ("--eta-mix", "eta_mix", float),
    ("--batch-size", "batch_size", int),
    ("--epochs", "epochs", int),
    ("--per-class-val", "per_class_val", int),
    ("--seed", "seed", int),
    ("--eval-batch-rows", "eval_batch_rows", int),
    ("--data-dir", "data_dir", str),
    ("--dataset", "dataset", str),
    ("--out", "out_dir", str),
]


def _str2bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def _layer_sizes(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.replace(" ", "").split(",") if tok)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {text!r}")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None,
                        help="JSON file of run settings; flags override it")
    for flag, field, typ in _CONFIG_FLAGS:
        parser.add_argument(flag, dest=field, type=typ, default=None)
    parser.add_argument("--supervised", dest="supervised", type=_str2bool,
                        default=None, metavar="BOOL")
    parser.add_argument("--layer-sizes", dest="layer_sizes", type=_layer_sizes,
                        default=None, metavar="J1,J2,...")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    fields = [f for _, f, _ in _CONFIG_FLAGS] + ["supervised", "layer_sizes"]
    for field in fields:
        value = getattr(args, field, None)
        if value is not None:
            setattr(cfg, field, value)
    return cfg.validate()


def dataset_paths(cfg: RunConfig, split: str) -> tuple[Path, Path]:
    """Locate the IDX pair for ``split`` ('train' or 't10k')."""
    base = Path(cfg.data_dir) / cfg.dataset
    tried = []
    for suffix in ("", ".gz"):
        images = base / f"{split}-images-idx3-ubyte{suffix}"
        labels = base / f"{split}-labels-idx1-ubyte{suffix}"
        tried += [images, labels]
        if images.exists() and labels.exists():
            return images, labels
    raise ConfigError(
        f"no {split} IDX files for dataset {cfg.dataset!r}; looked for "
        + ", ".join(str(p) for p in tried)
    )


def load_split(cfg: RunConfig, split: str) -> data_mod.Dataset:
    """Materialize 'train' (without validation rows), 'val' or 'test'."""
    if split == "test":
        images, labels = dataset_paths(cfg, "t10k")
        return data_mod.load_idx(images, labels, cfg.classes, tag="test")
    images, labels = dataset_paths(cfg, "train")
    full = data_mod.load_idx(images, labels, cfg.classes, tag="train")
    if split == "full-train":
        return full
    train, val = validation_split(full, cfg)
    return {"train": train, "val": val}[split]


def _load_model(args, cfg: RunConfig):
    params, meta, _ = load_checkpoint(args.checkpoint)
    cfg.layer_sizes = params.layer_sizes
    cfg.supervised = params.supervised
    cfg.input_dim = params.input_dim
    cfg.classes = params.classes
    if getattr(args, "seed", None) is None and args.config is None:
        cfg.seed = meta["seed"]
    return params, meta


def _limit(ds: data_mod.Dataset, limit: int | None) -> data_mod.Dataset:
    if limit is None or limit >= ds.n:
        return ds
    return ds.take(np.arange(limit))


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    images, labels = dataset_paths(cfg, "train")
    full = data_mod.load_idx(images, labels, cfg.classes, tag="train")
    train_ds, val_ds = validation_split(full, cfg)
    print(f"training on {train_ds.n} samples, validating on {val_ds.n} "
          f"({'supervised' if cfg.supervised else 'unsupervised'}, "
          f"layers {cfg.layer_sizes}, T={cfg.t_window} ms)")
    result = train_run(cfg, train_ds, val_ds, cfg.out_dir)
    print(f"final checkpoint: {result['checkpoint']}")
    return 0


def cmd_eval(args) -> int:
    cfg = resolve_config(args)
    params, _ = _load_model(args, cfg)
    ds = _limit(load_split(cfg, args.split), args.limit)
    if ds.images.shape[1] != params.input_dim:
        raise ConfigError(
            f"checkpoint expects {params.input_dim}-pixel inputs but "
            f"{args.split} split provides {ds.images.shape[1]}"
        )
    eval_seed = seed_streams(cfg.seed)["eval"]
    if args.mode == "fast":
        result = evaluate(params, cfg, ds, eval_seed)
    else:
        result = evaluate_scan(params, cfg, ds, eval_seed)
    result.update({"split": args.split, "mode": args.mode, "samples": ds.n})
    print(json.dumps(result, sort_keys=True))
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"eval_{args.split}_{args.mode}.json").write_text(
        json.dumps(result, sort_keys=True, indent=2) + "\n")
    return 0


def cmd_reconstruct(args) -> int:
    cfg = resolve_config(args)
    params, _ = _load_model(args, cfg)
    ds = load_split(cfg, args.split)
    rng = np.random.default_rng(seed_streams(cfg.seed)["eval"])
    count = args.count
    if count > ds.n:
        raise ConfigError(f"asked for {count} samples but split holds {ds.n}")
    side = int(round(np.sqrt(params.input_dim)))
    picks = np.sort(rng.choice(ds.n, size=count, replace=False)) if count else []
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if count:
        x = ds.images[picks]
        x_hat = run_window(params, cfg, x, rng, y_input=None,
                           mode="infer").reconstruction
        grid = grids.interleave_pairs(x.reshape(-1, side, side),
                                      x_hat.reshape(-1, side, side))
        print(f"reconstruction BCE over {count} samples: "
              f"{reconstruction_bce(x, x_hat):.2f} nats")
    else:
        grid = np.zeros((side, 0))
    grids.write_pgm(out / "reconstructions.pgm", grids.to_bytes(grid))
    report.gray_figure(grid, out / "reconstructions.png",
                       "original / reconstruction pairs")
    print(f"wrote {out / 'reconstructions.pgm'}")
    return 0


def cmd_fields(args) -> int:
    cfg = resolve_config(args)
    params, _ = _load_model(args, cfg)
    w1 = params.layers[0].w
    if args.count > w1.shape[0]:
        raise ConfigError(
            f"asked for {args.count} receptive fields but layer 1 has {w1.shape[0]}"
        )
    rng = np.random.default_rng(seed_streams(cfg.seed)["eval"])
    picks = np.sort(rng.choice(w1.shape[0], size=args.count, replace=False))
    side = int(round(np.sqrt(params.input_dim)))
    tiles = grids.minmax_rows(w1[picks]).reshape(-1, side, side)
    grid = grids.tile_grid(tiles) if args.count else np.zeros((side, 0))
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grids.write_pgm(out / "receptive_fields.pgm", grids.to_bytes(grid))
    report.gray_figure(grid, out / "receptive_fields.png", "layer-1 receptive fields")
    print(f"wrote {out / 'receptive_fields.pgm'}")
    return 0


def cmd_encode(args) -> int:
    cfg = resolve_config(args)
    params, _ = _load_model(args, cfg)
    ds = _limit(load_split(cfg, args.split), args.limit)
    rng = np.random.default_rng(seed_streams(cfg.seed)["eval"])
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "rate_codes.csv"
    truth = ds.label_indices
    rows_per = max(1, cfg.eval_batch_rows)
    with open(path, "w") as fh:
        for start in range(0, ds.n, rows_per):
            x = ds.images[start:start + rows_per]
            rates = run_window(params, cfg, x, rng, y_input=None,
                               mode="infer").top_rate
            for row, label in zip(rates, truth[start:start + x.shape[0]]):
                fh.write(",".join(f"{val:.6f}" for val in row)
                         + f",{int(label)}\n")
    print(f"wrote {ds.n} rate codes to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csdp",
        description="Recurrent spiking networks with contrastive "
                    "signal-dependent plasticity")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model and log metrics")
    _add_config_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="score a checkpoint on a split")
    _add_config_flags(p_eval)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--split", choices=("train", "val", "test", "full-train"),
                        default="test")
    p_eval.add_argument("--mode", choices=("fast", "scan"), default="fast")
    p_eval.add_argument("--limit", type=int, default=None)
    p_eval.set_defaults(func=cmd_eval)

    p_rec = sub.add_parser("reconstruct", help="export original/reconstruction grid")
    _add_config_flags(p_rec)
    p_rec.add_argument("--checkpoint", required=True)
    p_rec.add_argument("--split", choices=("train", "val", "test"), default="test")
    p_rec.add_argument("--count", type=int, default=10)
    p_rec.set_defaults(func=cmd_reconstruct)

    p_fld = sub.add_parser("fields", help="export layer-1 receptive field grid")
    _add_config_flags(p_fld)
    p_fld.add_argument("--checkpoint", required=True)
    p_fld.add_argument("--count", type=int, default=100)
    p_fld.set_defaults(func=cmd_fields)

    p_enc = sub.add_parser("encode", help="export top-layer rate codes as CSV")
    _add_config_flags(p_enc)
    p_enc.add_argument("--checkpoint", required=True)
    p_enc.add_argument("--split", choices=("train", "val", "test"), default="test")
    p_enc.add_argument("--limit", type=int, default=None)
    p_enc.set_defaults(func=cmd_encode)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CsdpError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
