"""Training driver: epochs of batched windows, per-epoch metrics and checkpoints."""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import report
from .checkpoint import save_checkpoint
from .circuit import NetworkParams, classify_scan, init_params, run_window, softmax
from .config import RunConfig
from .errors import NumericError
from .metrics import accuracy, append_metrics_row, reconstruction_bce
from .plasticity import OptimizerState


def make_optimizer(params: NetworkParams, cfg: RunConfig) -> dict[str, OptimizerState]:
    return {
        name: OptimizerState.for_params(arr, cfg.eta, cfg.adam_beta1,
                                        cfg.adam_beta2, cfg.adam_eps)
        for name, arr, _ in params.bundles()
    }


def seed_streams(seed: int) -> dict[str, np.random.SeedSequence]:
    """Independent child sequences for each source of randomness."""
    children = np.random.SeedSequence(seed).spawn(5)
    return dict(zip(("init", "data", "encode", "eval", "split"), children))


def validation_split(full_train: data_mod.Dataset, cfg: RunConfig):
    """The run's train/validation partition, reproducible from the seed alone."""
    rng = np.random.default_rng(seed_streams(cfg.seed)["split"])
    return data_mod.split_validation(full_train, cfg.per_class_val, rng)


def evaluate(params: NetworkParams, cfg: RunConfig, ds: data_mod.Dataset,
             eval_seed: np.random.SeedSequence,
             t_window: float | None = None) -> dict:
    """Label-free accuracy (fast readout) and reconstruction BCE on a dataset.

    The evaluation RNG restarts from the same seed sequence every call, so
    scores from different epochs see identical input spike noise.
    """
    rng = np.random.default_rng(eval_seed)
    n = ds.n
    prob_chunks = []
    bce_terms = []
    rows_per = max(1, cfg.eval_batch_rows)
    for start in range(0, n, rows_per):
        x = ds.images[start:start + rows_per]
        res = run_window(params, cfg, x, rng, y_input=None, mode="infer",
                         t_window=t_window)
        prob_chunks.append(softmax(res.class_counts))
        bce_terms.append(reconstruction_bce(x, res.reconstruction) * x.shape[0])
    probs = np.concatenate(prob_chunks)
    return {
        "acc": accuracy(ds.labels, probs),
        "bce": float(np.sum(bce_terms) / n),
    }


def evaluate_scan(params: NetworkParams, cfg: RunConfig, ds: data_mod.Dataset,
                  eval_seed: np.random.SeedSequence,
                  t_window: float | None = None) -> dict:
    """Accuracy through the label-scan procedure (one window per class)."""
    rng = np.random.default_rng(eval_seed)
    hits = 0
    rows_per = max(1, cfg.eval_batch_rows)
    for start in range(0, ds.n, rows_per):
        x = ds.images[start:start + rows_per]
        pred = classify_scan(params, cfg, x, rng, t_window=t_window)
        truth = np.argmax(ds.labels[start:start + rows_per], axis=1)
        hits += int(np.sum(pred == truth))
    return {"acc": 100.0 * hits / ds.n}


def train_run(cfg: RunConfig, train_ds: data_mod.Dataset,
              val_ds: data_mod.Dataset | None, out_dir: str | Path,
              log=print) -> dict:
    """Run the full training schedule and leave all artifacts in ``out_dir``.

    Per epoch: one shuffled pass of batches (each with its negative half),
    a metrics row on the validation set, and a checkpoint. Aborts on
    non-finite synapses, keeping the last epoch's checkpoint on disk.
    """
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / "config.json")
    metrics_path = out / "metrics.jsonl"
    metrics_path.write_text("")

    streams = seed_streams(cfg.seed)
    rng_init = np.random.default_rng(streams["init"])
    rng_data = np.random.default_rng(streams["data"])
    rng_encode = np.random.default_rng(streams["encode"])

    params = init_params(cfg.input_dim, cfg.layer_sizes, cfg.classes,
                         cfg.supervised, rng_init)
    opt = make_optimizer(params, cfg)

    rows = []
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.time()
        seq_sum, seq_rows = 0.0, 0
        for batch in data_mod.batches(train_ds, cfg.batch_size, rng_data,
                                      supervised=cfg.supervised,
                                      eta_mix=cfg.eta_mix):
            res = run_window(params, cfg, batch.x, rng_encode,
                             y_input=batch.y_input, y_type=batch.y_type,
                             mode="learn", opt=opt, y_class=batch.y_class)
            seq_sum += float(res.seq_loss.sum())
            seq_rows += batch.rows
            if not np.all(np.isfinite(params.layers[0].w)):
                raise NumericError(
                    f"synapses diverged in epoch {epoch}; "
                    f"last good checkpoint is epoch {epoch - 1}"
                )
        row = {"epoch": epoch, "train_seq_loss": seq_sum / max(1, seq_rows)}
        if val_ds is not None and val_ds.n:
            row.update({f"val_{k}": v
                        for k, v in evaluate(params, cfg, val_ds,
                                             streams["eval"]).items()})
        append_metrics_row(metrics_path, row)
        rows.append(row)
        save_checkpoint(out / f"ckpt_epoch_{epoch:03d}.csdp", params,
                        seed=cfg.seed, epoch=epoch, opt=opt)
        log(f"epoch {epoch:3d}/{cfg.epochs}  "
            f"seq_loss {row['train_seq_loss']:9.4f}  "
            f"val_acc {row.get('val_acc', float('nan')):6.2f}%  "
            f"val_bce {row.get('val_bce', float('nan')):8.2f}  "
            f"({time.time() - t0:6.1f}s)")

    final_path = out / "model.csdp"
    save_checkpoint(final_path, params, seed=cfg.seed, epoch=cfg.epochs, opt=opt)
    if rows and "val_acc" in rows[0]:
        report.training_curves(rows, out / "curves.png")
    return {"params": params, "opt": opt, "rows": rows,
            "checkpoint": final_path, "metrics": metrics_path}
