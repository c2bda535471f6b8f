"""Contrastive objective, its modulator, Hebbian-style updates and the optimizer.

The per-layer objective scores the squared activity trace against a fixed
threshold through a sigmoid ("goodness") and applies binary cross-entropy
against the sample polarity ``y_type`` (1 = in-distribution, 0 =
synthesized negative). Its exact derivative with respect to the trace has
the closed form ``2 z (p - y_type)``, which the tests gate against finite
differences rather than trusting the algebra.

Update helpers accept either single vectors (returning a plain outer
product form) or ``(rows, neurons)`` batches (returning the batch-mean
update computed by matrix algebra).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

def energy_logits(z: np.ndarray, theta_z: float) -> np.ndarray:
    """Squared-trace energy minus the goodness threshold, per row."""
    z = np.asarray(z)
    return np.sum(np.square(z), axis=-1) - theta_z


def probability_from_logits(a: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        p = 1.0 / (1.0 + np.exp(-a))
    fi = np.finfo(np.asarray(p).dtype)
    return np.clip(p, fi.tiny, 1.0 - fi.eps)


def loss_from_logits(a: np.ndarray, y_type) -> np.ndarray:
    y = np.asarray(y_type, dtype=np.result_type(a, np.float64))
    # log(1 + e^-a) and log(1 + e^a), kept stable through logaddexp
    return y * np.logaddexp(0.0, -a) + (1.0 - y) * np.logaddexp(0.0, a)


def goodness_probability(z: np.ndarray, theta_z: float) -> np.ndarray:
    """Probability that the trace energy exceeds the threshold, in (0, 1)."""
    return probability_from_logits(energy_logits(z, theta_z))


def contrastive_loss(z: np.ndarray, y_type, theta_z: float) -> np.ndarray:
    """Cross-entropy of the goodness probability against the sample polarity."""
    return loss_from_logits(energy_logits(z, theta_z), y_type)


def modulator(z: np.ndarray, y_type, theta_z: float) -> np.ndarray:
    """Derivative of the contrastive loss with respect to each trace value."""
    p = goodness_probability(z, theta_z)
    return modulator_from_probability(z, p, y_type)


def modulator_from_probability(z: np.ndarray, p, y_type) -> np.ndarray:
    z = np.asarray(z)
    gap = np.asarray(p - np.asarray(y_type))
    if z.ndim == 2:
        gap = gap[:, None]
    return 2.0 * z * gap


def synaptic_update(delta: np.ndarray, post_spikes: np.ndarray,
                    pre_spikes_prev: np.ndarray, r: float,
                    lambda_d: float) -> np.ndarray:
    """Modulated pre-synaptic-driven update with decay toward silent inputs.

    Per synapse: ``r * delta_i * pre_j + lambda_d * post_i * (1 - pre_j)``
    with the pre-synaptic spikes taken from the previous step. Batched
    inputs produce the mean update over rows.
    """
    delta = np.asarray(delta)
    post = np.asarray(post_spikes)
    pre = np.asarray(pre_spikes_prev)
    if delta.shape != post.shape:
        raise ConfigError(f"modulator shape {delta.shape} != post shape {post.shape}")
    if delta.ndim == 1:
        if pre.ndim != 1:
            raise ConfigError("mixed single/batch operands")
        return np.multiply.outer(r * delta, pre) + \
            np.multiply.outer(lambda_d * post, 1.0 - pre)
    if pre.shape[0] != delta.shape[0]:
        raise ConfigError(
            f"batch rows differ: pre {pre.shape[0]} vs post {delta.shape[0]}"
        )
    scaled = r * delta
    scaled -= lambda_d * post
    return fold_batch_update(scaled, pre, post.sum(axis=0), lambda_d)


def fold_batch_update(scaled: np.ndarray, pre: np.ndarray,
                      post_colsum: np.ndarray, lambda_d: float) -> np.ndarray:
    """Batch-mean of ``scaled_i pre_j + lambda_d post_i`` outer terms.

    ``scaled`` is ``r * delta - lambda_d * post`` row-wise; the decay term's
    pre-independent remainder enters through the column sums of ``post``.
    """
    n = scaled.shape[0]
    upd = scaled.T @ pre
    upd += lambda_d * post_colsum[:, None]
    upd /= n
    return upd


def error_update(error: np.ndarray, source_spikes: np.ndarray, r_e: float) -> np.ndarray:
    """Plain Hebbian correction: outer product of a scaled error with sources."""
    error = np.asarray(error)
    source = np.asarray(source_spikes)
    if error.ndim == 1:
        if source.ndim != 1:
            raise ConfigError("mixed single/batch operands")
        return np.multiply.outer(r_e * error, source)
    if source.shape[0] != error.shape[0]:
        raise ConfigError(
            f"batch rows differ: source {source.shape[0]} vs error {error.shape[0]}"
        )
    return (r_e / error.shape[0]) * (error.T @ source)


@dataclass
class OptimizerState:
    """Adam accumulators for one synaptic bundle."""

    m: np.ndarray
    v: np.ndarray
    step_size: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    scratch: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def for_params(cls, params: np.ndarray, step_size: float,
                   beta1: float = 0.9, beta2: float = 0.999,
                   eps: float = 1e-8) -> "OptimizerState":
        return cls(m=np.zeros_like(params), v=np.zeros_like(params),
                   step_size=step_size, beta1=beta1, beta2=beta2, eps=eps)


def apply_update(params: np.ndarray, update: np.ndarray, opt: OptimizerState,
                 bounds: tuple[float, float]) -> np.ndarray:
    """Descend ``update`` with Adam, then clamp into ``bounds``. In place."""
    if update.shape != params.shape:
        raise ConfigError(f"update shape {update.shape} != params {params.shape}")
    opt.t += 1
    b1, b2 = opt.beta1, opt.beta2
    if opt.scratch is None or opt.scratch.shape != params.shape:
        opt.scratch = np.empty_like(params)
    buf = opt.scratch
    opt.m *= b1
    np.multiply(update, params.dtype.type(1 - b1), out=buf)
    opt.m += buf
    opt.v *= b2
    np.multiply(update, update, out=buf)
    buf *= params.dtype.type(1 - b2)
    opt.v += buf
    # eta * m-hat / (sqrt(v-hat) + eps) with bias corrections folded into scalars
    c2 = np.sqrt(1 - b2 ** opt.t)
    scale = opt.step_size * c2 / (1 - b1 ** opt.t)
    np.sqrt(opt.v, out=buf)
    buf += params.dtype.type(opt.eps * c2)
    np.divide(opt.m, buf, out=buf)
    buf *= params.dtype.type(scale)
    params -= buf
    np.clip(params, bounds[0], bounds[1], out=params)
    return params
