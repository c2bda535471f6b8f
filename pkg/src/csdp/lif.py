"""Stateless transition functions for one layer of leaky integrate-and-fire cells.

Every function maps previous-step values to next-step values and owns no
state, so layers (and batch rows) can be advanced concurrently. Inputs may
be single vectors or ``(rows, neurons)`` batches; thresholds may be scalars
or per-row columns.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, InputError, NumericError


class LayerWiring:
    """Synaptic bundles feeding one layer.

    ``w`` projects from the layer below, ``v`` (optional) from the layer
    above, ``m`` laterally within the layer and ``b`` (optional) from the
    class-context spikes. Only the hollow part of ``m`` (off-diagonal) ever
    carries current.
    """

    __slots__ = ("w", "v", "m", "b")

    def __init__(self, w: np.ndarray, m: np.ndarray,
                 v: np.ndarray | None = None, b: np.ndarray | None = None):
        if w.ndim != 2 or m.ndim != 2:
            raise ConfigError("wiring matrices must be 2-D")
        if m.shape[0] != m.shape[1] or m.shape[0] != w.shape[0]:
            raise ConfigError(
                f"lateral matrix {m.shape} does not match layer size {w.shape[0]}"
            )
        if v is not None and v.shape[0] != w.shape[0]:
            raise ConfigError(f"top-down matrix {v.shape} does not match layer size")
        if b is not None and b.shape[0] != w.shape[0]:
            raise ConfigError(f"class matrix {b.shape} does not match layer size")
        self.w = w
        self.v = v
        self.m = m
        self.b = b

    @property
    def size(self) -> int:
        return self.w.shape[0]


def hollow_lateral(m: np.ndarray) -> np.ndarray:
    """Lateral matrix with its diagonal zeroed; only cross-inhibition acts."""
    h = m.copy()
    np.fill_diagonal(h, 0)
    return h


def compute_current(s_below: np.ndarray, s_above: np.ndarray | None,
                    s_self: np.ndarray, s_label: np.ndarray | None,
                    wiring: LayerWiring, r_e: float, r_i: float) -> np.ndarray:
    """Electrical current injected into the layer for one step.

    j = R_E W s_below + R_E V s_above - R_I (M with zero diagonal) s_self
    plus R_E B s_label when class context is present. Absent terms
    contribute zero.
    """
    if r_e < 0 or r_i < 0:
        raise ConfigError("resistances must be non-negative")
    if s_below.shape[-1] != wiring.w.shape[1]:
        raise ConfigError(
            f"bottom-up spikes of width {s_below.shape[-1]} do not match W {wiring.w.shape}"
        )
    j = r_e * (s_below @ wiring.w.T)
    if s_above is not None:
        if wiring.v is None:
            raise ConfigError("top-down spikes supplied but layer has no V bundle")
        if s_above.shape[-1] != wiring.v.shape[1]:
            raise ConfigError(
                f"top-down spikes of width {s_above.shape[-1]} do not match V {wiring.v.shape}"
            )
        j = j + r_e * (s_above @ wiring.v.T)
    if s_self.shape[-1] != wiring.m.shape[0]:
        raise ConfigError(
            f"lateral spikes of width {s_self.shape[-1]} do not match M {wiring.m.shape}"
        )
    j = j - r_i * (s_self @ hollow_lateral(wiring.m).T)
    if s_label is not None:
        if wiring.b is None:
            raise ConfigError("label spikes supplied but layer has no B bundle")
        if s_label.shape[-1] != wiring.b.shape[1]:
            raise ConfigError(
                f"label spikes of width {s_label.shape[-1]} do not match B {wiring.b.shape}"
            )
        j = j + r_e * (s_label @ wiring.b.T)
    return j


def integrate_voltage(v: np.ndarray, j: np.ndarray, dt: float, tau_m: float) -> np.ndarray:
    """Leaky integration: v + (dt/tau_m)(-v + j)."""
    if dt <= 0 or tau_m <= 0:
        raise ConfigError("dt and tau_m must be positive")
    out = v + (dt / tau_m) * (j - v)
    # min/max propagate NaN and inf, sparing a full boolean scan
    if out.size and not (np.isfinite(out.min()) and np.isfinite(out.max())):
        raise NumericError("membrane voltage became non-finite")
    return out


def emit_spikes(v_hat, v_thr):
    """Threshold crossing with depolarization.

    Returns ``(spikes, v_reset)`` where a spike fires on strict
    ``v_hat > v_thr`` and fired cells are reset to zero.
    """
    v_hat = np.asarray(v_hat)
    fired = v_hat > v_thr
    return fired.astype(v_hat.dtype), np.where(fired, v_hat.dtype.type(0), v_hat)


def adapt_threshold(v_thr, spike_count, lambda_v: float):
    """Homeostatic threshold shift toward one spike per step, floored at zero."""
    return np.maximum(0, v_thr + lambda_v * (np.asarray(spike_count) - 1))


def update_trace(z: np.ndarray, s: np.ndarray, dt: float, tau_tr: float,
                 gamma: float) -> np.ndarray:
    """Low-pass activity trace: z + (dt/tau_tr)(-z + gamma s)."""
    if tau_tr <= 0:
        raise ConfigError("tau_tr must be positive")
    return z + (dt / tau_tr) * (gamma * s - z)


def encode_bernoulli(x: np.ndarray, rng: np.random.Generator,
                     dtype=np.float32) -> np.ndarray:
    """Draw one binary spike frame with per-element probabilities ``x``."""
    x = np.asarray(x)
    if x.size and (x.min() < 0 or x.max() > 1):
        raise InputError("pixel intensities must lie in [0, 1]")
    u = rng.random(x.shape, dtype=np.float32)
    return (u < x).astype(dtype)
