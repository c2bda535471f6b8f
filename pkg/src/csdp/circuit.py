"""Full recurrent circuit: stacked LIF layers plus generative and classifier heads.

Within one simulated step every hidden layer reads only previous-step
spikes of its neighbours (the fresh input and label frames are drawn
before any layer advances), so the order in which layers are evaluated
never changes the outcome. Predictor and classifier heads then read the
completed step's spikes behind a barrier, and plasticity finally turns the
step's activity into per-bundle batch-mean updates.

State advances in place for throughput; ``NetworkState.copy`` gives the
snapshot semantics the order-independence tests rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lif
from .config import RunConfig, window_steps
from .errors import ConfigError, NumericError, UsageError
from .lif import LayerWiring
from .plasticity import (OptimizerState, apply_update, error_update,
                         fold_batch_update, loss_from_logits,
                         modulator_from_probability, probability_from_logits)


@dataclass
class NetworkParams:
    """Every synaptic bundle of the circuit."""

    input_dim: int
    layer_sizes: tuple[int, ...]
    classes: int
    supervised: bool
    layers: list[LayerWiring]
    gen: list[np.ndarray]
    cls: list[np.ndarray]

    @property
    def depth(self) -> int:
        return len(self.layer_sizes)

    @property
    def level_sizes(self) -> tuple[int, ...]:
        return (self.input_dim, *self.layer_sizes)

    def bundles(self):
        """Yield ``(name, array, kind)`` for every plastic bundle.

        ``kind`` is ``"lateral"`` for the non-negative lateral matrices and
        ``"signed"`` for everything else.
        """
        for i, wiring in enumerate(self.layers, start=1):
            yield f"w{i}", wiring.w, "signed"
            if wiring.v is not None:
                yield f"v{i}", wiring.v, "signed"
            yield f"m{i}", wiring.m, "lateral"
            if wiring.b is not None:
                yield f"b{i}", wiring.b, "signed"
        for i, g in enumerate(self.gen, start=1):
            yield f"g{i}", g, "signed"
        for i, a in enumerate(self.cls, start=1):
            yield f"a{i}", a, "signed"

    def bundle(self, name: str) -> np.ndarray:
        for n, arr, _ in self.bundles():
            if n == name:
                return arr
        raise KeyError(name)


def bundle_shapes(input_dim: int, layer_sizes, classes: int,
                  supervised: bool) -> dict[str, tuple[int, int]]:
    """Expected (rows, cols) for every bundle of the given architecture."""
    sizes = (input_dim, *layer_sizes)
    depth = len(layer_sizes)
    shapes: dict[str, tuple[int, int]] = {}
    for i in range(depth):
        shapes[f"w{i + 1}"] = (layer_sizes[i], sizes[i])
        if i < depth - 1:
            shapes[f"v{i + 1}"] = (layer_sizes[i], layer_sizes[i + 1])
        shapes[f"m{i + 1}"] = (layer_sizes[i], layer_sizes[i])
        if supervised:
            shapes[f"b{i + 1}"] = (layer_sizes[i], classes)
    for i in range(depth):
        shapes[f"g{i + 1}"] = (sizes[i], layer_sizes[i])
    for i in range(depth):
        shapes[f"a{i + 1}"] = (classes, layer_sizes[i])
    return shapes


def init_params(input_dim: int, layer_sizes, classes: int, supervised: bool,
                rng: np.random.Generator, dtype=np.float32) -> NetworkParams:
    """Fresh synapses: signed bundles from U(-1, 1), lateral from U(0, 1)."""
    layer_sizes = tuple(int(j) for j in layer_sizes)
    sizes = (input_dim, *layer_sizes)
    depth = len(layer_sizes)

    def signed(rows, cols):
        return rng.uniform(-1.0, 1.0, size=(rows, cols)).astype(dtype)

    layers = []
    for i in range(depth):
        w = signed(layer_sizes[i], sizes[i])
        v = signed(layer_sizes[i], layer_sizes[i + 1]) if i < depth - 1 else None
        m = rng.uniform(0.0, 1.0, size=(layer_sizes[i], layer_sizes[i])).astype(dtype)
        b = signed(layer_sizes[i], classes) if supervised else None
        layers.append(LayerWiring(w=w, m=m, v=v, b=b))
    gen = [signed(sizes[i], layer_sizes[i]) for i in range(depth)]
    cls = [signed(classes, layer_sizes[i]) for i in range(depth)]
    return NetworkParams(input_dim=input_dim, layer_sizes=layer_sizes,
                         classes=classes, supervised=supervised,
                         layers=layers, gen=gen, cls=cls)


@dataclass
class NetworkState:
    """Dynamical variables for a batch of independently simulated rows."""

    j: list
    v: list
    s: list
    z: list
    v_thr: list
    s0: np.ndarray
    sy: np.ndarray | None
    v_mu: list
    s_mu: list
    v_y: np.ndarray
    mu_y: np.ndarray
    v_thr_y: np.ndarray
    z0_mu: np.ndarray
    t: int = 0

    def copy(self) -> "NetworkState":
        cp = lambda a: None if a is None else a.copy()
        return NetworkState(
            j=[cp(a) for a in self.j], v=[cp(a) for a in self.v],
            s=[cp(a) for a in self.s], z=[cp(a) for a in self.z],
            v_thr=[cp(a) for a in self.v_thr], s0=cp(self.s0), sy=cp(self.sy),
            v_mu=[cp(a) for a in self.v_mu], s_mu=[cp(a) for a in self.s_mu],
            v_y=cp(self.v_y), mu_y=cp(self.mu_y), v_thr_y=cp(self.v_thr_y),
            z0_mu=cp(self.z0_mu), t=self.t)


def zero_state(params: NetworkParams, rows: int, cfg: RunConfig) -> NetworkState:
    """Rest state for a fresh stimulus window: everything silent, thresholds at base."""
    dtype = params.layers[0].w.dtype
    sizes = params.layer_sizes
    levels = params.level_sizes
    mk = lambda n: np.zeros((rows, n), dtype=dtype)
    return NetworkState(
        j=[mk(n) for n in sizes], v=[mk(n) for n in sizes],
        s=[mk(n) for n in sizes], z=[mk(n) for n in sizes],
        v_thr=[np.full(rows, cfg.v_thr0, dtype=dtype) for _ in sizes],
        s0=mk(params.input_dim),
        sy=mk(params.classes) if params.supervised else None,
        v_mu=[mk(levels[i]) for i in range(params.depth)],
        s_mu=[mk(levels[i]) for i in range(params.depth)],
        v_y=mk(params.classes), mu_y=mk(params.classes),
        v_thr_y=np.full(rows, cfg.v_thr0, dtype=dtype),
        z0_mu=mk(params.input_dim), t=0)


@dataclass
class StepReport:
    """Per-step diagnostics, batch means unless stated otherwise."""

    goodness: np.ndarray          # (L,) goodness probability per layer
    loss: np.ndarray              # (L,) contrastive loss per layer, nats
    mismatch: np.ndarray          # (L,) 0.5 ||prediction - actual||^2 per level below
    f: float                      # system objective: losses plus mismatches
    f_rows: np.ndarray            # (rows,) same, per batch row
    energy_rows: np.ndarray       # (rows,) total squared trace energy
    mu_y: np.ndarray | None = None  # (rows, C) classifier spikes when collected


def step(params: NetworkParams, state: NetworkState, cfg: RunConfig,
         s0: np.ndarray, s_label: np.ndarray | None, y_type,
         mode: str = "infer", opt: dict[str, OptimizerState] | None = None,
         y_class: np.ndarray | None = None, layer_order=None,
         collect_mu: bool = False):
    """Advance the whole circuit by one integration step.

    Returns ``(report, updates)`` where ``updates`` maps bundle names to
    batch-mean gradient matrices in learn mode and is ``None`` otherwise.
    When ``opt`` is given the updates are also applied (with bounds).
    ``y_class`` carries the true one-hot labels for the leading rows and
    feeds only the classifier-head updates.
    """
    if mode not in ("infer", "learn"):
        raise UsageError(f"unknown mode {mode!r}")
    learn = mode == "learn"
    depth = params.depth
    r_i = cfg.resolved_r_i
    if learn and params.supervised and s_label is None:
        raise UsageError("supervised learning step requires label spikes")
    if s_label is not None and not params.supervised:
        raise UsageError("label spikes supplied to an unsupervised circuit")

    rows = s0.shape[0]
    y_arr = np.asarray(y_type, dtype=s0.dtype)
    if y_arr.ndim == 0:
        y_arr = np.full(rows, float(y_arr), dtype=s0.dtype)

    order = list(range(depth)) if layer_order is None else list(layer_order)
    if sorted(order) != list(range(depth)):
        raise ConfigError(f"layer_order must be a permutation of 0..{depth - 1}")

    prev_s = list(state.s)
    s0_prev, sy_prev = state.s0, state.sy

    # phase A: every layer advances from previous-step spikes
    for i in order:
        wiring = params.layers[i]
        below = s0 if i == 0 else prev_s[i - 1]
        above = prev_s[i + 1] if i < depth - 1 else None
        label = s_label if wiring.b is not None and s_label is not None else None
        try:
            cur = lif.compute_current(below, above, prev_s[i], label,
                                      wiring, cfg.r_e, r_i)
            v_hat = lif.integrate_voltage(state.v[i], cur, cfg.dt, cfg.tau_m)
        except NumericError as err:
            raise NumericError(f"layer {i + 1}: {err}") from None
        s_new, v_new = lif.emit_spikes(v_hat, state.v_thr[i][:, None])
        state.v_thr[i] = lif.adapt_threshold(state.v_thr[i], s_new.sum(axis=1),
                                             cfg.lambda_v)
        state.z[i] = lif.update_trace(state.z[i], s_new, cfg.dt, cfg.tau_tr,
                                      cfg.gamma)
        state.j[i], state.v[i], state.s[i] = cur, v_new, s_new

    # phase B: heads read the completed step's spikes
    mismatch_err = []
    for i in range(depth):
        below_now = s0 if i == 0 else state.s[i - 1]
        _, err = predictor_step(params, state, cfg, i, below_now)
        mismatch_err.append(err)

    decay = cfg.dt / cfg.tau_tr
    s_mu0 = state.s_mu[0]
    state.z0_mu = (state.z0_mu - decay * state.z0_mu) * (1 - s_mu0) + s_mu0

    drive_y = cfg.r_e * sum(state.s[i] @ params.cls[i].T for i in range(depth))
    v_hat_y = lif.integrate_voltage(state.v_y, drive_y, cfg.dt, cfg.tau_m)
    state.mu_y, state.v_y = lif.emit_spikes(v_hat_y, state.v_thr_y[:, None])
    state.v_thr_y = lif.adapt_threshold(state.v_thr_y, state.mu_y.sum(axis=1),
                                        cfg.lambda_v)

    # diagnostics; the learn phase reuses the same per-row probabilities
    y64 = y_arr.astype(np.float64)
    probs_mean, losses_mean, mism_mean = [], [], []
    p_rows = []
    energy_rows = np.zeros(rows)
    f_rows = np.zeros(rows)
    for i in range(depth):
        z = state.z[i]
        energy = np.einsum("ij,ij->i", z, z, dtype=np.float64)
        logits = energy - cfg.theta_z
        p = probability_from_logits(logits)
        loss = loss_from_logits(logits, y64)
        err = mismatch_err[i]
        m_rows = 0.5 * np.einsum("ij,ij->i", err, err, dtype=np.float64)
        energy_rows += energy
        f_rows += loss
        f_rows += m_rows
        p_rows.append(p)
        probs_mean.append(float(p.mean()))
        losses_mean.append(float(loss.mean()))
        mism_mean.append(float(m_rows.mean()))
    report = StepReport(
        goodness=np.array(probs_mean), loss=np.array(losses_mean),
        mismatch=np.array(mism_mean),
        f=float(f_rows.mean()), f_rows=f_rows, energy_rows=energy_rows,
        mu_y=state.mu_y.copy() if collect_mu else None)

    updates = None
    if learn:
        updates = {}
        for i in order:
            wiring = params.layers[i]
            z = state.z[i]
            delta = modulator_from_probability(z, p_rows[i].astype(z.dtype),
                                               y_arr)
            post = state.s[i]
            post_colsum = post.sum(axis=0)
            below_prev = s0_prev if i == 0 else prev_s[i - 1]
            scaled_e = cfg.r_e * delta
            scaled_e -= cfg.lambda_d * post
            updates[f"w{i + 1}"] = fold_batch_update(scaled_e, below_prev,
                                                     post_colsum, cfg.lambda_d)
            if wiring.v is not None:
                updates[f"v{i + 1}"] = fold_batch_update(scaled_e, prev_s[i + 1],
                                                         post_colsum, cfg.lambda_d)
            if wiring.b is not None:
                updates[f"b{i + 1}"] = fold_batch_update(scaled_e, sy_prev,
                                                         post_colsum, cfg.lambda_d)
            delta *= r_i
            delta -= cfg.lambda_d * post
            updates[f"m{i + 1}"] = fold_batch_update(delta, prev_s[i],
                                                     post_colsum, cfg.lambda_d)
            updates[f"g{i + 1}"] = error_update(mismatch_err[i], post, cfg.r_e)
            if y_class is not None:
                k = y_class.shape[0]
                err_y = state.mu_y[:k] - y_class
                updates[f"a{i + 1}"] = error_update(err_y, post[:k], cfg.r_e)
        if opt is not None:
            signed = (cfg.bound_lo, cfg.bound_hi)
            lateral = (cfg.lateral_lo, cfg.lateral_hi)
            for name, grad in updates.items():
                bounds = lateral if name.startswith("m") else signed
                apply_update(params.bundle(name), grad, opt[name], bounds)

    state.s0 = s0
    if params.supervised:
        state.sy = s_label if s_label is not None else \
            np.zeros((rows, params.classes), dtype=s0.dtype)
    state.t += 1
    return report, updates


def predictor_step(params: NetworkParams, state: NetworkState, cfg: RunConfig,
                   layer_index: int, below_spikes: np.ndarray):
    """Advance one layer's local predictor of the level below it.

    The predictor integrates the layer's fresh spikes through its
    generative bundle with the usual leaky dynamics, fires against the
    fixed base threshold (with depolarization), and reports the mismatch
    ``prediction - actual`` whose entries lie in {-1, 0, 1}.
    """
    i = layer_index
    drive = cfg.r_e * (state.s[i] @ params.gen[i].T)
    v_hat = lif.integrate_voltage(state.v_mu[i], drive, cfg.dt, cfg.tau_m)
    s_mu, v_mu = lif.emit_spikes(v_hat, cfg.v_thr0)
    state.v_mu[i], state.s_mu[i] = v_mu, s_mu
    return s_mu, s_mu - below_spikes


@dataclass
class WindowResult:
    """Accumulated spike statistics over one stimulus window."""

    steps: int
    goodness_sum: np.ndarray      # (rows,) summed squared-trace energy
    class_counts: np.ndarray      # (rows, C) summed classifier spikes
    spike_sums: list              # per layer, (rows, J) summed spikes
    recon_sum: np.ndarray         # (rows, input_dim) summed clipped traces
    seq_loss: np.ndarray          # (rows,) summed per-step objective
    reports: list | None = None

    @property
    def mean_goodness(self) -> np.ndarray:
        return self.goodness_sum / self.steps

    @property
    def top_rate(self) -> np.ndarray:
        return self.spike_sums[-1] / self.steps

    @property
    def reconstruction(self) -> np.ndarray:
        return self.recon_sum / self.steps


def run_window(params: NetworkParams, cfg: RunConfig, x: np.ndarray,
               rng: np.random.Generator, *, y_input: np.ndarray | None = None,
               y_type=1.0, mode: str = "infer",
               opt: dict[str, OptimizerState] | None = None,
               y_class: np.ndarray | None = None, t_window: float | None = None,
               collect_reports: bool = False, layer_order=None) -> WindowResult:
    """Present a batch of stimuli for one window, from a fresh rest state.

    A new Bernoulli input frame is drawn every step; the label frame, when
    given, is clamped to the same one-hot values at every step.
    """
    x = np.atleast_2d(np.asarray(x, dtype=params.layers[0].w.dtype))
    rows = x.shape[0]
    steps = window_steps(cfg.t_window if t_window is None else t_window, cfg.dt)
    if y_input is not None:
        y_input = np.asarray(y_input, dtype=x.dtype)
        if y_input.shape != (rows, params.classes):
            raise ConfigError(f"label batch {y_input.shape} does not match "
                              f"({rows}, {params.classes})")

    state = zero_state(params, rows, cfg)
    goodness_sum = np.zeros(rows)
    seq_loss = np.zeros(rows)
    class_counts = np.zeros((rows, params.classes), dtype=np.float32)
    spike_sums = [np.zeros((rows, n), dtype=np.float32) for n in params.layer_sizes]
    recon_sum = np.zeros((rows, params.input_dim), dtype=np.float32)
    reports = [] if collect_reports else None

    for _ in range(steps):
        s0 = lif.encode_bernoulli(x, rng, dtype=x.dtype)
        report, _ = step(params, state, cfg, s0, y_input, y_type, mode=mode,
                         opt=opt, y_class=y_class, layer_order=layer_order,
                         collect_mu=collect_reports)
        goodness_sum += report.energy_rows
        seq_loss += report.f_rows
        class_counts += state.mu_y
        for i in range(params.depth):
            spike_sums[i] += state.s[i]
        recon_sum += state.z0_mu
        if reports is not None:
            reports.append(report)

    return WindowResult(steps=steps, goodness_sum=goodness_sum,
                        class_counts=class_counts, spike_sums=spike_sums,
                        recon_sum=recon_sum, seq_loss=seq_loss, reports=reports)


def softmax(scores: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stable under constant shifts."""
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def classify_fast(params: NetworkParams, cfg: RunConfig, x: np.ndarray,
                  rng: np.random.Generator,
                  t_window: float | None = None) -> np.ndarray:
    """Class probabilities from the jointly trained spiking readout.

    One label-free window per batch; the accumulated readout spike counts
    pass through a softmax.
    """
    res = run_window(params, cfg, x, rng, y_input=None, mode="infer",
                     t_window=t_window)
    return softmax(res.class_counts)


def classify_scan(params: NetworkParams, cfg: RunConfig, x: np.ndarray,
                  rng: np.random.Generator,
                  t_window: float | None = None) -> np.ndarray:
    """Class indices by scanning candidate labels for maximal trace energy.

    Each candidate class is clamped for one full window and scored by the
    time-averaged total squared trace; every candidate sees the identical
    input spike sequence so ties are exact. Lowest index wins ties.
    """
    if not params.supervised:
        raise UsageError("goodness scan needs class-context synapses")
    x = np.atleast_2d(x)
    rows = x.shape[0]
    scores = np.zeros((rows, params.classes))
    base_seed = rng.integers(0, 2 ** 63 - 1)
    for c in range(params.classes):
        y = np.zeros((rows, params.classes), dtype=np.float32)
        y[:, c] = 1.0
        crn = np.random.default_rng(base_seed)
        res = run_window(params, cfg, x, crn, y_input=y, mode="infer",
                         t_window=t_window)
        scores[:, c] = res.mean_goodness
    return np.argmax(scores, axis=1)


def reconstruct(params: NetworkParams, cfg: RunConfig, x: np.ndarray,
                rng: np.random.Generator,
                t_window: float | None = None) -> np.ndarray:
    """Average clipped trace of the bottom predictor over a label-free window."""
    res = run_window(params, cfg, x, rng, y_input=None, mode="infer",
                     t_window=t_window)
    return res.reconstruction


def rate_code(spike_trajectory, gamma_c: float = 1.0) -> np.ndarray:
    """Time-average of a spike trajectory (first axis is time)."""
    traj = np.asarray(spike_trajectory)
    if traj.shape[0] < 1:
        raise ConfigError("rate code needs at least one step")
    return gamma_c * traj.mean(axis=0)


def sequence_loss(reports) -> float:
    """Total objective accumulated over a trajectory of step reports, nats."""
    if not reports:
        raise ConfigError("sequence loss needs a non-empty trajectory")
    return float(sum(r.f for r in reports))
