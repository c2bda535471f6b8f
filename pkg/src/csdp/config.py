"""Run configuration: every constant of the simulation in one place.

Time-like quantities are in milliseconds, resistances in deciohms and
voltages in decivolts. The inhibitory resistance differs between the
supervised and unsupervised variants, so ``r_i`` may be left as ``None``
and is then resolved from the ``supervised`` flag.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

R_I_SUPERVISED = 0.035
R_I_UNSUPERVISED = 0.01


@dataclass
class RunConfig:
    # integration
    dt: float = 3.0
    t_window: float = 150.0
    tau_m: float = 100.0
    # trace constant equal to dt makes the trace the instantaneous spike
    # pattern (gamma its ceiling), the regime where the goodness threshold
    # actually separates positive from negative activity
    tau_tr: float = 3.0
    gamma: float = 1.0
    r_e: float = 0.1
    r_i: float | None = None
    v_thr0: float = 0.055
    lambda_v: float = 0.001
    theta_z: float = 10.0
    # plasticity
    eta: float = 0.002
    lambda_d: float = 0.00005
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    bound_lo: float = -1.0
    bound_hi: float = 1.0
    lateral_lo: float = 0.0
    lateral_hi: float = 1.0
    # architecture
    input_dim: int = 784
    layer_sizes: tuple[int, ...] = (500, 100)
    classes: int = 10
    supervised: bool = True
    # data and schedule
    eta_mix: float = 0.55
    batch_size: int = 500
    epochs: int = 30
    per_class_val: int = 1000
    seed: int = 1234
    eval_batch_rows: int = 1000
    data_dir: str = "data"
    dataset: str = "mnist"
    out_dir: str = "runs/default"

    @property
    def resolved_r_i(self) -> float:
        if self.r_i is not None:
            return self.r_i
        return R_I_SUPERVISED if self.supervised else R_I_UNSUPERVISED

    @property
    def window_steps(self) -> int:
        return window_steps(self.t_window, self.dt)

    def validate(self) -> "RunConfig":
        if self.dt <= 0 or self.tau_m <= 0 or self.tau_tr <= 0:
            raise ConfigError("dt, tau_m and tau_tr must be positive")
        if self.r_e < 0 or self.resolved_r_i < 0:
            raise ConfigError("resistances must be non-negative")
        if self.v_thr0 < 0:
            raise ConfigError("base threshold must be non-negative")
        if not 0.0 <= self.eta_mix <= 1.0:
            raise ConfigError("eta_mix must lie in [0, 1]")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if any(j < 1 for j in self.layer_sizes) or not self.layer_sizes:
            raise ConfigError("layer_sizes must name at least one positive size")
        window_steps(self.t_window, self.dt)
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["layer_sizes"] = list(self.layer_sizes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        d = dict(d)
        if "layer_sizes" in d:
            d["layer_sizes"] = tuple(int(j) for j in d["layer_sizes"])
        return cls(**d)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def window_steps(t_window: float, dt: float) -> int:
    """Number of integration steps in a stimulus window of ``t_window`` ms."""
    if dt <= 0:
        raise ConfigError("dt must be positive")
    steps = round(t_window / dt)
    if steps < 1 or abs(steps * dt - t_window) > 1e-9 * max(1.0, t_window):
        raise ConfigError(
            f"stimulus window {t_window} ms is not a positive multiple of dt={dt} ms"
        )
    return steps
