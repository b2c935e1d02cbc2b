"""Plain-text key=value configuration with dotted sections."""

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import driver as drv
from .stopping import StoppingConfig, eps_max
from .velocity import make_model


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str = "all"
    seed: int = 20240611
    out: str = "results"
    nx: int = 64
    velocity_model: str = "two"
    velocity_nodes: int = 2
    theta: float = 1.0
    J: int = 4
    sigma_profile: str = "power"
    sigma_scale: float = 2.5e-5
    sigma_decay: float = 2.0
    sin_ratio: float = 0.5
    alpha: float = 0.3
    Lambda: float = 2.0
    T: float = 0.5
    c_dt: float = 0.25
    eps: tuple = (0.2, 0.1, 0.05)
    ensemble: int = 512
    scheme: str = "lie"
    sobolev_sigma: float = 1.0
    limit_dt: float = 1e-3
    kernel_samples: int = 2000
    kernel_horizon: float = 14.0
    residual_eps: tuple = (0.2, 0.1, 0.05, 0.025)
    n_states: int = 32
    martingale_eps: tuple = (0.1, 0.05)
    lognormal_q: float = 0.5
    lognormal_ensemble: int = 4000
    tightness_ensemble: int = 2048
    simulate_ensemble: int = 8
    snapshots: int = 100

    KEYS = {
        "experiment": "experiment", "seed": "seed", "out": "out",
        "grid.nx": "nx", "velocity.model": "velocity_model", "velocity.nodes": "velocity_nodes",
        "driver.theta": "theta", "driver.J": "J", "driver.sigma_profile": "sigma_profile",
        "driver.sigma_scale": "sigma_scale", "driver.sigma_decay": "sigma_decay",
        "driver.sin_ratio": "sin_ratio", "driver.seed": "seed",
        "stopping.alpha": "alpha", "stopping.Lambda": "Lambda",
        "run.T": "T", "run.c_dt": "c_dt", "run.eps": "eps", "run.ensemble": "ensemble",
        "run.scheme": "scheme", "diagnostic.sobolev_sigma": "sobolev_sigma",
        "limit.dt": "limit_dt", "kernel.samples": "kernel_samples",
        "kernel.horizon": "kernel_horizon", "generator.eps": "residual_eps",
        "generator.states": "n_states", "martingale.eps": "martingale_eps",
        "limit.lognormal_q": "lognormal_q", "limit.lognormal_ensemble": "lognormal_ensemble",
        "tightness.ensemble": "tightness_ensemble", "simulate.ensemble": "simulate_ensemble",
        "run.snapshots": "snapshots",
    }

    def __post_init__(self):
        self.validate()

    def validate(self):
        eps = tuple(float(e) for e in self.eps)
        self.eps = eps
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("run.eps must be strictly decreasing")
        if self.ensemble < 64:
            raise ConfigError("statistical tests need an ensemble of at least 64")
        if self.sigma_profile != "power":
            raise ConfigError(f"unknown sigma profile {self.sigma_profile!r}")
        self.stopping()

    # derived objects -----------------------------------------------------
    def model(self):
        return make_model(self.velocity_model, self.velocity_nodes)

    def driver(self, scale=None):
        s = self.sigma_scale if scale is None else scale
        return drv.make_params(self.J, self.theta, s, self.sigma_decay, self.sin_ratio, self.nx)

    def stopping(self):
        return StoppingConfig(self.alpha, self.Lambda, self.T)

    def eps_outside_energy_window(self):
        """eps values above (4 |a|_inf Lambda)^-1, where the stopped energy bound is not claimed."""
        lim = eps_max(self.model().a_sup, self.Lambda)
        return [e for e in self.eps if e > lim + 1e-15]

    def to_dict(self):
        d = dataclasses.asdict(self)
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}

    def digest(self):
        """Hash of the physical and statistical settings (not the subcommand or output path)."""
        d = {k: v for k, v in self.to_dict().items() if k not in ("experiment", "out")}
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


def _coerce(value, current):
    value = value.strip()
    if isinstance(current, tuple):
        return tuple(float(v) for v in value.replace(";", ",").split(",") if v.strip())
    if isinstance(current, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if isinstance(current, int):
        return int(float(value))
    if isinstance(current, float):
        return float(value)
    return value


def parse(text):
    """Parse key=value lines ('#' comments, dotted keys) into an ExperimentConfig."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    cp.read_string("[root]\n" + text)
    base = ExperimentConfig()
    values = {}
    for key, raw in cp.items("root"):
        if key not in ExperimentConfig.KEYS:
            raise ConfigError(f"unknown configuration key {key!r}")
        attr = ExperimentConfig.KEYS[key]
        values[attr] = _coerce(raw, getattr(base, attr))
    return dataclasses.replace(base, **values)


def load(path=None):
    if path is None:
        return parse(default_text())
    return parse(Path(path).read_text())


def default_text():
    return resources.files("kdlab").joinpath("default.cfg").read_text()


def resolve_eps(value):
    return tuple(np.atleast_1d(value).astype(float))
