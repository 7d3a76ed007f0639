"""Experiment configuration: JSON schema, validation and object builders.

Top-level keys: ``observable``, ``driver``, ``dynamics``, ``sim``, ``sweep``,
``output`` and the optional ``lyapunov``. Validation errors are reported as
:class:`ConfigurationError` with the dotted path of the offending field.
"""

import json
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import drivers, dynamics, observables
from .errors import ConfigurationError
from .simulator import ExplosionPolicy, InitSpec, SimConfig

U64 = Field(default=0, ge=0, lt=2**64)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ObservableCfg(_Strict):
    name: Literal["identity_d", "second_moment_1d", "mean_and_second_1d", "tanh_1d"]
    d: int = Field(default=1, ge=1)


class DriverCfg(_Strict):
    name: Literal["brownian", "bessel", "mean_variance"]
    delta: float | None = Field(default=None, gt=0)
    p: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _params(self):
        if self.name in ("bessel", "mean_variance") and self.delta is None:
            raise ValueError(f"driver {self.name} needs delta")
        return self


class DynamicsCfg(_Strict):
    potential: Literal["none", "double_well", "quadratic"] = "none"
    interaction: Literal["none", "quadratic"] = "none"
    sigma_tilde: float = Field(default=0.0, ge=0)


class InitCfg(_Strict):
    kind: Literal["gaussian", "samples"] = "gaussian"
    mean: float = 0.0
    std: float = Field(default=1.0, ge=0)
    samples: list[float] | list[list[float]] | None = None


class MonitorCfg(_Strict):
    moment_cap: float = Field(default=1e6, gt=0)
    margin_floor: float = Field(default=1e-6, ge=0)
    det_floor: float = Field(default=1e-6, ge=0)


class SimCfg(_Strict):
    n_particles: int = Field(ge=1)
    dt: float = Field(gt=0)
    t_final: float = Field(gt=0)
    seed_common: int = U64
    seed_private: int = U64
    eta: float = Field(default=0.0, ge=0)
    gamma: float = Field(default=1.0, ge=0)
    gamma_mode: Literal["paper_literal", "driver_scaled"] = "paper_literal"
    init: InitCfg = Field(default_factory=InitCfg)
    monitor: MonitorCfg = Field(default_factory=MonitorCfg)
    record_stride: int = Field(default=1, ge=1)
    snapshot_stride: int = Field(default=0, ge=0)
    field_det_floor: float = Field(default=1e-10, gt=0)

    @field_validator("dt", "t_final", "eta", "gamma")
    @classmethod
    def _finite(cls, v):
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v

    @model_validator(mode="after")
    def _dt(self):
        if self.dt > self.t_final:
            raise ValueError("dt must not exceed t_final")
        return self


class SeedRange(_Strict):
    start: int = Field(ge=0, lt=2**64)
    stop: int = Field(ge=0, le=2**64)


class SweepCfg(_Strict):
    seeds: SeedRange | list[int] | None = None
    gamma: list[float] | None = None
    delta: list[float] | None = None
    eta: list[float] | None = None
    n_particles: list[int] | None = None
    burn_in: float = Field(default=0.0, ge=0)
    p: float = Field(default=2.0, ge=1)  # Wasserstein order for chaos tables

    def seed_list(self):
        if self.seeds is None:
            return None
        if isinstance(self.seeds, SeedRange):
            return list(range(self.seeds.start, self.seeds.stop))
        return list(self.seeds)


class OutputCfg(_Strict):
    dir: str = "out"
    prefix: str = "run"


class LyapunovCfg(_Strict):
    q: float | None = Field(default=None, gt=0)
    levels: int = Field(default=4, ge=2)
    hi: float = Field(default=1e3, gt=0)
    lo: float = Field(default=1e-3, gt=0)
    per_decade: int = Field(default=20, ge=1)


class ExperimentConfig(_Strict):
    observable: ObservableCfg | None = None
    driver: DriverCfg | None = None
    dynamics: DynamicsCfg = Field(default_factory=DynamicsCfg)
    sim: SimCfg
    sweep: SweepCfg | None = None
    output: OutputCfg = Field(default_factory=OutputCfg)
    lyapunov: LyapunovCfg | None = None

    @model_validator(mode="after")
    def _pairing(self):
        if self.observable is not None and self.driver is None:
            raise ValueError("an observable needs a driver")
        return self


def _error_path(err):
    e = err.errors()[0]
    loc = [str(x) for x in e["loc"] if not (isinstance(x, str) and ("[" in x or x in ("list[int]", "SeedRange")))]
    # drop pydantic's union-branch markers
    loc = [x for x in loc if not x.startswith(("function-", "list[", "dict["))]
    path = ".".join(loc) or "config"
    return path, e["msg"]


def parse(data):
    """Validate a config mapping; raise ConfigurationError naming the field."""
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a JSON object", "config")
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as err:
        path, msg = _error_path(err)
        raise ConfigurationError(msg, path) from None
    build(cfg)  # surface errors from the object constructors before any run starts
    return cfg


def load(path):
    """Read a config file. A run metadata file is accepted too: its
    ``config`` entry is used."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError:
        raise
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON: {exc}", "config") from None
    if isinstance(data, dict) and "config" in data and "library_version" in data:
        data = data["config"]
    return parse(data)


def to_dict(cfg):
    return cfg.model_dump(mode="json")


# -- builders ---------------------------------------------------------------


def build_observable(cfg):
    if cfg.observable is None:
        return None
    return observables.builtin(cfg.observable.name, cfg.observable.d)


def build_driver(cfg):
    if cfg.driver is None:
        return None
    d = cfg.driver
    if d.name == "brownian":
        p = d.p if d.p is not None else (cfg.observable.d if cfg.observable and cfg.observable.name == "identity_d" else 1)
        return drivers.brownian(p)
    return drivers.builtin(d.name, delta=d.delta)


_POT = {"none": dynamics.zero_grad, "double_well": dynamics.double_well_grad, "quadratic": dynamics.quadratic_grad}
_INT = {"none": dynamics.zero_grad, "quadratic": dynamics.quadratic_grad}


def build_dynamics(cfg):
    d = cfg.dynamics
    return dynamics.granular_media(_POT[d.potential], _INT[d.interaction], d.sigma_tilde)


def build_sim(cfg):
    s = cfg.sim
    if s.init.kind == "samples":
        if s.init.samples is None:
            raise ConfigurationError("samples are required for kind 'samples'", "sim.init.samples")
        init = InitSpec("samples", samples=np.asarray(s.init.samples, dtype=float))
    else:
        init = InitSpec("gaussian", s.init.mean, s.init.std)
    mon = ExplosionPolicy(s.monitor.moment_cap, s.monitor.margin_floor, s.monitor.det_floor)
    return SimConfig(
        n_particles=s.n_particles, dt=s.dt, t_final=s.t_final, seed_common=s.seed_common,
        seed_private=s.seed_private, eta=s.eta, gamma=s.gamma, gamma_mode=s.gamma_mode, init=init,
        monitor=mon, record_stride=s.record_stride, snapshot_stride=s.snapshot_stride,
        field_det_floor=s.field_det_floor,
    )


def build(cfg):
    obs = build_observable(cfg)
    drv = build_driver(cfg)
    if obs is not None and drv.dim_p != obs.dim_p:
        raise ConfigurationError(f"driver has p={drv.dim_p} but the observable has p={obs.dim_p}", "driver")
    return obs, drv, build_dynamics(cfg), build_sim(cfg)


def with_overrides(cfg, **sim_fields):
    """Copy of ``cfg`` with some ``sim`` fields replaced (validated)."""
    data = to_dict(cfg)
    data["sim"].update({k: v for k, v in sim_fields.items() if v is not None})
    return parse(data)
