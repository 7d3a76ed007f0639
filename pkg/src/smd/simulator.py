"""Euler-Maruyama integration of the particle system with explosion monitoring.

Each step, on the current empirical measure: compute the monitor statistics,
stop if the state has left the good set, otherwise build the moment field
and move every particle by

    X_i += (btilde_i + g * b_i) dt + sigma_tilde dW_i + g * sigma_i dW0

with one common increment dW0 shared by all particles.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .coefficients import DEFAULT_DET_FLOOR, field_from_arrays
from .drivers import MomentDriver
from .dynamics import NONE, BaselineDynamics
from .errors import ConfigurationError, DriverSingularity, NumericOverflow, SingularGram
from .observables import Observable, alpha_of
from .rng import NoiseStreams

GAMMA_MODES = ("paper_literal", "driver_scaled")
CAUSES = {1: "MomentCap", 2: "SingularityMargin", 3: "DetFloor", 4: "MomentCap"}
_STAT_NAMES = ("det", "margin", "malpha", "mean", "m2", "var")


@dataclass(frozen=True)
class ExplosionPolicy:
    """Thresholds of the good set: m_alpha < moment_cap, margin > margin_floor,
    det G > det_floor. ``inf`` disables the first clause and ``0`` the
    others. The determinant clause applies only without regularization
    (eta = 0), where the field ceases to exist as det G -> 0."""

    moment_cap: float = 1e6
    margin_floor: float = 1e-6
    det_floor: float = 1e-6

    def __post_init__(self):
        if not self.moment_cap > 0:
            raise ConfigurationError("must be positive", "sim.monitor.moment_cap")
        if not self.margin_floor >= 0:
            raise ConfigurationError("must be non-negative", "sim.monitor.margin_floor")
        if not self.det_floor >= 0:
            raise ConfigurationError("must be non-negative", "sim.monitor.det_floor")


@dataclass(frozen=True, eq=False)
class InitSpec:
    kind: str = "gaussian"
    mean: float = 0.0
    std: float = 1.0
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "samples"):
            raise ConfigurationError(f"unknown init kind {self.kind!r}", "sim.init.kind")
        if self.kind == "gaussian" and not self.std >= 0:
            raise ConfigurationError("must be non-negative", "sim.init.std")
        if self.kind == "samples":
            x = np.array(self.samples, dtype=float)
            if x.ndim == 1:
                x = x[:, None]
            if x.ndim != 2 or not np.all(np.isfinite(x)):
                raise ConfigurationError("samples must be a finite (N, d) array", "sim.init.samples")
            x.setflags(write=False)
            object.__setattr__(self, "samples", x)


@dataclass(frozen=True)
class _Thresholds:
    # effective monitor thresholds; a disabled clause gets -inf
    moment_cap: float
    margin_floor: float
    det_floor: float


def gaussian(mean=0.0, std=1.0):
    return InitSpec("gaussian", float(mean), float(std))


def samples(x):
    return InitSpec("samples", samples=x)


@dataclass(frozen=True, eq=False)
class SimConfig:
    n_particles: int
    dt: float
    t_final: float
    seed_common: int = 0
    seed_private: int = 0
    eta: float = 0.0
    gamma: float = 1.0
    gamma_mode: str = "paper_literal"
    init: InitSpec = field(default_factory=InitSpec)
    monitor: ExplosionPolicy = field(default_factory=ExplosionPolicy)
    record_stride: int = 1
    snapshot_stride: int = 0
    field_det_floor: float = DEFAULT_DET_FLOOR

    def __post_init__(self):
        if not (isinstance(self.n_particles, (int, np.integer)) and self.n_particles >= 1):
            raise ConfigurationError("must be an integer >= 1", "sim.n_particles")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigurationError("must be positive", "sim.dt")
        if not (self.t_final > 0 and math.isfinite(self.t_final)):
            raise ConfigurationError("must be positive", "sim.t_final")
        if self.dt > self.t_final:
            raise ConfigurationError("must not exceed t_final", "sim.dt")
        for name in ("seed_common", "seed_private"):
            v = getattr(self, name)
            if not (isinstance(v, (int, np.integer)) and 0 <= v < 2**64):
                raise ConfigurationError("must be an unsigned 64-bit integer", f"sim.{name}")
        if not self.eta >= 0:
            raise ConfigurationError("must be non-negative", "sim.eta")
        if not self.gamma >= 0:
            raise ConfigurationError("must be non-negative", "sim.gamma")
        if self.gamma_mode not in GAMMA_MODES:
            raise ConfigurationError(f"must be one of {GAMMA_MODES}", "sim.gamma_mode")
        if not (isinstance(self.record_stride, (int, np.integer)) and self.record_stride >= 1):
            raise ConfigurationError("must be an integer >= 1", "sim.record_stride")
        if not (isinstance(self.snapshot_stride, (int, np.integer)) and self.snapshot_stride >= 0):
            raise ConfigurationError("must be an integer >= 0", "sim.snapshot_stride")
        if self.init.kind == "samples" and self.init.samples.shape[0] != self.n_particles:
            raise ConfigurationError("number of samples differs from n_particles", "sim.init.samples")

    @property
    def n_steps(self):
        return max(1, int(round(self.t_final / self.dt)))


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    z_series: np.ndarray  # (n_rec, p)
    mean_series: np.ndarray
    m2_series: np.ndarray
    var_series: np.ndarray
    det_series: np.ndarray
    margin_series: np.ndarray
    malpha_series: np.ndarray
    exploded: bool
    explosion_time: float | None
    explosion_cause: str | None
    snapshots: np.ndarray | None  # (n_snap, N, d)
    snapshot_times: np.ndarray | None
    final_positions: np.ndarray
    steps_done: int


def _readonly(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


# -- one step ---------------------------------------------------------------


def step(X, fld, dyn, dW0, dW, dt, gamma_eff=1.0):
    """One Euler step from positions ``X``; ``fld`` may be None (no SMD term).

    Raises :class:`NumericOverflow` when a coordinate becomes non-finite.
    """
    X = np.ascontiguousarray(X, dtype=float)
    n, d = X.shape
    drift = np.ascontiguousarray(dyn.drift(X))
    if fld is None or gamma_eff == 0.0:
        b = np.zeros((n, d))
        sigma = np.zeros((n, d, 1))
        dW0 = np.zeros(1)
        gamma_eff = 0.0
    else:
        b, sigma = fld.b, fld.sigma
    dW = np.zeros((n, d)) if dW is None else dW
    out = kernels.euler_update(
        X, drift, b, sigma, np.ascontiguousarray(dW, dtype=float), np.ascontiguousarray(dW0, dtype=float),
        float(dt), float(dyn.sigma_tilde), float(gamma_eff),
    )
    if not np.all(np.isfinite(out)):
        raise NumericOverflow("particle update produced a non-finite value")
    return out


# -- run --------------------------------------------------------------------


def _resolve(cfg, obs, drv):
    """Driver and multiplier actually used, per the gamma mode."""
    if obs is None or cfg.gamma == 0.0:
        return drv, 0.0
    if cfg.gamma_mode == "driver_scaled":
        return drv.scaled(cfg.gamma), 1.0
    return drv, float(cfg.gamma)


def _fused_codes(obs, drv, dyn):
    """Arguments for the fused stepper, or None when it cannot be used."""
    if not kernels.USE_NUMBA:
        return None
    from .kernels import _fused

    codes = dyn.codes
    if codes is None:
        return None
    if obs is None:
        return (False, 0, 0, 0.0, 1.0, 1.0) + codes
    if obs.builtin not in _fused.OBS_CODES or drv.name not in _fused.DRV_CODES:
        return None
    oc, dc = _fused.OBS_CODES[obs.builtin], _fused.DRV_CODES[drv.name]
    if drv.dim_p != obs.dim_p:
        return None
    delta = float(drv.params.get("delta", 0.0))
    return (True, oc, dc, delta, float(drv.scale[0]), float(drv.scale[1])) + codes


def _initial_positions(cfg, streams, d):
    if cfg.init.kind == "samples":
        X = np.array(cfg.init.samples, dtype=float)
        if X.shape[1] != d:
            raise ConfigurationError(f"samples live in R^{X.shape[1]}, expected R^{d}", "sim.init.samples")
        return np.ascontiguousarray(X)
    return np.ascontiguousarray(cfg.init.mean + cfg.init.std * streams.initial_normals())


class _GenericStepper:
    """Reference stepper built on the backend kernels; works for any
    observable, driver and baseline dynamics."""

    def __init__(self, obs, drv, dyn, eta, gamma_eff, alpha, policy, field_det_floor, p):
        self.obs, self.drv, self.dyn = obs, drv, dyn
        self.eta, self.gamma_eff, self.alpha = eta, gamma_eff, alpha
        self.policy, self.field_det_floor, self.p = policy, field_det_floor, p

    def stats(self, X, zout, sout):
        if self.obs is not None:
            F = np.ascontiguousarray(self.obs.values(X), dtype=float)
            J = np.ascontiguousarray(self.obs.grads(X), dtype=float)
            z, G = kernels.moments(F, J)
            zout[:] = z
            sout[0] = kernels.small_det(G)
            sout[1] = self.drv.singularity_margin(z)
        else:
            F = J = G = None
            sout[0] = sout[1] = np.inf
        sout[2] = kernels.power_moment(X, self.alpha)
        sout[3:6] = kernels.first_coordinate_stats(X)
        return F, J, G

    def advance(self, X, n, dW0, dW, dt, zbuf, sbuf):
        pol = self.policy
        for k in range(n):
            F, J, G = self.stats(X, zbuf[k], sbuf[k])
            det, margin, malpha = sbuf[k, 0], sbuf[k, 1], sbuf[k, 2]
            if not malpha < pol.moment_cap:
                return k, 1
            if not margin > pol.margin_floor:
                return k, 2
            if not det > pol.det_floor:
                return k, 3
            fld = None
            if self.obs is not None and self.gamma_eff != 0.0:
                H = np.ascontiguousarray(self.obs.hessians(X), dtype=float)
                try:
                    fld = field_from_arrays(
                        F, J, H, self.drv, self.eta, self.field_det_floor, z=zbuf[k].copy(), G=G
                    )
                except SingularGram:
                    return k, 3
                except DriverSingularity:
                    return k, 2
            try:
                Xn = step(X, fld, self.dyn, dW0[k], dW[:, k, :], dt, self.gamma_eff)
            except NumericOverflow:
                return k, 4
            X[:, :] = Xn
        return n, 0


class _FusedStepper:
    def __init__(self, codes, eta, gamma_eff, alpha, policy, field_det_floor, sigma_tilde, p):
        from .kernels import _fused

        self._fused = _fused
        self.codes = codes
        self.eta, self.gamma_eff, self.alpha = eta, gamma_eff, alpha
        self.policy, self.field_det_floor = policy, field_det_floor
        self.sigma_tilde, self.p = sigma_tilde, p

    def stats(self, X, zout, sout):
        has_obs, oc, dc = self.codes[:3]
        n, d = X.shape
        p = self.p
        self._fused.state_stats(
            X, has_obs, oc, dc, p, self.alpha,
            np.zeros((n, p)), np.zeros((n, d, p)), np.zeros((n, p, d, d)), zout, sout,
        )

    def advance(self, X, n, dW0, dW, dt, zbuf, sbuf):
        has_obs, oc, dc, delta, a_scale, s_scale, uc, wc = self.codes
        pol = self.policy
        kernel = self._fused.advance_1d if X.shape[1] == 1 and self.p <= 2 else self._fused.advance
        return kernel(
            X, n, dW0, dW, dt,
            has_obs, oc, dc, delta, a_scale, s_scale, self.eta, self.field_det_floor, self.gamma_eff,
            uc, wc, self.sigma_tilde,
            self.alpha, pol.moment_cap, pol.margin_floor, pol.det_floor,
            zbuf, sbuf,
        )


def _check_inputs(obs, drv, dyn):
    if obs is not None and not isinstance(obs, Observable):
        raise ConfigurationError("observable must be an Observable", "observable")
    if obs is not None and (drv is None or not isinstance(drv, MomentDriver)):
        raise ConfigurationError("an observable needs a MomentDriver", "driver")
    if obs is not None and drv.dim_p != obs.dim_p:
        raise ConfigurationError(f"driver has p={drv.dim_p} but observable has p={obs.dim_p}", "driver")
    if not isinstance(dyn, BaselineDynamics):
        raise ConfigurationError("dynamics must be a BaselineDynamics", "dynamics")


def run(cfg, obs, drv, dyn=NONE, use_fused=None):
    """Simulate one trajectory; deterministic given the seeds and ``cfg``.

    ``obs=None`` runs the plain McKean-Vlasov system. ``use_fused=None``
    picks the whole-step numba kernel whenever every component is builtin.
    """
    _check_inputs(obs, drv, dyn)
    if cfg.init.kind == "samples":
        d = cfg.init.samples.shape[1]
        if obs is not None and d != obs.dim_d:
            raise ConfigurationError(f"samples live in R^{d}, observable in R^{obs.dim_d}", "sim.init.samples")
    else:
        d = obs.dim_d if obs is not None else 1
    p = obs.dim_p if obs is not None else 1
    drv_eff, gamma_eff = _resolve(cfg, obs, drv)
    alpha = alpha_of(obs) if obs is not None else 2.0
    # the Gram determinant only bounds the lifetime of the unregularized field
    policy = _Thresholds(
        cfg.monitor.moment_cap,
        cfg.monitor.margin_floor if cfg.monitor.margin_floor > 0 else -np.inf,
        cfg.monitor.det_floor if cfg.monitor.det_floor > 0 and cfg.eta == 0.0 else -np.inf,
    )
    eta = float(cfg.eta)

    codes = _fused_codes(obs, drv_eff, dyn) if use_fused is not False else None
    if use_fused and codes is None:
        raise ConfigurationError("the fused stepper needs numba and builtin components")
    if codes is not None:
        stepper = _FusedStepper(codes, eta, gamma_eff, alpha, policy, cfg.field_det_floor, float(dyn.sigma_tilde), p)
    else:
        stepper = _GenericStepper(obs, drv_eff, dyn, eta, gamma_eff, alpha, policy, cfg.field_det_floor, p)

    dt = float(cfg.dt)
    n_steps = cfg.n_steps
    streams = NoiseStreams(
        cfg.seed_common, cfg.seed_private, cfg.n_particles, d, p, dt, private=dyn.sigma_tilde != 0.0
    )
    X = _initial_positions(cfg, streams, d)

    rs, ss = cfg.record_stride, cfg.snapshot_stride
    rec_k, rec_z, rec_s = [], [], []
    snaps, snap_k = [], []
    exploded, cause, t_explode = False, None, None
    k = 0
    while True:
        if ss and k % ss == 0:
            snaps.append(X.copy())
            snap_k.append(k)
        if k == n_steps:
            break
        stop = n_steps if not ss else min(n_steps, (k // ss + 1) * ss)
        n = min(stop - k, streams.block)
        dW0, dW = streams.take(n)
        zbuf = np.zeros((n, p))
        sbuf = np.zeros((n, 6))
        done, code = stepper.advance(X, n, np.ascontiguousarray(dW0), dW, dt, zbuf, sbuf)
        sel = np.arange((-k) % rs, done, rs)
        if code and (k + done) % rs:
            sel = np.append(sel, done)
        elif code:
            sel = np.arange((-k) % rs, done + 1, rs)
        rec_k.append(k + sel)
        rec_z.append(zbuf[sel])
        rec_s.append(sbuf[sel])
        k += done
        if code:
            exploded = True
            cause = CAUSES[int(code)]
            t_explode = (k + 1) * dt if code == 4 else k * dt
            break

    rec_k = np.concatenate(rec_k) if rec_k else np.zeros(0, dtype=np.int64)
    Z = np.concatenate(rec_z) if rec_z else np.zeros((0, p))
    S = np.concatenate(rec_s) if rec_s else np.zeros((0, 6))
    if not exploded:
        # state at t_final: record it and apply the monitor once more
        z = np.zeros(p)
        s = np.zeros(6)
        stepper.stats(X, z, s)
        rec_k = np.append(rec_k, n_steps)
        Z = np.vstack([Z, z])
        S = np.vstack([S, s])
        if not s[2] < policy.moment_cap:
            cause = "MomentCap"
        elif not s[1] > policy.margin_floor:
            cause = "SingularityMargin"
        elif not s[0] > policy.det_floor:
            cause = "DetFloor"
        if cause is not None:
            exploded, t_explode = True, n_steps * dt

    return Trajectory(
        times=_readonly(rec_k.astype(float) * dt),
        z_series=_readonly(Z if obs is not None else np.zeros((rec_k.size, 0))),
        mean_series=_readonly(S[:, 3].copy()),
        m2_series=_readonly(S[:, 4].copy()),
        var_series=_readonly(S[:, 5].copy()),
        det_series=_readonly(S[:, 0].copy()),
        margin_series=_readonly(S[:, 1].copy()),
        malpha_series=_readonly(S[:, 2].copy()),
        exploded=exploded,
        explosion_time=t_explode,
        explosion_cause=cause,
        snapshots=_readonly(np.array(snaps)) if ss else None,
        snapshot_times=_readonly(np.array(snap_k, dtype=float) * dt) if ss else None,
        final_positions=_readonly(X),
        steps_done=k,
    )


def run_coupled(cfgs, obs, drv, dyn=NONE, use_fused=None):
    """Runs sharing the common noise, for comparisons across particle counts.

    Configs may differ only in ``n_particles``, ``seed_private`` and
    ``snapshot_stride``; snapshots must be enabled in every config.
    """
    cfgs = list(cfgs)
    if not cfgs:
        raise ConfigurationError("no configurations given", "sim")
    free = {"n_particles", "seed_private", "snapshot_stride"}
    ref = cfgs[0]
    for c in cfgs:
        if c.snapshot_stride == 0:
            raise ConfigurationError("snapshots are required for coupled runs", "sim.snapshot_stride")
        if c.init.kind != "gaussian":
            raise ConfigurationError("coupled runs need a gaussian init", "sim.init")
        for name in SimConfig.__dataclass_fields__:
            if name in free:
                continue
            a, b = getattr(c, name), getattr(ref, name)
            if name == "init":
                a, b = (a.mean, a.std), (b.mean, b.std)
            if a != b:
                raise ConfigurationError("coupled configs may only differ in N and the private seed", f"sim.{name}")
    return [run(c, obs, drv, dyn, use_fused) for c in cfgs]


def timed_run(cfg, obs, drv, dyn=NONE):
    t0 = time.perf_counter()
    traj = run(cfg, obs, drv, dyn)
    return traj, time.perf_counter() - t0
