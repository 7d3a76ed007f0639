"""Post-hoc analysis: Lyapunov generator checks, reference minimizers,
basin transitions and Wasserstein tracking."""

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DriverSingularity
from .measures import EmpiricalMeasure, as_measure, wasserstein_1d
from .simulator import InitSpec, SimConfig, run

# -- Lyapunov functions -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LyapunovSpec:
    V: Callable[[np.ndarray], float]
    grad_V: Callable[[np.ndarray], np.ndarray]
    hess_V: Callable[[np.ndarray], np.ndarray]
    q: float
    name: str = "custom"


def default_q(delta):
    """Midpoint of the admissible range 0 < q < delta - 2."""
    if not delta > 2:
        raise ConfigurationError("a default q needs delta > 2; set q explicitly", "lyapunov.q")
    return (delta - 2.0) / 2.0


def _check_q(q):
    if not q > 0:
        raise ConfigurationError("q must be positive", "lyapunov.q")
    return float(q)


def bessel_lyapunov(q):
    """V(z) = z + z^-q on z > 0."""
    q = _check_q(q)

    def V(z):
        z = float(np.asarray(z).reshape(-1)[0])
        return z + z**-q

    def grad_V(z):
        z = float(np.asarray(z).reshape(-1)[0])
        return np.array([1.0 - q * z ** (-q - 1.0)])

    def hess_V(z):
        z = float(np.asarray(z).reshape(-1)[0])
        return np.array([[q * (q + 1.0) * z ** (-q - 2.0)]])

    return LyapunovSpec(V, grad_V, hess_V, q, "bessel")


def mean_variance_lyapunov(q):
    """V(z) = 1 + z2 + h^-q with h = z2 - z1^2."""
    q = _check_q(q)

    def _h(z):
        z = np.asarray(z, dtype=float).reshape(-1)
        return z[0], z[1], z[1] - z[0] * z[0]

    def V(z):
        _, z2, h = _h(z)
        return 1.0 + z2 + h**-q

    def grad_V(z):
        z1, _, h = _h(z)
        return np.array([2.0 * q * z1 * h ** (-q - 1.0), 1.0 - q * h ** (-q - 1.0)])

    def hess_V(z):
        z1, _, h = _h(z)
        a = q * h ** (-q - 1.0)
        c = q * (q + 1.0) * h ** (-q - 2.0)
        return np.array([[2.0 * a + 4.0 * c * z1 * z1, -2.0 * c * z1], [-2.0 * c * z1, c]])

    return LyapunovSpec(V, grad_V, hess_V, q, "mean_variance")


def quadratic_lyapunov(p=1, constant=1.0):
    """V(z) = constant + |z|^2."""
    p = int(p)

    def V(z):
        z = np.asarray(z, dtype=float).reshape(-1)
        return constant + float(z @ z)

    return LyapunovSpec(
        V,
        lambda z: 2.0 * np.asarray(z, dtype=float).reshape(-1),
        lambda z: 2.0 * np.eye(p),
        2.0,
        "quadratic",
    )


def builtin_lyapunov(drv, q=None):
    """The Lyapunov function matched to a builtin driver."""
    if drv.name == "bessel":
        return bessel_lyapunov(default_q(drv.params["delta"]) if q is None else q)
    if drv.name == "mean_variance":
        return mean_variance_lyapunov(default_q(drv.params["delta"]) if q is None else q)
    if drv.name == "brownian":
        return quadratic_lyapunov(drv.dim_p)
    raise ConfigurationError(f"no builtin Lyapunov function for driver {drv.name!r}", "driver.name")


def generator_value(spec, drv, z):
    """a(z) . grad V(z) + 1/2 (s s^T)(z) : hess V(z)."""
    z = np.asarray(z, dtype=float).reshape(-1)
    if not drv.singularity_margin(z) > 0:
        raise DriverSingularity(f"z = {z} lies on the singular set of the driver")
    a = np.asarray(drv.a(z), dtype=float).reshape(-1)
    s = np.asarray(drv.s(z), dtype=float)
    ss = s @ s.T
    return float(a @ np.asarray(spec.grad_V(z), dtype=float) + 0.5 * np.sum(ss * np.asarray(spec.hess_V(z))))


def bessel_generator_closed(delta, q, z):
    return (delta - 1.0) / (2.0 * z) + q * (q + 2.0 - delta) / (2.0 * z ** (q + 2.0))


def mean_variance_generator_closed(delta, q, z):
    z = np.asarray(z, dtype=float).reshape(-1)
    h = z[1] - z[0] * z[0]
    return 1.0 + (delta - 1.0) / (2.0 * h) + 0.5 * q * (2.0 + q - delta) / h ** (q + 2.0)


@dataclass(frozen=True)
class LyapunovReport:
    sup_ratio: float  # sup of generator_value / V over the admissible grid points
    argsup: np.ndarray
    violations: list  # grid points where the ratio exceeds ``bound`` or is not finite
    n_points: int
    n_skipped: int  # grid points on the singular set


def lyapunov_report(spec, drv, grid, bound=None):
    """Empirical sup of G/V over ``grid`` (an iterable of z points)."""
    pts = [np.asarray(z, dtype=float).reshape(-1) for z in grid]
    best, arg, viol, skipped = -np.inf, None, [], 0
    for z in pts:
        if not drv.singularity_margin(z) > 0:
            skipped += 1
            continue
        r = generator_value(spec, drv, z) / spec.V(z)
        if not np.isfinite(r) or (bound is not None and r > bound):
            viol.append(z)
        if r > best:
            best, arg = r, z
    return LyapunovReport(float(best), arg, viol, len(pts), skipped)


@dataclass(frozen=True)
class RefinementReport:
    sups: np.ndarray  # sup of G/V on each refinement level
    bounded: bool  # sup finite and stable between the last two levels


def refinement_report(spec, drv, grids, rtol=1e-6):
    """Evaluate :func:`lyapunov_report` on nested grids reaching closer to the
    singular set and decide whether a finite constant plausibly exists."""
    sups = np.array([lyapunov_report(spec, drv, g).sup_ratio for g in grids])
    if sups.size < 2:
        raise ConfigurationError("refinement needs at least two grids", "lyapunov.levels")
    a, b = sups[-2], sups[-1]
    bounded = bool(np.all(np.isfinite(sups)) and abs(b - a) <= rtol * max(1.0, abs(a)))
    return RefinementReport(sups, bounded)


def log_grid(lo, hi, n):
    return np.geomspace(lo, hi, int(n))


def refined_grids(drv, levels=4, hi=1e3, lo0=1e-3, per_decade=20):
    """Nested log grids whose lower end shrinks by 3 decades per level.

    For ``mean_variance`` the variance surrogate h is log-spaced and z1 takes
    a few values; other drivers get one-dimensional grids in z.
    """
    out = []
    for lev in range(int(levels)):
        lo = lo0 * 10.0 ** (-3 * lev)
        hs = log_grid(lo, hi, per_decade * int(round(np.log10(hi / lo))) + 1)
        if drv.name == "mean_variance":
            out.append([np.array([m, h + m * m]) for m in (-1.0, 0.0, 0.5, 2.0) for h in hs])
        else:
            out.append([np.array([h]) for h in hs])
    return out


# -- minimizers and transitions ---------------------------------------------


def estimate_minimizers(dyn, inits, t_relax=20.0, cfg=None):
    """Relax the plain particle system (no moment term) from each init.

    ``inits`` holds :class:`InitSpec` objects or ``(N, d)`` sample arrays;
    ``cfg`` supplies N, dt and seeds (defaults: N=1000, dt=1e-2).
    """
    if cfg is None:
        cfg = SimConfig(1000, 1e-2, t_relax)
    out = []
    for init in inits:
        if not isinstance(init, InitSpec):
            init = InitSpec("samples", samples=np.asarray(init, dtype=float))
        c = replace(
            cfg,
            t_final=float(t_relax),
            gamma=0.0,
            init=init,
            n_particles=init.samples.shape[0] if init.kind == "samples" else cfg.n_particles,
            snapshot_stride=0,
        )
        traj = run(c, None, None, dyn)
        out.append(EmpiricalMeasure(traj.final_positions))
    return out


@dataclass(frozen=True)
class TransitionStats:
    n_transitions: int
    transition_times: np.ndarray
    dwell_times: np.ndarray  # time spent between consecutive transitions


def transition_stats(traj, burn_in=0.0, band=0.2, times=None):
    """Count basin changes of the mean after ``burn_in``.

    ``traj`` is a Trajectory or a raw mean series (then ``times`` defaults to
    the sample index). The mean must pass beyond ``+band`` or ``-band`` to
    count as being in a basin; a transition is a move from one basin to the
    other, so chatter inside the band is ignored.
    """
    if hasattr(traj, "mean_series"):
        m, t = np.asarray(traj.mean_series), np.asarray(traj.times)
    else:
        m = np.asarray(traj, dtype=float)
        t = np.arange(m.size, dtype=float) if times is None else np.asarray(times, dtype=float)
    keep = t >= burn_in
    m, t = m[keep], t[keep]
    state, hits = 0, []
    for mi, ti in zip(m, t):
        s = 1 if mi > band else (-1 if mi < -band else 0)
        if s == 0:
            continue
        if state != 0 and s != state:
            hits.append(ti)
        state = s
    hits = np.array(hits)
    return TransitionStats(int(hits.size), hits, np.diff(hits))


# -- Wasserstein tracking ----------------------------------------------------


@dataclass(frozen=True)
class WassersteinTrack:
    times: np.ndarray
    distances: np.ndarray  # (n_snapshots, n_refs)
    nearest: np.ndarray  # index of the closest reference at each snapshot
    argmin_times: np.ndarray  # per reference, the time of closest approach
    minima: np.ndarray  # per reference, the smallest distance


def wasserstein_track(traj, refs, p=2.0):
    if traj.snapshots is None or len(traj.snapshots) == 0:
        raise ConfigurationError("trajectory has no snapshots; set snapshot_stride > 0", "sim.snapshot_stride")
    refs = [as_measure(r) for r in refs]
    D = np.array([[wasserstein_1d(p, snap, r) for r in refs] for snap in traj.snapshots])
    D = D.reshape(len(traj.snapshots), len(refs))
    times = np.asarray(traj.snapshot_times)
    am = D.argmin(axis=0)
    return WassersteinTrack(times, D, D.argmin(axis=1), times[am], D.min(axis=0))


def sup_wasserstein(traj_a, traj_b, p=2.0):
    """sup over the shared snapshot times of W_p between two coupled runs."""
    if traj_a.snapshots is None or traj_b.snapshots is None:
        raise ConfigurationError("both trajectories need snapshots", "sim.snapshot_stride")
    n = min(len(traj_a.snapshots), len(traj_b.snapshots))
    if n == 0:
        raise ConfigurationError("no shared snapshot times", "sim.snapshot_stride")
    if not np.array_equal(traj_a.snapshot_times[:n], traj_b.snapshot_times[:n]):
        raise ConfigurationError("snapshot times differ", "sim.snapshot_stride")
    return max(wasserstein_1d(p, traj_a.snapshots[i], traj_b.snapshots[i]) for i in range(n))
