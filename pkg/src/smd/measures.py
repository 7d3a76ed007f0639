"""Empirical measures and the statistics computed from them."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, UnsupportedDimension


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Uniformly weighted atoms at ``positions`` (shape ``(N, d)``)."""

    positions: np.ndarray

    def __post_init__(self):
        x = np.array(self.positions, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] < 1:
            raise ConfigurationError("an empirical measure needs at least one atom")
        if not np.all(np.isfinite(x)):
            raise ConfigurationError("positions must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "positions", x)

    @property
    def n(self):
        return self.positions.shape[0]

    @property
    def d(self):
        return self.positions.shape[1]


def as_measure(pi):
    return pi if isinstance(pi, EmpiricalMeasure) else EmpiricalMeasure(pi)


def _check_dims(pi, obs):
    if pi.d != obs.dim_d:
        raise ConfigurationError(f"measure lives in R^{pi.d} but observable expects R^{obs.dim_d}")


def f_moment(pi, obs):
    pi = as_measure(pi)
    _check_dims(pi, obs)
    X = pi.positions
    z, _ = kernels.moments(np.ascontiguousarray(obs.values(X)), np.ascontiguousarray(obs.grads(X)))
    return z


def gram(pi, obs):
    """The p x p matrix (1/N) sum_i grad f(x_i)^T grad f(x_i)."""
    pi = as_measure(pi)
    _check_dims(pi, obs)
    X = pi.positions
    _, G = kernels.moments(np.ascontiguousarray(obs.values(X)), np.ascontiguousarray(obs.grads(X)))
    return G


def poly_moment(pi, gamma):
    if gamma < 1:
        raise ConfigurationError("moment order must be >= 1")
    pi = as_measure(pi)
    return float(kernels.power_moment(pi.positions, float(gamma)))


def mean(pi):
    return kernels.column_means(as_measure(pi).positions)


def wasserstein_1d(p, a, b):
    """Order-``p`` Wasserstein distance between two measures on the line.

    Uses the quantile coupling: sorted samples for equal sizes, and the
    merged breakpoint grid of both quantile functions otherwise.
    """
    if p < 1:
        raise ConfigurationError("Wasserstein order must be >= 1")
    a, b = as_measure(a), as_measure(b)
    if a.d != 1 or b.d != 1:
        raise UnsupportedDimension("wasserstein_1d only handles one-dimensional measures")
    xs = np.sort(a.positions[:, 0])
    ys = np.sort(b.positions[:, 0])
    return float(kernels.wasserstein_sorted(xs, ys, float(p)))
