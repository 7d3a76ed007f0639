"""Target SDEs dZ = a(Z) dt + s(Z) dW for the controlled moments.

Each driver carries a ``singularity_margin``: positive away from the
singular set, zero on it, ``inf`` when the set is empty. For
:func:`mean_variance` the margin is the variance surrogate ``z2 - z1**2``
rather than the Euclidean distance to the parabola; it is monotone in the
approach to the set, which is all the explosion monitor needs.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DriverSingularity


@dataclass(frozen=True, eq=False)
class MomentDriver:
    dim_p: int
    a: Callable[[np.ndarray], np.ndarray]
    s: Callable[[np.ndarray], np.ndarray]
    singularity_margin: Callable[[np.ndarray], float]
    name: str = "custom"
    params: dict = field(default_factory=dict)
    # (a_scale, s_scale) applied on top of the builtin formulas
    scale: tuple = (1.0, 1.0)

    def scaled(self, gamma):
        """Driver of the gamma-scaled SDE: a -> gamma**2 a, s -> gamma s."""
        g = float(gamma)
        a0, s0 = self.a, self.s
        return MomentDriver(
            self.dim_p,
            lambda z: a0(z) * (g * g),
            lambda z: s0(z) * g,
            self.singularity_margin,
            self.name,
            dict(self.params),
            (self.scale[0] * g * g, self.scale[1] * g),
        )


def brownian(p=1):
    if p < 1:
        raise ConfigurationError("p must be >= 1", "driver.p")
    p = int(p)
    eye = np.eye(p)

    return MomentDriver(
        p,
        lambda z: np.zeros(p),
        lambda z: eye.copy(),
        lambda z: np.inf,
        "brownian",
        {"p": p},
    )


def bessel(delta):
    """Bessel-type driver a(z) = (delta - 1) / (2 z), s = 1 on z > 0."""
    if not delta > 0:
        raise ConfigurationError("delta must be positive", "driver.delta")
    delta = float(delta)

    def a(z):
        z0 = float(np.asarray(z).reshape(-1)[0])
        if z0 <= 0:
            raise DriverSingularity(f"bessel drift evaluated at z={z0}")
        return np.array([(delta - 1.0) / (2.0 * z0)])

    return MomentDriver(
        1,
        a,
        lambda z: np.ones((1, 1)),
        lambda z: float(np.asarray(z).reshape(-1)[0]),
        "bessel",
        {"delta": delta},
    )


def mean_variance(delta):
    """Mean as a Brownian motion, variance as an independent delta-Bessel process."""
    if not delta > 0:
        raise ConfigurationError("delta must be positive", "driver.delta")
    delta = float(delta)

    def margin(z):
        z = np.asarray(z, dtype=float).reshape(-1)
        return float(z[1] - z[0] * z[0])

    def a(z):
        h = margin(z)
        if h <= 0:
            raise DriverSingularity(f"mean_variance drift evaluated at variance {h}")
        return np.array([0.0, 1.0 + (delta - 1.0) / (2.0 * h)])

    def s(z):
        z1 = float(np.asarray(z).reshape(-1)[0])
        return np.array([[1.0, 0.0], [2.0 * z1, 1.0]])

    return MomentDriver(2, a, s, margin, "mean_variance", {"delta": delta})


_BUILTINS = {"brownian": brownian, "bessel": bessel, "mean_variance": mean_variance}


def builtin(name, **params):
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown driver {name!r}; expected one of {sorted(_BUILTINS)}", "driver.name"
        ) from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigurationError(str(exc), "driver") from None
