"""Observable families f = (f_1, ..., f_p) and their derivatives.

All evaluation is batched: ``values`` maps an ``(N, d)`` array of positions
to ``(N, p)``, ``grads`` to the Jacobians ``(N, d, p)`` (column ``j`` is the
gradient of ``f_j``) and ``hessians`` to ``(N, p, d, d)``.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError

FD_STEP = np.cbrt(np.finfo(float).eps)


@dataclass(frozen=True)
class Growth:
    """Growth class of an observable.

    ``kind`` is ``"quadratic"`` (every f_k is a quadratic form plus affine
    part), ``"bounded"`` (f, grad f, hess f bounded and Lipschitz) or
    ``"polynomial"`` with the local-Lipschitz exponents of f, grad f and
    hess f.
    """

    kind: str
    alpha1: float = 0.0
    alpha2: float = 0.0
    alpha3: float = 0.0

    def __post_init__(self):
        if self.kind not in ("quadratic", "bounded", "polynomial"):
            raise ConfigurationError(f"unknown growth class {self.kind!r}")
        if min(self.alpha1, self.alpha2, self.alpha3) < 0:
            raise ConfigurationError("growth exponents must be non-negative")


QUADRATIC = Growth("quadratic")
BOUNDED = Growth("bounded")


def polynomial(alpha1, alpha2, alpha3):
    return Growth("polynomial", float(alpha1), float(alpha2), float(alpha3))


@dataclass(frozen=True, eq=False)
class Observable:
    dim_d: int
    dim_p: int
    values: Callable[[np.ndarray], np.ndarray]
    grads: Callable[[np.ndarray], np.ndarray]
    hessians: Callable[[np.ndarray], np.ndarray]
    growth: Growth
    name: str = "custom"
    # builtin tag used by the fused numba stepper; None for custom observables
    builtin: str | None = None

    def f(self, x):
        return self.values(_as_batch(x, self.dim_d))[0]

    def grad_f(self, x):
        return self.grads(_as_batch(x, self.dim_d))[0]

    def hess_fk(self, x, k):
        """Hessian of component ``k`` (0-based) at a single point."""
        return self.hessians(_as_batch(x, self.dim_d))[0, k]


def _as_batch(x, d):
    x = np.asarray(x, dtype=float).reshape(-1, d)
    return x


def alpha_of(obs):
    """Wasserstein order attached to the growth class of ``obs``."""
    g = obs.growth if isinstance(obs, Observable) else obs
    if g.kind in ("quadratic", "bounded"):
        return 2.0
    return max(g.alpha1 + 1.0, 2.0 * g.alpha2 + g.alpha3 + 3.0)


def grad_growth_beta(obs):
    """Polynomial growth order of grad f for the growth class of ``obs``."""
    g = obs.growth if isinstance(obs, Observable) else obs
    if g.kind == "quadratic":
        return 1.0
    if g.kind == "bounded":
        return 0.0
    return g.alpha2 + 1.0


# -- builtins ---------------------------------------------------------------


def identity_d(d=1):
    def values(X):
        return np.array(X, dtype=float, copy=True)

    def grads(X):
        return np.broadcast_to(np.eye(d), (X.shape[0], d, d)).copy()

    def hessians(X):
        return np.zeros((X.shape[0], d, d, d))

    return Observable(d, d, values, grads, hessians, QUADRATIC, f"identity_{d}d", "identity")


def second_moment_1d():
    def values(X):
        return X * X

    def grads(X):
        return (2.0 * X)[:, :, None]

    def hessians(X):
        return np.full((X.shape[0], 1, 1, 1), 2.0)

    return Observable(1, 1, values, grads, hessians, QUADRATIC, "second_moment_1d", "second_moment")


def mean_and_second_1d():
    def values(X):
        x = X[:, 0]
        return np.stack([x, x * x], axis=1)

    def grads(X):
        x = X[:, 0]
        return np.stack([np.ones_like(x), 2.0 * x], axis=1)[:, None, :]

    def hessians(X):
        H = np.zeros((X.shape[0], 2, 1, 1))
        H[:, 1, 0, 0] = 2.0
        return H

    return Observable(1, 2, values, grads, hessians, QUADRATIC, "mean_and_second_1d", "mean_and_second")


def tanh_1d():
    # sech^2 computed as 1/cosh^2 stays accurate in the tails, where
    # 1 - tanh^2 cancels to zero
    def values(X):
        return np.tanh(X)

    def grads(X):
        sech = 1.0 / np.cosh(X)
        return (sech * sech)[:, :, None]

    def hessians(X):
        sech = 1.0 / np.cosh(X)
        return (-2.0 * np.tanh(X) * sech * sech)[:, :, None, None]

    return Observable(1, 1, values, grads, hessians, BOUNDED, "tanh_1d", "tanh")


_BUILTINS = {
    "identity_d": identity_d,
    "second_moment_1d": second_moment_1d,
    "mean_and_second_1d": mean_and_second_1d,
    "tanh_1d": tanh_1d,
}


def builtin(name, d=1):
    """Return a builtin observable by name."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown observable {name!r}; expected one of {sorted(_BUILTINS)}", "observable.name"
        ) from None
    if name == "identity_d":
        return factory(int(d))
    if d != 1:
        raise ConfigurationError(f"{name} is one-dimensional", "observable.d")
    return factory()


# -- custom observables -----------------------------------------------------


def derivative_errors(obs, points):
    """Scaled finite-difference errors of ``grads`` and ``hessians``.

    Returns ``(grad_err, hess_err)``: the largest centred-difference mismatch
    at ``points`` divided by ``max(1, |analytic|)``.
    """
    points = np.asarray(points, dtype=float).reshape(-1, obs.dim_d)
    d, p = obs.dim_d, obs.dim_p
    J = obs.grads(points)
    H = obs.hessians(points)
    grad_err = 0.0
    hess_err = 0.0
    for u in range(d):
        h = FD_STEP * np.maximum(1.0, np.abs(points[:, u]))
        plus = points.copy()
        minus = points.copy()
        plus[:, u] += h
        minus[:, u] -= h
        step = (plus[:, u] - minus[:, u])[:, None]
        fd_grad = (obs.values(plus) - obs.values(minus)) / step
        grad_err = max(grad_err, _scaled_err(fd_grad, J[:, u, :]))
        fd_hess = (obs.grads(plus) - obs.grads(minus)) / step[:, :, None]
        # fd_hess[n, v, k] approximates d^2 f_k / dx_u dx_v
        for k in range(p):
            hess_err = max(hess_err, _scaled_err(fd_hess[:, :, k], H[:, k, u, :]))
    return grad_err, hess_err


def _scaled_err(approx, exact):
    scale = np.maximum(1.0, np.abs(exact))
    return float(np.max(np.abs(approx - exact) / scale))


def validate_derivatives(obs, n_points=100, seed=0, scale=2.0, grad_tol=1e-6, hess_tol=1e-5):
    rng = np.random.default_rng(seed)
    pts = scale * rng.standard_normal((n_points, obs.dim_d))
    ge, he = derivative_errors(obs, pts)
    if ge > grad_tol:
        raise ConfigurationError(f"gradient disagrees with finite differences (err {ge:.3g})")
    if he > hess_tol:
        raise ConfigurationError(f"Hessian disagrees with finite differences (err {he:.3g})")
    return ge, he


def custom(values, grads, hessians, dim_d, dim_p, growth, name="custom", check=True):
    """Register a user observable from batched callables.

    The derivatives are checked against finite differences; the declared
    growth class is trusted as given.
    """
    obs = Observable(int(dim_d), int(dim_p), values, grads, hessians, growth, name)
    if check:
        validate_derivatives(obs)
    return obs


def from_pointwise(f, grad, hess, dim_d, dim_p, growth, name="custom", check=True):
    """Like :func:`custom` but from single-point callables.

    ``f(x) -> (p,)``, ``grad(x) -> (d, p)``, ``hess(x) -> (p, d, d)``.
    """

    def values(X):
        return np.array([np.atleast_1d(f(x)) for x in X], dtype=float).reshape(len(X), dim_p)

    def grads(X):
        return np.array([grad(x) for x in X], dtype=float).reshape(len(X), dim_d, dim_p)

    def hessians(X):
        return np.array([hess(x) for x in X], dtype=float).reshape(len(X), dim_p, dim_d, dim_d)

    return custom(values, grads, hessians, dim_d, dim_p, growth, name, check)
