"""Per-particle drift and diffusion of the stochastic moment dynamics.

With J_i = grad f(x_i) (d x p), G = mean_i J_i^T J_i and A = eta I + G:

    sigma_i = J_i A^{-1} s(z)
    b_i     = J_i A^{-1} (a(z) - c / 2)

where z = mean f and c_k = mean_i sum_uv (J_i B J_i^T)_uv d2_uv f_k(x_i) with
B = M M^T, M = A^{-1} s(z). A is factorized once and reused for both solves.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, DriverSingularity, SingularGram
from .measures import as_measure, poly_moment
from .observables import alpha_of

DEFAULT_DET_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class SmdField:
    b: np.ndarray  # (N, d)
    sigma: np.ndarray  # (N, d, p)
    det_gram: float  # det of the unregularized Gram matrix
    z: np.ndarray  # (p,)


def compute_field(pi, obs, drv, eta=0.0, det_floor=DEFAULT_DET_FLOOR):
    pi = as_measure(pi)
    if pi.d != obs.dim_d or drv.dim_p != obs.dim_p:
        raise ConfigurationError("observable, driver and measure dimensions disagree")
    X = pi.positions
    F = np.ascontiguousarray(obs.values(X), dtype=float)
    J = np.ascontiguousarray(obs.grads(X), dtype=float)
    H = np.ascontiguousarray(obs.hessians(X), dtype=float)
    return field_from_arrays(F, J, H, drv, eta, det_floor)


def field_from_arrays(F, J, H, drv, eta=0.0, det_floor=DEFAULT_DET_FLOOR, z=None, G=None):
    """:func:`compute_field` on pre-evaluated f, grad f and Hessians."""
    if eta < 0:
        raise ConfigurationError("eta must be non-negative")
    if z is None:
        z, G = kernels.moments(F, J)
    p = G.shape[0]
    det = float(kernels.small_det(G))
    if eta == 0.0 and not det > det_floor:
        raise SingularGram(f"det(G) = {det:.3g} <= {det_floor:.3g}")
    if not drv.singularity_margin(z) > 0:
        raise DriverSingularity(f"moment vector {z} is on the singular set")
    A = G + eta * np.eye(p) if eta else G
    ok, M = kernels.chol_solve(A, np.ascontiguousarray(drv.s(z), dtype=float))
    if not ok:
        raise SingularGram("Cholesky factorization of the Gram matrix failed")
    B = M @ M.T
    c = kernels.ito_moment(J, H, B)
    R = np.asarray(drv.a(z), dtype=float) - 0.5 * c
    ok, NV = kernels.chol_solve(A, np.ascontiguousarray(R.reshape(p, 1)))
    if not ok:  # pragma: no cover - same matrix as above
        raise SingularGram("Cholesky factorization of the Gram matrix failed")
    sigma, b = kernels.assemble(J, M, np.ascontiguousarray(NV[:, 0]))
    return SmdField(b, sigma, det, z)


# -- closed forms -----------------------------------------------------------


def closed_form(name, pi, **params):
    """Explicit one-dimensional coefficients, evaluated without any solve.

    ``name`` is one of ``bessel_x2`` (delta), ``mean_variance`` (delta),
    ``reg_x2`` (eta) and ``reg_tanh`` (eta).

    For ``mean_variance`` the diffusion is ``(1, (x - m) / (2 Var))`` with
    no delta dependence; scaling the second entry by ``delta - 3/2`` would
    break ``mean(grad f^T sigma) = s(z)``.
    """
    pi = as_measure(pi)
    if pi.d != 1:
        raise ConfigurationError("closed forms are one-dimensional")
    x = pi.positions[:, 0]
    n = x.shape[0]
    if name == "bessel_x2":
        delta = float(params["delta"])
        m2 = np.mean(x * x)
        if m2 == 0:
            raise SingularGram("second moment vanishes")
        b = (delta - 1.5) / (4.0 * m2 * m2) * x
        sig = x / (2.0 * m2)
        return SmdField(b[:, None], sig.reshape(n, 1, 1), 4.0 * m2, np.array([m2]))
    if name == "mean_variance":
        delta = float(params["delta"])
        m = np.mean(x)
        var = np.mean((x - m) ** 2)
        if var == 0:
            raise SingularGram("variance vanishes")
        b = (delta - 1.5) / (4.0 * var * var) * (x - m)
        sig = np.stack([np.ones(n), (x - m) / (2.0 * var)], axis=1)
        return SmdField(b[:, None], sig[:, None, :], 4.0 * var, np.array([m, np.mean(x * x)]))
    if name == "reg_x2":
        eta = float(params["eta"])
        m2 = np.mean(x * x)
        den = eta + 4.0 * m2
        if den == 0:
            raise SingularGram("eta + 4 m2 vanishes")
        b = -8.0 * x * m2 / den**3
        sig = 2.0 * x / den
        return SmdField(b[:, None], sig.reshape(n, 1, 1), 4.0 * m2, np.array([m2]))
    if name == "reg_tanh":
        eta = float(params["eta"])
        sech2 = 1.0 / np.cosh(x) ** 2
        g = np.mean(sech2 * sech2)
        den = eta + g
        if den == 0:
            raise SingularGram("eta + mean(sech^4) vanishes")
        b = sech2 * np.mean(np.tanh(x) * sech2**3) / den**3
        sig = sech2 / den
        return SmdField(b[:, None], sig.reshape(n, 1, 1), g, np.array([np.mean(np.tanh(x))]))
    raise ConfigurationError(f"unknown closed form {name!r}")


# -- cut-off functions ------------------------------------------------------


def ramp_down(r, u):
    """Lipschitz version of the indicator of [0, r]: 1, then slope -1, then 0."""
    if u <= r:
        return 1.0
    if u >= r + 1.0:
        return 0.0
    return r + 1.0 - u


def ramp_up(r, u):
    """Lipschitz version of the indicator of [1/r, inf), slope r (r + 1)."""
    if u <= 1.0 / (r + 1.0):
        return 0.0
    if u >= 1.0 / r:
        return 1.0
    return r * (r + 1.0) * u - r


def cutoff_chi(x, pi, obs, drv, K, M):
    """Truncation weight in [0, 1]; equal to 1 well inside the localization domain."""
    if not (K > 0 and M > 0):
        raise ConfigurationError("K and M must be positive")
    pi = as_measure(pi)
    X = pi.positions
    z, G = kernels.moments(
        np.ascontiguousarray(obs.values(X), dtype=float), np.ascontiguousarray(obs.grads(X), dtype=float)
    )
    r = float(np.linalg.norm(np.asarray(x, dtype=float)))
    return (
        ramp_down(K, r)
        * ramp_down(M, poly_moment(pi, alpha_of(obs)))
        * ramp_up(M, drv.singularity_margin(z))
        * ramp_up(M, float(kernels.small_det(G)))
    )
