"""Baseline McKean-Vlasov drift: confinement plus pairwise interaction."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .measures import as_measure


def double_well_grad(x):
    """Gradient of U(x) = x^4/4 - x^2/2."""
    return x * x * x - x


def quadratic_grad(x):
    """Gradient of x^2/2 (quadratic confinement or attractive interaction)."""
    return np.array(x, dtype=float, copy=True)


def zero_grad(x):
    return np.zeros_like(x, dtype=float)


_U_CODES = {zero_grad: 0, double_well_grad: 1, quadratic_grad: 2}
_W_CODES = {zero_grad: 0, quadratic_grad: 1}


@dataclass(frozen=True, eq=False)
class BaselineDynamics:
    """Drift ``-gradU(x) - mean_j gradW(x - x_j)`` and isotropic noise ``sigma_tilde``."""

    grad_u: Callable[[np.ndarray], np.ndarray]
    grad_w: Callable[[np.ndarray], np.ndarray]
    sigma_tilde: float = 0.0

    def __post_init__(self):
        if not self.sigma_tilde >= 0:
            raise ValueError("sigma_tilde must be non-negative")

    @property
    def codes(self):
        """Integer codes for the fused stepper, or None for custom potentials."""
        u = _U_CODES.get(self.grad_u)
        w = _W_CODES.get(self.grad_w)
        return None if u is None or w is None else (u, w)

    def drift(self, x, pi=None):
        """Drift at points ``x`` (shape ``(n, d)``) against the measure ``pi``.

        ``pi=None`` means the measure of the points themselves.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        atoms = x if pi is None else as_measure(pi).positions
        out = -self.grad_u(x)
        if self.grad_w is zero_grad:
            return out
        if self.grad_w is quadratic_grad:
            # mean_j (x - x_j) = x - mean, O(N)
            return out - (x - kernels.column_means(np.ascontiguousarray(atoms)))
        diff = x[:, None, :] - atoms[None, :, :]
        gw = self.grad_w(diff.reshape(-1, x.shape[1])).reshape(diff.shape)
        return out - gw.sum(axis=1) / atoms.shape[0]


def granular_media(grad_u=zero_grad, grad_w=zero_grad, sigma_tilde=0.0):
    return BaselineDynamics(grad_u, grad_w, float(sigma_tilde))


def builtin_double_well():
    """(gradU, gradW) for the double-well confinement with quadratic attraction."""
    return double_well_grad, quadratic_grad


NONE = BaselineDynamics(zero_grad, zero_grad, 0.0)


@dataclass(frozen=True)
class CoercivityReport:
    radii: np.ndarray
    ratios: np.ndarray  # <b(x), x> / |x|^q, one row per radius, one column per direction
    sup: float
    inf: float
    violations: list  # (radius, direction index) where <b, x> > -c |x|^q + C


def coercivity_probe(dyn, radius_grid, sample_measure=None, q=2.0, c=0.0, C=0.0, directions=None):
    """Evaluate ``<b(x, pi), x> / |x|^q`` along rays.

    ``sample_measure=None`` drops the interaction term. ``directions``
    defaults to the +/- coordinate axes.
    """
    radii = np.asarray(radius_grid, dtype=float)
    if sample_measure is None:
        d = 1 if directions is None else np.atleast_2d(directions).shape[1]
    else:
        sample_measure = as_measure(sample_measure)
        d = sample_measure.d
    if directions is None:
        directions = np.vstack([np.eye(d), -np.eye(d)])
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    directions = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    probe = BaselineDynamics(dyn.grad_u, zero_grad if sample_measure is None else dyn.grad_w)
    ratios = np.empty((radii.size, directions.shape[0]))
    violations = []
    for i, r in enumerate(radii):
        pts = r * directions
        drift = probe.drift(pts, sample_measure)
        inner = np.einsum("nu,nu->n", drift, pts)
        ratios[i] = inner / r**q
        for j in np.nonzero(inner > -c * r**q + C)[0]:
            violations.append((float(r), int(j)))
    return CoercivityReport(radii, ratios, float(ratios.max()), float(ratios.min()), violations)
