"""Whole-step numba kernels for the builtin observables, drivers and
baseline dynamics. Only imported with the numba backend; the generic
Python stepper in :mod:`smd.simulator` is the reference they must match."""

import numpy as np
from numba import njit

from ._numba import (
    assemble,
    chol_solve,
    column_means,
    euler_update,
    first_coordinate_stats,
    ito_moment,
    moments,
    power_moment,
    small_det,
)

OBS_CODES = {"identity": 0, "second_moment": 1, "mean_and_second": 2, "tanh": 3}
DRV_CODES = {"brownian": 0, "bessel": 1, "mean_variance": 2}

MOMENT_CAP, SINGULARITY_MARGIN, DET_FLOOR, OVERFLOW = 1, 2, 3, 4


@njit(cache=True)
def obs_eval(code, X, F, J, H):
    n, d = X.shape
    for i in range(n):
        if code == 0:
            for u in range(d):
                F[i, u] = X[i, u]
                for v in range(d):
                    J[i, u, v] = 1.0 if u == v else 0.0
        elif code == 1:
            x = X[i, 0]
            F[i, 0] = x * x
            J[i, 0, 0] = 2.0 * x
            H[i, 0, 0, 0] = 2.0
        elif code == 2:
            x = X[i, 0]
            F[i, 0] = x
            F[i, 1] = x * x
            J[i, 0, 0] = 1.0
            J[i, 0, 1] = 2.0 * x
            H[i, 1, 0, 0] = 2.0
        else:
            x = X[i, 0]
            t = np.tanh(x)
            sech = 1.0 / np.cosh(x)
            F[i, 0] = t
            J[i, 0, 0] = sech * sech
            H[i, 0, 0, 0] = -2.0 * t * sech * sech


@njit(cache=True)
def drv_margin(code, z):
    if code == 0:
        return np.inf
    if code == 1:
        return z[0]
    return z[1] - z[0] * z[0]


@njit(cache=True)
def drv_eval(code, delta, a_scale, s_scale, z, a, s):
    p = a.shape[0]
    for i in range(p):
        a[i] = 0.0
        for j in range(p):
            s[i, j] = (1.0 if i == j else 0.0) * s_scale
    if code == 1:
        a[0] = (delta - 1.0) / (2.0 * z[0]) * a_scale
    elif code == 2:
        h = z[1] - z[0] * z[0]
        a[1] = (1.0 + (delta - 1.0) / (2.0 * h)) * a_scale
        s[1, 0] = 2.0 * z[0] * s_scale


@njit(cache=True)
def baseline_drift(u_code, w_code, X, out):
    n, d = X.shape
    m = column_means(X) if w_code == 1 else np.zeros(d)
    for i in range(n):
        for u in range(d):
            x = X[i, u]
            if u_code == 1:
                v = -(x * x * x - x)
            elif u_code == 2:
                v = -x
            else:
                v = -0.0
            if w_code == 1:
                v = v - (x - m[u])
            out[i, u] = v


@njit(cache=True)
def check_policy(malpha, margin, det, cap, margin_floor, det_floor):
    if not malpha < cap:
        return MOMENT_CAP
    if not margin > margin_floor:
        return SINGULARITY_MARGIN
    if not det > det_floor:
        return DET_FLOOR
    return 0


@njit(cache=True)
def state_stats(X, has_obs, obs_code, drv_code, p, alpha, F, J, H, zout, sout):
    """Fill ``zout`` (p,) and ``sout`` = (det, margin, m_alpha, mean, m2, var).

    Returns the Gram matrix (empty without an observable).
    """
    if has_obs:
        obs_eval(obs_code, X, F, J, H)
        z, G = moments(F, J)
        for a in range(p):
            zout[a] = z[a]
        sout[0] = small_det(G)
        sout[1] = drv_margin(drv_code, z)
    else:
        G = np.zeros((0, 0))
        sout[0] = np.inf
        sout[1] = np.inf
    sout[2] = power_moment(X, alpha)
    m, m2, var = first_coordinate_stats(X)
    sout[3] = m
    sout[4] = m2
    sout[5] = var
    return G


@njit(cache=True)
def advance(
    X, n_steps, dW0, dW, dt,
    has_obs, obs_code, drv_code, delta, a_scale, s_scale, eta, field_det_floor, gamma,
    u_code, w_code, sig_tilde,
    alpha, cap, margin_floor, det_floor,
    zbuf, sbuf,
):
    """Advance X in place by up to ``n_steps`` Euler steps.

    Before step k the monitor statistics of the current state are written to
    ``zbuf[k]`` and ``sbuf[k]``. Returns ``(steps_done, cause)``; ``cause``
    is 0 when all steps ran, otherwise the state that triggered is the one
    described by row ``steps_done`` of the buffers.
    """
    n, d = X.shape
    p = zbuf.shape[1]
    F = np.zeros((n, p))
    J = np.zeros((n, d, p))
    H = np.zeros((n, p, d, d))
    drift = np.zeros((n, d))
    b = np.zeros((n, d))
    sigma = np.zeros((n, d, p))
    a = np.zeros(p)
    s = np.zeros((p, p))
    A = np.zeros((p, p))
    B = np.zeros((p, p))
    R = np.zeros((p, 1))
    for k in range(n_steps):
        G = state_stats(X, has_obs, obs_code, drv_code, p, alpha, F, J, H, zbuf[k], sbuf[k])
        det = sbuf[k, 0]
        margin = sbuf[k, 1]
        cause = check_policy(sbuf[k, 2], margin, det, cap, margin_floor, det_floor)
        if cause != 0:
            return k, cause
        if has_obs and gamma != 0.0:
            if eta == 0.0 and not det > field_det_floor:
                return k, DET_FLOOR
            if not margin > 0.0:
                return k, SINGULARITY_MARGIN
            drv_eval(drv_code, delta, a_scale, s_scale, zbuf[k], a, s)
            for i in range(p):
                for j in range(p):
                    A[i, j] = G[i, j]
                if eta != 0.0:
                    A[i, i] += eta
            ok, M = chol_solve(A, s)
            if not ok:
                return k, DET_FLOOR
            for i in range(p):
                for j in range(p):
                    acc = 0.0
                    for m in range(p):
                        acc += M[i, m] * M[j, m]
                    B[i, j] = acc
            c = ito_moment(J, H, B)
            for i in range(p):
                R[i, 0] = a[i] - 0.5 * c[i]
            ok, NV = chol_solve(A, R)
            if not ok:
                return k, DET_FLOOR
            sigma, b = assemble(J, M, NV[:, 0])
        baseline_drift(u_code, w_code, X, drift)
        Xn = euler_update(X, drift, b, sigma, dW[:, k, :], dW0[k], dt, sig_tilde, gamma)
        for i in range(n):
            for u in range(d):
                if not np.isfinite(Xn[i, u]):
                    return k, OVERFLOW
        X[:, :] = Xn
    return n_steps, 0


@njit(cache=True)
def _obs_point(code, x, out):
    """f, f', f'' of a one-dimensional builtin at x; out is (3, p)."""
    if code == 0:
        out[0, 0] = x
        out[1, 0] = 1.0
        out[2, 0] = 0.0
    elif code == 1:
        out[0, 0] = x * x
        out[1, 0] = 2.0 * x
        out[2, 0] = 2.0
    elif code == 2:
        out[0, 0] = x
        out[1, 0] = 1.0
        out[2, 0] = 0.0
        out[0, 1] = x * x
        out[1, 1] = 2.0 * x
        out[2, 1] = 2.0
    else:
        t = np.tanh(x)
        sech = 1.0 / np.cosh(x)
        out[0, 0] = t
        out[1, 0] = sech * sech
        out[2, 0] = -2.0 * t * sech * sech


@njit(cache=True, inline="always")
def _kadd(acc, comp, v):
    """Plain accumulation; ``comp`` is carried for a compensated variant
    but left at zero, since compensation dominated the step cost."""
    return acc + v, comp


@njit(cache=True)
def advance_1d(
    X, n_steps, dW0, dW, dt,
    has_obs, obs_code, drv_code, delta, a_scale, s_scale, eta, field_det_floor, gamma,
    u_code, w_code, sig_tilde,
    alpha, cap, margin_floor, det_floor,
    zbuf, sbuf,
):
    """:func:`advance` specialized to d = 1 and p <= 2: a few scalar passes
    over the particles per step, reducing in particle order."""
    n = X.shape[0]
    p = zbuf.shape[1]
    Jv = np.zeros((n, p))
    Hv = np.zeros((n, p))
    tmp = np.zeros((3, p))
    G = np.zeros((p, p))
    a = np.zeros(p)
    s = np.zeros((p, p))
    A = np.zeros((p, p))
    R = np.zeros((p, 1))
    nv = np.zeros(p)
    w = np.zeros(p)
    xn = np.zeros(n)
    dWk = np.zeros(n)
    for k in range(n_steps):
        # pass 1: moments, Gram matrix, power moment, mean, m2
        z0 = z0c = z1 = z1c = 0.0
        g00 = g00c = g01 = g01c = g11 = g11c = 0.0
        pm = pmc = s1 = s1c = s2 = s2c = 0.0
        for i in range(n):
            x = X[i, 0]
            if has_obs:
                _obs_point(obs_code, x, tmp)
                j0 = tmp[1, 0]
                Jv[i, 0] = j0
                Hv[i, 0] = tmp[2, 0]
                z0, z0c = _kadd(z0, z0c, tmp[0, 0])
                g00, g00c = _kadd(g00, g00c, j0 * j0)
                if p == 2:
                    j1 = tmp[1, 1]
                    Jv[i, 1] = j1
                    Hv[i, 1] = tmp[2, 1]
                    z1, z1c = _kadd(z1, z1c, tmp[0, 1])
                    g01, g01c = _kadd(g01, g01c, j0 * j1)
                    g11, g11c = _kadd(g11, g11c, j1 * j1)
            r = abs(x)
            pm, pmc = _kadd(pm, pmc, r * r if alpha == 2.0 else r**alpha)
            s1, s1c = _kadd(s1, s1c, x)
            s2, s2c = _kadd(s2, s2c, x * x)
        mean = s1 / n
        # pass 2: variance about the mean
        vs = vc = 0.0
        for i in range(n):
            dev = X[i, 0] - mean
            vs, vc = _kadd(vs, vc, dev * dev)
        if has_obs:
            zbuf[k, 0] = z0 / n
            G[0, 0] = g00 / n
            if p == 2:
                zbuf[k, 1] = z1 / n
                G[0, 1] = g01 / n
                G[1, 0] = G[0, 1]
                G[1, 1] = g11 / n
            det = small_det(G)
            margin = drv_margin(drv_code, zbuf[k])
        else:
            det = np.inf
            margin = np.inf
        sbuf[k, 0] = det
        sbuf[k, 1] = margin
        sbuf[k, 2] = pm / n
        sbuf[k, 3] = mean
        sbuf[k, 4] = s2 / n
        sbuf[k, 5] = vs / n
        cause = check_policy(sbuf[k, 2], margin, det, cap, margin_floor, det_floor)
        if cause != 0:
            return k, cause
        smd = has_obs and gamma != 0.0
        if sig_tilde != 0.0:
            for i in range(n):
                dWk[i] = dW[i, k, 0]
        if smd:
            if eta == 0.0 and not det > field_det_floor:
                return k, DET_FLOOR
            if not margin > 0.0:
                return k, SINGULARITY_MARGIN
            drv_eval(drv_code, delta, a_scale, s_scale, zbuf[k], a, s)
            for i in range(p):
                for j in range(p):
                    A[i, j] = G[i, j]
                if eta != 0.0:
                    A[i, i] += eta
            ok, M = chol_solve(A, s)
            if not ok:
                return k, DET_FLOOR
            # pass 3: Ito correction c_k = mean_i (J_i B J_i^T) H_ik, B = M M^T
            b00 = b01 = b11 = 0.0
            for c in range(p):
                b00 += M[0, c] * M[0, c]
                if p == 2:
                    b01 += M[0, c] * M[1, c]
                    b11 += M[1, c] * M[1, c]
            c0 = c0c = c1 = c1c = 0.0
            for i in range(n):
                j0 = Jv[i, 0]
                if p == 2:
                    j1 = Jv[i, 1]
                    jb = j0 * j0 * b00 + 2.0 * j0 * j1 * b01 + j1 * j1 * b11
                    c0, c0c = _kadd(c0, c0c, jb * Hv[i, 0])
                    c1, c1c = _kadd(c1, c1c, jb * Hv[i, 1])
                else:
                    c0, c0c = _kadd(c0, c0c, j0 * j0 * b00 * Hv[i, 0])
            R[0, 0] = a[0] - 0.5 * (c0 / n)
            if p == 2:
                R[1, 0] = a[1] - 0.5 * (c1 / n)
            ok, NV = chol_solve(A, R)
            if not ok:
                return k, DET_FLOOR
            # per-particle drift and common-noise loadings are linear in J_i
            for q in range(p):
                nv[q] = NV[q, 0]
                w[q] = 0.0
                for c in range(p):
                    w[q] += M[q, c] * dW0[k, c]
        # pass 4: Euler update
        for i in range(n):
            x = X[i, 0]
            if u_code == 1:
                dr = -(x * x * x - x)
            elif u_code == 2:
                dr = -x
            else:
                dr = 0.0
            if w_code == 1:
                dr = dr - (x - mean)
            v = x + dr * dt
            if smd:
                bi = Jv[i, 0] * nv[0]
                sw = Jv[i, 0] * w[0]
                if p == 2:
                    bi += Jv[i, 1] * nv[1]
                    sw += Jv[i, 1] * w[1]
                v += gamma * (bi * dt + sw)
            if sig_tilde != 0.0:
                v += sig_tilde * dWk[i]
            xn[i] = v
        for i in range(n):
            if not np.isfinite(xn[i]):
                return k, OVERFLOW
        for i in range(n):
            X[i, 0] = xn[i]
    return n_steps, 0
