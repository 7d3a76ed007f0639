"""numba kernels. Reductions are serial Kahan sums in particle order, so the
result does not depend on the thread count."""

import numpy as np
from numba import njit


@njit(cache=True)
def moments(F, J):
    # one scalar Kahan accumulator per entry, particles in index order
    n, p = F.shape
    d = J.shape[1]
    z = np.zeros(p)
    G = np.zeros((p, p))
    for a in range(p):
        acc = 0.0
        comp = 0.0
        for i in range(n):
            y = F[i, a] - comp
            t = acc + y
            comp = (t - acc) - y
            acc = t
        z[a] = acc / n
        for b in range(a, p):
            acc = 0.0
            comp = 0.0
            for i in range(n):
                v = 0.0
                for u in range(d):
                    v += J[i, u, a] * J[i, u, b]
                y = v - comp
                t = acc + y
                comp = (t - acc) - y
                acc = t
            G[a, b] = acc / n
            G[b, a] = G[a, b]
    return z, G


@njit(cache=True)
def ito_moment(J, H, B):
    n, d, p = J.shape
    c = np.zeros(p)
    for k in range(p):
        acc = 0.0
        comp = 0.0
        for i in range(n):
            v = 0.0
            for u in range(d):
                for w in range(d):
                    h = H[i, k, u, w]
                    if h != 0.0:
                        s = 0.0
                        for a in range(p):
                            ja = J[i, u, a]
                            if ja != 0.0:
                                for b in range(p):
                                    s += ja * B[a, b] * J[i, w, b]
                        v += s * h
            y = v - comp
            t = acc + y
            comp = (t - acc) - y
            acc = t
        c[k] = acc / n
    return c


@njit(cache=True)
def assemble(J, M, NV):
    n, d, p = J.shape
    sigma = np.empty((n, d, p))
    b = np.empty((n, d))
    for i in range(n):
        for u in range(d):
            bu = 0.0
            for a in range(p):
                bu += J[i, u, a] * NV[a]
            b[i, u] = bu
            for c in range(p):
                s = 0.0
                for a in range(p):
                    s += J[i, u, a] * M[a, c]
                sigma[i, u, c] = s
    return sigma, b


@njit(cache=True)
def chol_solve(A, R):
    p = A.shape[0]
    k = R.shape[1]
    L = np.zeros((p, p))
    for j in range(p):
        s = A[j, j]
        for m in range(j):
            s -= L[j, m] * L[j, m]
        if not s > 0.0:
            return False, np.full((p, k), np.nan)
        L[j, j] = np.sqrt(s)
        for i in range(j + 1, p):
            s = A[i, j]
            for m in range(j):
                s -= L[i, m] * L[j, m]
            L[i, j] = s / L[j, j]
    X = np.empty((p, k))
    for c in range(k):
        for i in range(p):
            s = R[i, c]
            for m in range(i):
                s -= L[i, m] * X[m, c]
            X[i, c] = s / L[i, i]
        for i in range(p - 1, -1, -1):
            s = X[i, c]
            for m in range(i + 1, p):
                s -= L[m, i] * X[m, c]
            X[i, c] = s / L[i, i]
    return True, X


@njit(cache=True)
def small_det(G):
    p = G.shape[0]
    if p == 1:
        return G[0, 0]
    if p == 2:
        return G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    return np.linalg.det(G)


@njit(cache=True)
def euler_update(X, drift, b, sigma, dW, dW0, dt, sig_tilde, gamma):
    n, d = X.shape
    p = dW0.shape[0]
    out = np.empty((n, d))
    for i in range(n):
        for u in range(d):
            v = X[i, u] + drift[i, u] * dt
            if gamma != 0.0:
                s = b[i, u] * dt
                for a in range(p):
                    s += sigma[i, u, a] * dW0[a]
                v += gamma * s
            if sig_tilde != 0.0:
                v += sig_tilde * dW[i, u]
            out[i, u] = v
    return out


@njit(cache=True)
def power_moment(X, gamma):
    n, d = X.shape
    acc = 0.0
    comp = 0.0
    for i in range(n):
        if d == 1:
            r = abs(X[i, 0])
            v = r * r if gamma == 2.0 else r**gamma
        else:
            r2 = 0.0
            for u in range(d):
                r2 += X[i, u] * X[i, u]
            v = r2 ** (0.5 * gamma)
        y = v - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
    return acc / n


@njit(cache=True)
def column_means(X):
    n, d = X.shape
    m = np.zeros(d)
    for u in range(d):
        acc = 0.0
        comp = 0.0
        for i in range(n):
            y = X[i, u] - comp
            t = acc + y
            comp = (t - acc) - y
            acc = t
        m[u] = acc / n
    return m


@njit(cache=True)
def first_coordinate_stats(X):
    n = X.shape[0]
    s = 0.0
    cs = 0.0
    s2 = 0.0
    cs2 = 0.0
    for i in range(n):
        x = X[i, 0]
        y = x - cs
        t = s + y
        cs = (t - s) - y
        s = t
        y = x * x - cs2
        t = s2 + y
        cs2 = (t - s2) - y
        s2 = t
    m = s / n
    v = 0.0
    cv = 0.0
    for i in range(n):
        dev = X[i, 0] - m
        y = dev * dev - cv
        t = v + y
        cv = (t - v) - y
        v = t
    return m, s2 / n, v / n


@njit(cache=True)
def wasserstein_sorted(a, b, p):
    n = a.shape[0]
    m = b.shape[0]
    nm = n * m
    i = 0
    j = 0
    u = 0
    acc = 0.0
    comp = 0.0
    while i < n and j < m:
        na = (i + 1) * m
        nb = (j + 1) * n
        nxt = na if na < nb else nb
        w = (nxt - u) / nm
        v = w * abs(a[i] - b[j]) ** p
        y = v - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
        u = nxt
        if na == nxt:
            i += 1
        if nb == nxt:
            j += 1
    return acc ** (1.0 / p)
