"""Pure-numpy kernels. Reductions use numpy's pairwise summation, whose
order depends only on array shape, so results are reproducible."""

import numpy as np


def moments(F, J):
    n = F.shape[0]
    z = F.sum(axis=0) / n
    G = np.einsum("nua,nub->ab", J, J) / n
    G = 0.5 * (G + G.T)
    return z, G


def ito_moment(J, H, B):
    P = np.einsum("nua,ab,nvb->nuv", J, B, J)
    per = np.einsum("nuv,nkuv->nk", P, H)
    return per.sum(axis=0) / J.shape[0]


def assemble(J, M, NV):
    sigma = np.matmul(J, M)
    b = np.matmul(J, NV)
    return sigma, b


def chol_solve(A, R):
    """Solve A X = R for symmetric positive definite A.

    Returns ``(ok, X)``; ``ok`` is False when the factorization fails.
    """
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        return False, np.full(R.shape, np.nan)
    if not np.all(np.diag(L) > 0.0):
        return False, np.full(R.shape, np.nan)
    Y = np.linalg.solve(L, R)
    return True, np.linalg.solve(L.T, Y)


def small_det(G):
    p = G.shape[0]
    if p == 1:
        return float(G[0, 0])
    if p == 2:
        return float(G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0])
    return float(np.linalg.det(G))


def euler_update(X, drift, b, sigma, dW, dW0, dt, sig_tilde, gamma):
    out = X + drift * dt
    if gamma != 0.0:
        out += gamma * (b * dt + np.matmul(sigma, dW0))
    if sig_tilde != 0.0:
        out += sig_tilde * dW
    return out


def power_moment(X, gamma):
    if X.shape[1] == 1:
        r = np.abs(X[:, 0])
        v = r * r if gamma == 2.0 else r**gamma
    else:
        r2 = np.einsum("nu,nu->n", X, X)
        v = r2 ** (0.5 * gamma)
    return v.sum() / X.shape[0]


def column_means(X):
    return X.sum(axis=0) / X.shape[0]


def first_coordinate_stats(X):
    x = X[:, 0]
    n = x.shape[0]
    m = x.sum() / n
    m2 = (x * x).sum() / n
    dev = x - m
    var = (dev * dev).sum() / n
    return m, m2, var


def wasserstein_sorted(a, b, p):
    n, m = a.shape[0], b.shape[0]
    if n == m:
        return float((np.abs(a - b) ** p).sum() / n) ** (1.0 / p)
    # quantile functions are step functions with breaks at i/n and j/m;
    # work in integer units of 1/(n*m) so the merge is exact
    bp = np.union1d(np.arange(1, n + 1) * m, np.arange(1, m + 1) * n)
    w = np.diff(bp, prepend=0) / (n * m)
    ia = (bp + m - 1) // m - 1
    ib = (bp + n - 1) // n - 1
    return float((w * np.abs(a[ia] - b[ib]) ** p).sum()) ** (1.0 / p)
