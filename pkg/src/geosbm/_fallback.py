"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""
import math

import numpy as np


def gaussian_kernel(X, gamma):
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    P = np.zeros((n, n))
    iu, ju = np.triu_indices(n, 1)
    dx = X[iu, 0] - X[ju, 0]
    dy = X[iu, 1] - X[ju, 1]
    v = np.exp(-gamma * (dx * dx + dy * dy))
    P[iu, ju] = v
    P[ju, iu] = v
    return P


def bernoulli_fill(Q, u):
    n = Q.shape[0]
    if u.shape[0] != n * (n - 1) // 2:
        raise ValueError("need one uniform per upper-triangle pair")
    iu, ju = np.triu_indices(n, 1)
    a = (u < Q[iu, ju]).astype(np.uint8)
    A = np.zeros((n, n), dtype=np.uint8)
    A[iu, ju] = a
    A[ju, iu] = a
    return A


def secular_sums(mu, r, s, theta):
    inv = 1.0 / (np.asarray(mu) - theta)
    inv2 = inv * inv
    rr = r * r
    ss = s * s
    rs = r * s
    return (
        math.fsum(rr * inv),
        math.fsum(ss * inv),
        math.fsum(rs * inv),
        math.fsum(rr * inv2),
        math.fsum(ss * inv2),
        math.fsum(rs * inv2),
    )
