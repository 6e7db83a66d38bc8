"""Independent reference implementations used only by the tests.

Nothing here imports the package's numerical code, so agreement is a real check.
"""
import itertools
import math
from fractions import Fraction

import numpy as np


def jacobi_eigh(M, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi rotations; eigenvalues descending with eigenvector columns."""
    A = np.array(M, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = math.sqrt(sum(A[i, j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off < tol * max(1.0, np.abs(A).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                V = V @ J
    w = np.diag(A).copy()
    order = np.argsort(w)[::-1]
    return w[order], V[:, order]


def char_poly_roots(M):
    """Eigenvalues as roots of the characteristic polynomial (small matrices only)."""
    return np.sort(np.roots(np.poly(np.asarray(M, dtype=float))).real)[::-1]


def secular_pairwise(mu, r, s, l1, l2, theta):
    """The determinant display written as a double sum over pairs ``j != k``."""
    d = [m - theta for m in mu]
    n = len(mu)
    single = sum((l1 * r[j] ** 2 + l2 * s[j] ** 2) / d[j] for j in range(n))
    pair = sum((r[j] * s[k] - r[k] * s[j]) ** 2 / (d[j] * d[k])
               for j in range(n) for k in range(n) if j != k)
    return 1 + single + l1 * l2 / 2 * pair


def secular_det(P1, l1, l2, theta):
    """``det(I + P0 (P1 - theta I)^{-1})`` straight from the matrices."""
    N = P1.shape[0]
    v1 = np.full(N, 1 / math.sqrt(N))
    sig = v1.copy()
    sig[N // 2:] *= -1
    P0 = l1 * np.outer(v1, v1) + l2 * np.outer(sig, sig)
    return float(np.linalg.det(np.eye(N) + P0 @ np.linalg.inv(P1 - theta * np.eye(N))))


def cycle_partitions(l):
    """All set partitions of ``0..l-1`` avoiding cyclically adjacent pairs, by brute force."""
    out = []
    # a canonical labeling never uses a label above its position
    for labels in itertools.product(*(range(i + 1) for i in range(l))):
        # canonical form: first occurrences in increasing order
        seen = {}
        canon = tuple(seen.setdefault(x, len(seen)) for x in labels)
        if canon != labels:
            continue
        if any(labels[i] == labels[(i + 1) % l] for i in range(l)):
            continue
        out.append(labels)
    return out


def trace_power_loops(P, l):
    """``Tr P^l`` by explicit index loops."""
    n = P.shape[0]
    tot = 0.0
    for idx in itertools.product(range(n), repeat=l):
        prod = 1.0
        for a in range(l):
            prod *= P[idx[a], idx[(a + 1) % l]]
        tot += prod
    return tot


def det_fraction(M):
    """Exact determinant by cofactor expansion in rationals."""
    M = [[Fraction(x) for x in row] for row in M]
    n = len(M)
    if n == 0:
        return Fraction(1)
    if n == 1:
        return M[0][0]
    return sum((-1) ** j * M[0][j] * det_fraction([row[:j] + row[j + 1:] for row in M[1:]])
               for j in range(n) if M[0][j] != 0)


def gaussian_pair_kernel_mean(gamma):
    """``E exp(-gamma |X - Y|^2)`` for independent standard 2-D Gaussians."""
    return 1.0 / (1.0 + 4.0 * gamma)
