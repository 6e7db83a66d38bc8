# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Mirrors ``_fallback`` function by function."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs

cnp.import_array()


def gaussian_kernel(const double[:, ::1] X, double gamma):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t i, j
    cdef double dx, dy, v
    out = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] P = out
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                dx = X[i, 0] - X[j, 0]
                dy = X[i, 1] - X[j, 1]
                v = exp(-gamma * (dx * dx + dy * dy))
                P[i, j] = v
                P[j, i] = v
    return out


def bernoulli_fill(const double[:, ::1] Q, const double[::1] u):
    """Symmetric 0/1 matrix with ``A[i, j] = u[k] < Q[i, j]`` over the
    row-major upper triangle (k counts pairs i < j)."""
    cdef Py_ssize_t n = Q.shape[0]
    cdef Py_ssize_t i, j, k = 0
    cdef unsigned char a
    if u.shape[0] != n * (n - 1) // 2:
        raise ValueError("need one uniform per upper-triangle pair")
    out = np.zeros((n, n), dtype=np.uint8)
    cdef unsigned char[:, ::1] A = out
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                a = 1 if u[k] < Q[i, j] else 0
                A[i, j] = a
                A[j, i] = a
                k += 1
    return out


cdef inline void _neumaier(double x, double* s, double* c) noexcept nogil:
    cdef double t = s[0] + x
    if fabs(s[0]) >= fabs(x):
        c[0] += (s[0] - t) + x
    else:
        c[0] += (x - t) + s[0]
    s[0] = t


def secular_sums(const double[::1] mu, const double[::1] r, const double[::1] s,
                 double theta):
    """Compensated sums (a1, a2, b, a1', a2', b') at ``theta``.

    a1 = sum r^2/(mu - theta), a2 = sum s^2/(mu - theta),
    b = sum r s/(mu - theta); primes are derivatives in theta.
    """
    cdef Py_ssize_t n = mu.shape[0]
    cdef Py_ssize_t j
    cdef double d, inv, inv2
    cdef double sa1 = 0, ca1 = 0, sa2 = 0, ca2 = 0, sb = 0, cb = 0
    cdef double sd1 = 0, cd1 = 0, sd2 = 0, cd2 = 0, sdb = 0, cdb = 0
    with nogil:
        for j in range(n):
            d = mu[j] - theta
            inv = 1.0 / d
            inv2 = inv * inv
            _neumaier(r[j] * r[j] * inv, &sa1, &ca1)
            _neumaier(s[j] * s[j] * inv, &sa2, &ca2)
            _neumaier(r[j] * s[j] * inv, &sb, &cb)
            _neumaier(r[j] * r[j] * inv2, &sd1, &cd1)
            _neumaier(s[j] * s[j] * inv2, &sd2, &cd2)
            _neumaier(r[j] * s[j] * inv2, &sdb, &cdb)
    return (sa1 + ca1, sa2 + ca2, sb + cb, sd1 + cd1, sd2 + cd2, sdb + cdb)
