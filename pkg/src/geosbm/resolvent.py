"""Secular function of a rank-two update ``P0 + P1`` and its roots above ``mu_1``.

With ``P1 = sum_j mu_j w_j w_j^T`` and ``P0 = lambda1 v1 v1^T + lambda2 v2 v2^T``,
eigenvalues of ``P0 + P1`` that are not eigenvalues of ``P1`` are the zeros of

    f(theta) = det(I + P0 R1(theta))
             = (1 + lambda1 a1)(1 + lambda2 a2) - lambda1 lambda2 b^2,

where ``a1 = sum r_j^2/(mu_j - theta)``, ``a2 = sum s_j^2/(mu_j - theta)``,
``b = sum r_j s_j/(mu_j - theta)``, ``r_j = <v1, w_j>`` and ``s_j = <v2, w_j>``.
The factored form equals the pairwise double sum exactly (Cauchy-Binet) and
costs O(N) per evaluation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .eigen import Spectrum

COMPLETENESS_TOL = 1e-10


class ResolventError(ValueError):
    pass


@dataclass(frozen=True)
class ResolventContext:
    mu: np.ndarray
    r: np.ndarray
    s: np.ndarray
    lambda1: float
    lambda2: float

    @property
    def mu1(self) -> float:
        return float(self.mu[0])

    @property
    def N(self) -> int:
        return self.mu.size


def build_context(spectrum: Spectrum, v1, sigma, lambda1: float, lambda2: float,
                  tol: float = COMPLETENESS_TOL) -> ResolventContext:
    """Overlaps of ``v1`` and ``sigma`` with every eigenvector of ``P1``."""
    W = spectrum.eigenvectors
    n = spectrum.eigenvalues.size
    if W.shape != (n, n):
        raise ResolventError(f"need all {n} eigenvectors of P1, got {W.shape[1]}")
    v1 = np.asarray(v1, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    r = W.T @ v1
    s = W.T @ sigma
    for name, x, ref in (("r", r, v1), ("s", s, sigma)):
        err = abs(math.fsum(x * x) - float(ref @ ref))
        if err > tol:
            raise ResolventError(f"sum {name}_j^2 misses |v|^2 by {err:.3g}; eigenbasis incomplete")
    mu = np.ascontiguousarray(spectrum.eigenvalues, dtype=float)
    mu.setflags(write=False)
    r = np.ascontiguousarray(r)
    s = np.ascontiguousarray(s)
    r.setflags(write=False)
    s.setflags(write=False)
    return ResolventContext(mu, r, s, float(lambda1), float(lambda2))


def context_from_matrix(P1: np.ndarray, v1, sigma, lambda1, lambda2) -> ResolventContext:
    from .eigen import eig_sym
    return build_context(eig_sym(P1), v1, sigma, lambda1, lambda2)


def _check_theta(ctx: ResolventContext, theta: float) -> None:
    if not theta > ctx.mu1:
        raise ResolventError(f"theta={theta!r} must exceed mu_1={ctx.mu1!r}")


def resolvent_sums(ctx: ResolventContext, theta: float):
    """``(a1, a2, b, a1', a2', b')`` at ``theta`` with compensated summation."""
    _check_theta(ctx, theta)
    return _backend.secular_sums(ctx.mu, ctx.r, ctx.s, float(theta))


def secular_value(ctx: ResolventContext, theta: float) -> float:
    a1, a2, b, *_ = resolvent_sums(ctx, theta)
    l1, l2 = ctx.lambda1, ctx.lambda2
    return (1 + l1 * a1) * (1 + l2 * a2) - l1 * l2 * b * b


def secular_derivative(ctx: ResolventContext, theta: float) -> float:
    a1, a2, b, d1, d2, db = resolvent_sums(ctx, theta)
    l1, l2 = ctx.lambda1, ctx.lambda2
    return l1 * d1 * (1 + l2 * a2) + l2 * d2 * (1 + l1 * a1) - 2 * l1 * l2 * b * db


def _bisect(ctx, lo, hi, flo, rtol=1e-12):
    # invariant: sign(f(lo)) == sign(flo) != sign(f(hi))
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if hi - lo <= rtol * max(abs(mid), 1.0) or mid in (lo, hi):
            break
        fm = secular_value(ctx, mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    # take the endpoint with smaller |f|
    flo_abs = abs(secular_value(ctx, lo))
    fhi_abs = abs(secular_value(ctx, hi))
    return lo if flo_abs <= fhi_abs else hi


def _golden_min(ctx, lo, hi, iters=80):
    g = (math.sqrt(5) - 1) / 2
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = secular_value(ctx, c), secular_value(ctx, d)
    for _ in range(iters):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = secular_value(ctx, c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = secular_value(ctx, d)
    return (c, fc) if fc < fd else (d, fd)


def detached_eigenvalues(ctx: ResolventContext, grid: int = 2000,
                         root_tol: float = 1e-9) -> list[float]:
    """Roots of the secular function above ``mu_1``, in descending order.

    Scans a geometric grid in ``theta - mu_1`` from ``delta`` up to
    ``|lambda1| + |lambda2| + max|mu|`` (a Weyl bound on the spectrum of
    ``P0 + P1``), bisects every sign change, and probes grid-local minima
    that stay positive for a hidden pair of close roots.
    """
    mu1 = ctx.mu1
    delta = 1e-9 * max(1.0, abs(mu1))
    span = abs(ctx.lambda1) + abs(ctx.lambda2) + float(np.max(np.abs(ctx.mu))) + abs(mu1)
    offsets = np.geomspace(delta, max(span, 2 * delta), grid)
    thetas = mu1 + offsets
    fv = np.array([secular_value(ctx, t) for t in thetas])

    roots = []
    for i in range(grid - 1):
        f0, f1 = fv[i], fv[i + 1]
        if f0 == 0.0:
            roots.append(float(thetas[i]))
        elif f0 * f1 < 0:
            roots.append(_bisect(ctx, thetas[i], thetas[i + 1], f0))
    # positive local minima can hide two roots between neighbouring grid points
    for i in range(1, grid - 1):
        if fv[i] > 0 and fv[i] <= fv[i - 1] and fv[i] <= fv[i + 1]:
            t, ft = _golden_min(ctx, thetas[i - 1], thetas[i + 1])
            if ft < 0:
                roots.append(_bisect(ctx, thetas[i - 1], t, fv[i - 1]))
                roots.append(_bisect(ctx, thetas[i + 1], t, fv[i + 1]))
    roots = sorted(set(float(t) for t in roots), reverse=True)
    for t in roots:
        fval = secular_value(ctx, t)
        if abs(fval) > root_tol:
            # steep f near mu_1: accept a sign change within a few ulps instead
            h = 4 * np.spacing(t)
            if t - h <= mu1 or secular_value(ctx, t - h) * secular_value(ctx, t + h) > 0:
                raise ResolventError(f"root {t!r} failed verification, f={fval:.3g}")
    if len(roots) > 2:
        raise ResolventError(f"found {len(roots)} roots above mu_1; a rank-two update allows at most 2")
    return roots


def predicted_correlation(ctx: ResolventContext, theta: float) -> float:
    """Squared correlation ``<w, v2>^2 / |w|^2`` of the ``theta``-eigenvector of ``P0 + P1``.

    Equals ``(1 + lambda1 a1(theta)) / (lambda2 f'(theta))`` at a root ``theta``.
    ``f'`` is positive at the upper root and negative at the lower one;
    ``1 + lambda1 a1`` must carry the same sign.
    """
    a1, a2, b, d1, d2, db = resolvent_sums(ctx, theta)
    l1, l2 = ctx.lambda1, ctx.lambda2
    fp = l1 * d1 * (1 + l2 * a2) + l2 * d2 * (1 + l1 * a1) - 2 * l1 * l2 * b * db
    num = 1 + l1 * a1
    if fp == 0 or num * fp < -1e-9 * abs(fp):
        raise ResolventError(f"1 + lambda1 a1 = {num:.3g} and f' = {fp:.3g} disagree in sign at theta={theta!r}")
    return max(num / (l2 * fp), 0.0)


@dataclass
class SeparationCertificate:
    holds: bool
    lambda2: float
    mu1: float
    epsilon: float
    ratio: float
    threshold: float


def separation_certificate(ctx: ResolventContext, epsilon: float) -> SeparationCertificate:
    """Sufficient condition ``lambda2 >= 4 mu_1 (1 + epsilon)`` for two detached roots."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    thr = 4 * ctx.mu1 * (1 + epsilon)
    ratio = ctx.lambda2 / ctx.mu1 if ctx.mu1 != 0 else math.inf
    return SeparationCertificate(ctx.lambda2 >= thr, ctx.lambda2, ctx.mu1, float(epsilon), ratio, thr)
