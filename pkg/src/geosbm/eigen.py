"""Dense symmetric eigensolves and spectrum summaries.

The solver is LAPACK (``syevd``, or ``syevr`` for eigenvalues only:
Householder tridiagonalization then an implicit tridiagonal solve) through
:func:`scipy.linalg.eigh`; everything else here is bookkeeping
around it: ordering, sign convention, residual checks, histograms and the
row-sum diagnostics used for the spectral radius of the kernel matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

SIGN_EPS = 1e-12
SYMMETRY_RTOL = 1e-12
RESIDUAL_RTOL = 1e-8


class EigenError(RuntimeError):
    """Non-symmetric input or a failed/inaccurate eigensolve."""


@dataclass
class Spectrum:
    """Descending eigenvalues plus the top-``k`` eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray = field(repr=False)
    norm: float = 0.0

    @property
    def k(self) -> int:
        return self.eigenvectors.shape[1]

    def vector(self, i: int) -> np.ndarray:
        return self.eigenvectors[:, i]

    def cluster(self, i: int, rtol: float = 1e-8) -> np.ndarray:
        """Indices of the stored eigenvalues within ``rtol * norm`` of eigenvalue ``i``."""
        tol = rtol * max(self.norm, 1.0)
        lam = self.eigenvalues[: self.k]
        return np.flatnonzero(np.abs(lam - lam[i]) <= tol)

    def multiplicity(self, i: int, rtol: float = 1e-8) -> int:
        tol = rtol * max(self.norm, 1.0)
        return int(np.count_nonzero(np.abs(self.eigenvalues - self.eigenvalues[i]) <= tol))


def fix_signs(vectors: np.ndarray, eps: float = SIGN_EPS) -> np.ndarray:
    """Flip columns so the first coordinate with ``|x| > eps`` is nonnegative."""
    V = np.array(vectors, dtype=float, copy=True)
    if V.ndim == 1:
        return fix_signs(V[:, None], eps)[:, 0]
    for c in range(V.shape[1]):
        nz = np.flatnonzero(np.abs(V[:, c]) > eps)
        if nz.size and V[nz[0], c] < 0:
            V[:, c] = -V[:, c]
    return V


def check_symmetric(M: np.ndarray, rtol: float = SYMMETRY_RTOL) -> None:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise EigenError(f"expected a square matrix, got shape {M.shape}")
    scale = max(np.max(np.abs(M)) if M.size else 0.0, 1.0)
    asym = np.max(np.abs(M - M.T)) if M.size else 0.0
    if asym > rtol * scale:
        raise EigenError(f"matrix is not symmetric (max |M - M^T| = {asym:.3g})")


def eig_sym(matrix: np.ndarray, k: int | None = None, *, check: bool = True) -> Spectrum:
    """All eigenvalues (descending) and eigenvectors for the top ``k``.

    ``k=None`` keeps every eigenvector. Each returned pair is checked against
    ``|M w - lambda w| <= 1e-8 * |M|_2``.
    """
    M = np.asarray(matrix, dtype=np.float64)
    check_symmetric(M)
    n = M.shape[0]
    k = n if k is None else int(k)
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, {n}], got {k}")
    try:
        w, V = scipy.linalg.eigh(M, driver="evd", check_finite=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError) as exc:
        raise EigenError(f"LAPACK eigensolve failed: {exc}") from exc
    w = w[::-1].copy()
    V = fix_signs(V[:, ::-1][:, :k])
    norm = float(max(abs(w[0]), abs(w[-1]))) if n else 0.0
    res = np.linalg.norm(M @ V - V * w[:k], axis=0) if k else np.zeros(0)
    if check and k and np.max(res) > RESIDUAL_RTOL * max(norm, 1e-300):
        bad = int(np.argmax(res))
        raise EigenError(f"eigenpair {bad} residual {res[bad]:.3g} exceeds {RESIDUAL_RTOL} * |M|")
    return Spectrum(w, V, res, norm)


def eigvals_sym(matrix: np.ndarray) -> np.ndarray:
    """Descending eigenvalues only."""
    M = np.asarray(matrix, dtype=np.float64)
    check_symmetric(M)
    try:
        w = scipy.linalg.eigvalsh(M, driver="evr")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError) as exc:
        raise EigenError(f"LAPACK eigensolve failed: {exc}") from exc
    return w[::-1].copy()


def row_sum_bounds(P: np.ndarray) -> tuple[float, float]:
    """``(min_i sum_j P_ij, max_i sum_j P_ij)``; brackets the Perron root."""
    P = np.asarray(P, dtype=float)
    if np.any(P < 0):
        raise ValueError("row_sum_bounds needs an entrywise nonnegative matrix")
    rs = P.sum(axis=1)
    return float(rs.min()), float(rs.max())


@dataclass
class NearOriginReport:
    J: np.ndarray
    deviations: np.ndarray
    max_abs_deviation: float
    target: float
    in_regime: bool
    regime_ratio: float
    note: str = ""


def near_origin_row_sums(P: np.ndarray, latents: np.ndarray, gamma: float,
                         min_regime_ratio: float = 2.0) -> NearOriginReport:
    """Relative deviation of row sums from ``N / (2 gamma)`` for vertices near 0.

    Vertices with ``|Xi|^2 <= 2 ln(gamma) / gamma`` are examined. The report
    is marked out of regime when ``N / (gamma ln N) < min_regime_ratio``;
    deviations are still filled in.
    """
    if not gamma > 1:
        raise ValueError("near-origin diagnostics need gamma > 1")
    X = np.asarray(latents, dtype=float)
    N = X.shape[0]
    target = N / (2.0 * gamma)
    J = np.flatnonzero(np.einsum("ij,ij->i", X, X) <= 2.0 * math.log(gamma) / gamma)
    ratio = N / (gamma * math.log(N))
    if J.size == 0:
        return NearOriginReport(J, np.zeros(0), math.nan, target, ratio >= min_regime_ratio,
                                ratio, note="empty vertex set")
    dev = (np.asarray(P)[J].sum(axis=1) - target) / target
    return NearOriginReport(J, dev, float(np.max(np.abs(dev))), target,
                            ratio >= min_regime_ratio, ratio)


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def spectrum_histogram(eigenvalues, bins: int = 100, range_=None) -> Histogram:
    """Uniform histogram over ``[min, max]`` (or ``range_``), all values counted."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    x = np.asarray(eigenvalues, dtype=float)
    lo, hi = (float(x.min()), float(x.max())) if range_ is None else map(float, range_)
    if hi <= lo:
        hi = lo + 1.0
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    return Histogram(edges, counts)


BULK_WINDOW = 20
DETACH_RATIO = 1.0


@dataclass
class SeparationGap:
    rho1: float
    rho2: float
    rho3: float
    gap21: float
    gap32: float
    bulk_edge: float
    bulk_width: float
    ratio32: float
    n_detached: int

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def separation_gap(spectrum, window: int = BULK_WINDOW, ratio: float = DETACH_RATIO) -> SeparationGap:
    """Top-three eigenvalues, their gaps, and a detached-eigenvalue count.

    ``bulk_edge`` is ``rho3``. ``bulk_width`` is the spread of the ``window``
    eigenvalues just below it, ``rho3 - rho_{3+window}``. The top ``i`` in
    ``{1, 2}`` eigenvalues count as detached when ``rho_i - rho_{i+1}`` is at
    least ``ratio`` times the same spread measured below ``rho_{i+1}``; the
    count is the largest such ``i`` (a close pair above the bulk counts as 2).
    """
    w = spectrum.eigenvalues if isinstance(spectrum, Spectrum) else np.asarray(spectrum, dtype=float)
    w = np.sort(w)[::-1]
    if w.size < 3:
        raise ValueError("need at least three eigenvalues")

    def width(i):
        j = min(i + window, w.size - 1)
        return float(w[i] - w[j])

    def rel(i):
        wd = width(i + 1)
        gap = float(w[i] - w[i + 1])
        return math.inf if wd == 0 and gap > 0 else (gap / wd if wd > 0 else 0.0)

    n_det = 2 if rel(1) >= ratio else (1 if rel(0) >= ratio else 0)
    return SeparationGap(
        rho1=float(w[0]), rho2=float(w[1]), rho3=float(w[2]),
        gap21=float(w[0] - w[1]), gap32=float(w[1] - w[2]),
        bulk_edge=float(w[2]), bulk_width=width(2), ratio32=rel(1), n_detached=n_det,
    )
