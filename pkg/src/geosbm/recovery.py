"""Spectral community estimators, sign rounding and recovery metrics."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .eigen import Spectrum, eig_sym, eigvals_sym, fix_signs
from .model import ones_vector

UNIT_TOL = 1e-8
DEGENERATE_RTOL = 1e-8
DEFAULT_EPSILON = 0.5


@dataclass
class Estimate:
    """Unit estimate of the community direction and the spectrum it came from.

    ``ambiguous`` is set when the chosen eigenvalue is within
    ``1e-8 * |A|`` of a neighbour; ``subspace`` then holds an orthonormal
    basis of that near-degenerate eigenspace.
    """

    x: np.ndarray
    eigenvalue: float
    spectrum: Spectrum
    ambiguous: bool = False
    subspace: np.ndarray | None = None


def _as_dense(A):
    return A.dense() if hasattr(A, "dense") else np.asarray(A, dtype=float)


def _pick(spectrum: Spectrum, index: int) -> Estimate:
    lam = spectrum.eigenvalues
    tol = DEGENERATE_RTOL * max(spectrum.norm, 1.0)
    near = [j for j in (index - 1, index + 1) if 0 <= j < lam.size and abs(lam[j] - lam[index]) < tol]
    sub = None
    if near:
        idx = sorted({index, *near})
        if max(idx) < spectrum.k:
            sub = spectrum.eigenvectors[:, idx]
    return Estimate(spectrum.vector(index).copy(), float(lam[index]), spectrum, bool(near), sub)


def naive_spectral_estimate(A) -> Estimate:
    """Second eigenvector of the adjacency matrix, no model knowledge used."""
    M = _as_dense(A)
    spec = eig_sym(M, k=min(3, M.shape[0]))
    return _pick(spec, 1)


def davis_kahan_estimate(A, mean_known: float) -> Estimate:
    """Top eigenvector of ``A - N * mean_known * v1 v1^T``.

    ``mean_known`` stands for ``(p1 + p2) / 2``, supplied from outside.
    """
    M = _as_dense(A)
    N = M.shape[0]
    v1 = ones_vector(N)
    Mp = M - N * float(mean_known) * np.outer(v1, v1)
    spec = eig_sym(Mp, k=min(2, N))
    return _pick(spec, 0)


def sign_round(x) -> np.ndarray:
    """Entrywise sign scaled to ``+-1/sqrt(N)``; zeros go to ``+``."""
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0, 1.0, -1.0) / math.sqrt(x.size)


def overlap(x, sigma) -> float:
    """``|sigma^T x|`` for unit vectors."""
    x = np.asarray(x, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    for name, v in (("x", x), ("sigma", sigma)):
        if not abs(np.linalg.norm(v) - 1.0) <= UNIT_TOL:  # also rejects nan
            raise ValueError(f"{name} must be unit norm (|{name}| = {np.linalg.norm(v):.12g})")
    return float(abs(sigma @ x))


def _agreements(x, sigma) -> tuple[int, int]:
    sx = np.asarray(x) >= 0
    ss = np.asarray(sigma) >= 0
    agree = int(np.count_nonzero(sx == ss))
    return agree, sx.size


def best_subspace_overlap(basis: np.ndarray, sigma) -> tuple[float, np.ndarray]:
    """Largest ``|sigma^T x|`` over unit ``x`` in the span of ``basis``."""
    proj = basis.T @ np.asarray(sigma, dtype=float)
    nrm = float(np.linalg.norm(proj))
    if nrm == 0:
        return 0.0, basis[:, 0].copy()
    x = basis @ (proj / nrm)
    return nrm, x / np.linalg.norm(x)


EXACT, WEAK, SOFT, NONE = "exact", "weak", "soft", "none"


@dataclass
class RecoveryReport:
    overlap: float
    rounded_overlap: float
    hamming_agreement: float
    classification: str
    epsilon: float
    ambiguous: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def classify_recovery(overlap_value: float, rounded_overlap_value: float,
                      exact_match: bool, epsilon: float) -> str:
    """Strongest recovery level the metrics support.

    exact: rounded estimate equals sigma up to a global flip; weak: rounded
    overlap >= epsilon (Hamming agreement >= (1 + epsilon)/2); soft: overlap
    >= epsilon.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if exact_match:
        return EXACT
    if rounded_overlap_value >= epsilon:
        return WEAK
    if overlap_value >= epsilon:
        return SOFT
    return NONE


def recovery_report(x, sigma, epsilon: float = DEFAULT_EPSILON, *, ambiguous: bool = False) -> RecoveryReport:
    ov = overlap(x, sigma)
    agree, n = _agreements(x, sigma)
    best = max(agree, n - agree)
    # |sigma^T sign(x)| = |agree - disagree| / n, exact in integers
    rounded = abs(2 * agree - n) / n
    report = RecoveryReport(
        overlap=ov,
        rounded_overlap=rounded,
        hamming_agreement=best / n,
        classification=classify_recovery(ov, rounded, best == n, epsilon),
        epsilon=float(epsilon),
        ambiguous=ambiguous,
    )
    if report.rounded_overlap < 4 * report.overlap - 3 - 1e-12:
        raise AssertionError("sign rounding violated |s^T sign(x)| >= 4|s^T x| - 3")
    return report


def evaluate_estimate(est: Estimate, sigma, epsilon: float = DEFAULT_EPSILON) -> RecoveryReport:
    """Report for an estimate; in a flagged eigenspace the best member is scored."""
    x = est.x
    if est.ambiguous and est.subspace is not None:
        _, x = best_subspace_overlap(est.subspace, sigma)
    return recovery_report(x, sigma, epsilon, ambiguous=est.ambiguous)


def davis_kahan_distance(x, sigma) -> float:
    """``min(|sigma - x|, |sigma + x|)``."""
    x = np.asarray(x, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    return float(min(np.linalg.norm(sigma - x), np.linalg.norm(sigma + x)))


def davis_kahan_bound(A, P0_dense: np.ndarray, lambda2: float) -> float:
    """``2 sqrt(2) / lambda2 * |A - P0|_2``."""
    D = _as_dense(A) - P0_dense
    return float(2 * math.sqrt(2) / lambda2 * spectral_norm(D))


def spectral_norm(M: np.ndarray) -> float:
    """Largest absolute eigenvalue of a symmetric matrix."""
    w = eigvals_sym(M)
    return float(max(abs(w[0]), abs(w[-1])))


__all__ = [
    "Estimate", "RecoveryReport", "naive_spectral_estimate", "davis_kahan_estimate",
    "sign_round", "overlap", "classify_recovery", "recovery_report", "evaluate_estimate",
    "davis_kahan_distance", "davis_kahan_bound", "spectral_norm", "best_subspace_overlap", "fix_signs",
]
