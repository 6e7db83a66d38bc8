"""Trace moments of the kernel matrix and their exact expectation.

``E Tr P^l`` is a sum over the ways of identifying non-adjacent vertices of
the cycle ``C_l``. Each identification pattern gives a loopless multigraph
``G`` on ``k`` vertices and contributes ``N (N-1) ... (N-k+1) / det(I + 2 gamma L_G)``
where ``L_G`` is the (degree-minus-adjacency) Laplacian counting multiplicities.
"""
from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import networkx as nx
import numpy as np
import sympy

from .eigen import eigvals_sym
from .graphgen import kernel_matrix
from .model import make_params, sample_latents

L_MAX = 8

NORMALIZATION_NOTE = (
    "normalized moment = (1/(2 gamma)) * E Tr((2 gamma P / N)^l), limit 1/l^2. "
    "The 1/gamma prefactor written alongside the limit is off by a factor 2 against the "
    "expansion N^l / ((2 gamma)^(l-1) l^2) and the l=2 closed form N(N-1)/(1+8 gamma); "
    "the variance statistic keeps (1/gamma) Tr((gamma P / N)^l)."
)


@dataclass(frozen=True)
class CycleQuotient:
    """Isomorphism class of multigraphs obtained from ``C_l``.

    ``edges`` maps ``(i, j)`` with ``i < j`` to the edge multiplicity on
    vertices ``0..k-1``; ``count`` is the number of identification patterns
    (set partitions of the cycle) landing in this class.
    """

    l: int
    k: int
    edges: tuple
    count: int

    @property
    def multiplicity(self) -> dict:
        return dict(self.edges)

    def graph(self) -> nx.MultiGraph:
        G = nx.MultiGraph()
        G.add_nodes_from(range(self.k))
        for (i, j), m in self.edges:
            for _ in range(m):
                G.add_edge(i, j)
        return G


def _set_partitions(n):
    # restricted growth strings
    a = [0] * n

    def rec(i, m):
        if i == n:
            yield tuple(a)
            return
        for v in range(m + 1):
            a[i] = v
            yield from rec(i + 1, max(m, v + 1))

    if n == 0:
        yield ()
        return
    a[0] = 0
    yield from rec(1, 1)


def admissible_partitions(l: int):
    """Block labelings of the cycle ``0..l-1`` with no two cyclic neighbours in one block."""
    for labels in _set_partitions(l):
        if all(labels[i] != labels[(i + 1) % l] for i in range(l)):
            yield labels


def quotient_edges(labels) -> dict:
    l = len(labels)
    mult = Counter()
    for i in range(l):
        a, b = labels[i], labels[(i + 1) % l]
        mult[(min(a, b), max(a, b))] += 1
    return dict(mult)


def _simple_weighted(k, mult) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(k))
    for (i, j), m in mult.items():
        G.add_edge(i, j, m=m)
    return G


def _invariant(k, mult) -> tuple:
    deg = Counter()
    for (i, j), m in mult.items():
        deg[i] += m
        deg[j] += m
    G = _simple_weighted(k, mult)
    wl = nx.weisfeiler_lehman_graph_hash(G, edge_attr="m", iterations=3)
    return (k, tuple(sorted(deg[v] for v in range(k))), tuple(sorted(mult.values())), wl)


def _edge_match(a, b):
    return a["m"] == b["m"]


@lru_cache(maxsize=None)
def enumerate_cycle_quotients(l: int) -> tuple[CycleQuotient, ...]:
    """All quotient classes of ``C_l`` with their pattern counts, ordered by ``k`` descending.

    Candidates are bucketed by a degree/multiplicity/WL-hash invariant and
    merged only after an exact weighted isomorphism test.
    """
    if not 2 <= l <= L_MAX:
        raise ValueError(f"l must lie in [2, {L_MAX}], got {l}")
    buckets: dict[tuple, list[list]] = {}
    for labels in admissible_partitions(l):
        k = max(labels) + 1
        mult = quotient_edges(labels)
        key = _invariant(k, mult)
        reps = buckets.setdefault(key, [])
        G = _simple_weighted(k, mult)
        for rep in reps:
            if nx.is_isomorphic(rep[0], G, edge_match=_edge_match):
                rep[2] += 1
                break
        else:
            reps.append([G, mult, 1, k])
    out = []
    for reps in buckets.values():
        for G, mult, count, k in reps:
            out.append(CycleQuotient(l, k, tuple(sorted(mult.items())), count))
    out.sort(key=lambda q: (-q.k, q.edges))
    return tuple(out)


def multigraph_laplacian(quotient: CycleQuotient) -> np.ndarray:
    """Degree on the diagonal, minus the multiplicity off it."""
    L = np.zeros((quotient.k, quotient.k))
    for (i, j), m in quotient.edges:
        L[i, j] -= m
        L[j, i] -= m
        L[i, i] += m
        L[j, j] += m
    return L


def edge_product_expectation(quotient: CycleQuotient, gamma: float) -> float:
    """``E prod_e P_e = 1 / det(I + 2 gamma L)`` for standard 2-D Gaussian latents."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    L = multigraph_laplacian(quotient)
    sign, logdet = np.linalg.slogdet(np.eye(quotient.k) + 2.0 * gamma * L)
    if sign <= 0:
        raise np.linalg.LinAlgError("I + 2 gamma L is not positive definite")
    return math.exp(-logdet)


_t = sympy.Symbol("t")


@lru_cache(maxsize=None)
def det_polynomial(quotient: CycleQuotient) -> tuple[int, ...]:
    """Integer coefficients ``[c_0, ..., c_{k-1}]`` of ``det(I + t L)``, exact."""
    L = sympy.Matrix(multigraph_laplacian(quotient).astype(int).tolist())
    d = (sympy.eye(quotient.k) + _t * L).det(method="berkowitz")
    poly = sympy.Poly(sympy.expand(d), _t)
    coeffs = [int(c) for c in reversed(poly.all_coeffs())]
    return tuple(coeffs + [0] * (quotient.k - len(coeffs)))


def spanning_tree_count(quotient: CycleQuotient) -> int:
    """Kirchhoff: any cofactor of the Laplacian, computed in exact rationals."""
    k = quotient.k
    L = multigraph_laplacian(quotient)
    M = [[Fraction(int(L[i, j])) for j in range(1, k)] for i in range(1, k)]
    return int(_fraction_det(M))


def _fraction_det(M) -> Fraction:
    n = len(M)
    if n == 0:
        return Fraction(1)
    M = [row[:] for row in M]
    det = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if M[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            M[c], M[p] = M[p], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            if f:
                for j in range(c, n):
                    M[r][j] -= f * M[c][j]
    return det


def falling_factorial(N: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= N - i
    return out


def exact_expected_trace_moment(N: int, gamma: float, l: int) -> float:
    """``E Tr P^l`` summed over the quotient classes of ``C_l``.

    Each determinant comes from its integer polynomial in ``t = 2 gamma`` and
    the whole sum is carried in rationals, so the only rounding is the final
    conversion (given the float ``gamma``).
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    t = 2 * Fraction(gamma)
    total = Fraction(0)
    for q in enumerate_cycle_quotients(l):
        det = Fraction(0)
        for c in reversed(det_polynomial(q)):
            det = det * t + c
        total += Fraction(q.count * falling_factorial(N, q.k)) / det
    return float(total)


def empirical_trace_moment(P: np.ndarray, l: int, eigenvalues=None) -> float:
    """``sum_i lambda_i^l`` of a symmetric matrix."""
    w = eigvals_sym(P) if eigenvalues is None else np.asarray(eigenvalues)
    return math.fsum(w ** l)


def normalized_moment(N: int, gamma: float, l: int, moment: float) -> float:
    return (2 * gamma / N) ** l * moment / (2 * gamma)


@dataclass
class LimitCheck:
    value: float
    limit: float
    relative_error: float
    regime_ratio: float


def normalized_moment_limit_check(N: int, gamma: float, l: int) -> LimitCheck:
    """``(1/(2 gamma)) (2 gamma/N)^l E Tr P^l`` against its limit ``1/l^2``."""
    val = normalized_moment(N, gamma, l, exact_expected_trace_moment(N, gamma, l))
    lim = 1.0 / l ** 2
    return LimitCheck(val, lim, abs(val - lim) / lim, N / (gamma * math.log(N)))


def kernel_sample(N: int, gamma: float, seed: int, trial: int) -> np.ndarray:
    # kappa and the block probabilities are irrelevant for P; any valid values will do
    params = make_params(N, 0.5, 0.25, 0.5, gamma)
    return kernel_matrix(sample_latents(params, seed, trial), gamma)


@dataclass
class MomentSample:
    l: int
    mean: float
    stderr: float
    values: np.ndarray


def monte_carlo_trace_moments(N: int, gamma: float, ls, trials: int, seed: int = 0) -> dict[int, MomentSample]:
    """Sample mean and standard error of ``Tr P^l`` over independent kernel draws."""
    ls = list(ls)
    vals = {l: np.empty(trials) for l in ls}
    for t in range(trials):
        w = eigvals_sym(kernel_sample(N, gamma, seed, t))
        for l in ls:
            vals[l][t] = math.fsum(w ** l)
    out = {}
    for l in ls:
        v = vals[l]
        se = float(v.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan
        out[l] = MomentSample(l, float(v.mean()) if trials else math.nan, se, v)
    return out


@dataclass
class VarianceCheck:
    sample_variance: float
    scaled: float
    values: np.ndarray


def moment_variance_check(N: int, gamma: float, l: int, trials: int, seed: int = 0,
                          samples=None) -> VarianceCheck:
    """Variance of ``(1/gamma) Tr((gamma P / N)^l)`` across kernel draws, and ``N`` times it.

    ``samples`` (a list of kernel matrices) overrides the random draws.
    """
    if samples is None:
        if trials < 30:
            raise ValueError("need at least 30 trials")
        samples = (kernel_sample(N, gamma, seed, t) for t in range(trials))
    vals = []
    for P in samples:
        w = eigvals_sym(P)
        vals.append(math.fsum((gamma * w / N) ** l) / gamma)
    vals = np.asarray(vals)
    var = float(vals.var(ddof=1)) if vals.size > 1 else 0.0
    return VarianceCheck(var, N * var, vals)


def c_k_constants(l: int) -> dict[int, Fraction]:
    """``c_k`` with ``1/c_k = sum over quotients on k vertices of 1/(k * #spanning trees)``."""
    acc: dict[int, Fraction] = {}
    for q in enumerate_cycle_quotients(l):
        acc[q.k] = acc.get(q.k, Fraction(0)) + Fraction(q.count, q.k * spanning_tree_count(q))
    return {k: 1 / v for k, v in sorted(acc.items())}


def write_moment_csv(path, l_values, gamma: float | None = None) -> None:
    """One row per quotient: ``l, k, quotient_id, count, det_polynomial_coeffs, value``.

    ``value`` is ``1/det(I + 2 gamma L)`` when ``gamma`` is given, else empty.
    ``count`` is the number of identification patterns in the class, so the
    sum over classes weighs each ``1/(k #trees)`` by it in ``c_k``.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["l", "k", "quotient_id", "count", "det_polynomial_coeffs", "spanning_trees", "value"])
        for l in l_values:
            for i, q in enumerate(enumerate_cycle_quotients(l)):
                coeffs = det_polynomial(q)
                val = "" if gamma is None else repr(edge_product_expectation(q, gamma))
                w.writerow([l, q.k, f"C{l}-{i}", q.count, " ".join(map(str, coeffs)),
                            spanning_tree_count(q), val])
