"""Closed-form predictions, regime checks and the isolated-vertex oracle."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate

from .model import ModelParams


def _decimal(x: float) -> Fraction:
    # the decimal a float prints as, e.g. 0.025 -> 1/40
    return Fraction(repr(float(x)))


def lambda12(params, p1: float | None = None, p2: float | None = None) -> tuple[float, float]:
    """Nonzero eigenvalues ``N(p1 + p2)/2`` and ``N(p1 - p2)/2`` of the block matrix.

    Takes a :class:`ModelParams` or ``(N, p1, p2)``. Probabilities are read as
    the decimals they print as and the result is rounded once, so
    ``lambda12(2000, 0.025, 0.01)`` is exactly ``(35.0, 15.0)``.
    """
    if isinstance(params, ModelParams):
        N, p1, p2 = params.N, params.p1, params.p2
    elif p1 is None or p2 is None:
        raise TypeError("lambda12 needs ModelParams or (N, p1, p2)")
    else:
        N = params
    a, b = _decimal(p1), _decimal(p2)
    return float(N * (a + b) / 2), float(N * (a - b) / 2)


def mu1_approx(params, gamma: float | None = None, kappa: float = 1.0) -> float:
    """Leading-order top eigenvalue ``kappa N / (2 gamma)`` of ``kappa P``.

    Takes a :class:`ModelParams`, or ``(N, gamma, kappa=1)`` for the bare
    kernel scale (``kappa = 1`` is outside the valid parameter set whenever
    ``p1 > 0``, yet it is the scale of ``P`` itself).
    """
    if isinstance(params, ModelParams):
        N, gamma, kappa = params.N, params.gamma, params.kappa
    elif gamma is None:
        raise TypeError("mu1_approx needs ModelParams or (N, gamma)")
    else:
        N = params
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return float(kappa * N / (2 * gamma))


def noise_norm_bound(params: ModelParams) -> float:
    """``sqrt(kappa N/gamma) + sqrt(N((p1+p2)/2 + kappa/(2 gamma)))``.

    The big-O correction inside the second root is taken with coefficient 1.
    """
    N, k, g = params.N, params.kappa, params.gamma
    return math.sqrt(k * N / g) + math.sqrt(N * ((params.p1 + params.p2) / 2 + k / (2 * g)))


def separation_condition(params: ModelParams, epsilon: float) -> bool:
    """``(p1 - p2)/2 >= (2 kappa / gamma)(1 + epsilon)``, i.e. ``lambda2 >= 4 mu1 (1 + epsilon)``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return (params.p1 - params.p2) / 2 >= (2 * params.kappa / params.gamma) * (1 + epsilon)


@dataclass
class RegimeCheck:
    name: str
    lhs: float
    rhs: float
    ratio: float
    passed: bool | None
    inequality: str

    def as_record(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio,
                "pass": self.passed, "inequality": self.inequality}


@dataclass
class RegimeMargins:
    gamma_min: float = 20.0
    h1_ratio_min: float = 2.0
    ratio_lo: float = 0.1
    ratio_hi: float = 10.0
    signal_over_sqrt_min: float = 2.0
    easy_case_min: float = 2.0


@dataclass
class RegimeReport:
    checks: list[RegimeCheck] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def __getitem__(self, name: str) -> RegimeCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> str:
        return json.dumps({"checks": [c.as_record() for c in self.checks], "notes": self.notes},
                          indent=2, sort_keys=True)


def check_regimes(params: ModelParams, margins: RegimeMargins | None = None) -> RegimeReport:
    """Finite-size versions of the asymptotic assumptions, one record each."""
    m = margins or RegimeMargins()
    N, g = params.N, params.gamma
    l1, l2 = lambda12(params)
    mu1 = mu1_approx(params)
    rep = RegimeReport()

    def add(name, lhs, rhs, passed, ineq):
        ratio = lhs / rhs if rhs != 0 else math.inf
        rep.checks.append(RegimeCheck(name, float(lhs), float(rhs), float(ratio), passed, ineq))

    add("gamma", g, m.gamma_min, g >= m.gamma_min, "gamma -> infinity")
    h1 = N / (g * math.log(N))
    add("N_over_gamma_lnN", N / (g * math.log(N)), 1.0, h1 >= m.h1_ratio_min, "N/(gamma ln N) -> infinity")
    r = mu1 / l2
    add("mu1_over_lambda2", mu1, l2, m.ratio_lo <= r <= m.ratio_hi, "kappa N/(2 gamma) / lambda2 in [c, C]")
    r = l2 / l1
    add("lambda2_over_lambda1", l2, l1, m.ratio_lo <= r <= m.ratio_hi, "lambda2 / lambda1 in [c, C]")
    r = l2 / math.sqrt(l1)
    add("lambda2_over_sqrt_lambda1", l2, math.sqrt(l1), r >= m.signal_over_sqrt_min, "lambda2 >> sqrt(lambda1)")
    rhs = math.sqrt(N) + N / g
    add("easy_case", N * (params.p1 - params.p2), rhs, N * (params.p1 - params.p2) / rhs >= m.easy_case_min,
        "N(p1 - p2) >> sqrt(N) + N/gamma")
    if g < m.gamma_min:
        rep.notes.append("bounded-gamma run: the limiting constant C1(gamma0) is not computed; "
                         "report the empirical rho(P)/N instead")
    return rep


@dataclass
class H3Report:
    lambda1_r1sq: float
    gamma_r1sq: float
    r1: float
    flagged: bool


def check_H3(spectrum_of_P1, v1, lambda1: float, gamma: float | None = None,
             zero_tol: float = 1e-12) -> H3Report:
    """``lambda1 <v1, w1>^2`` and ``gamma <v1, w1>^2`` for the top eigenvector ``w1`` of ``P1``.

    Raw values only; ``flagged`` marks a numerically vanishing overlap.
    """
    w1 = spectrum_of_P1.vector(0)
    r1 = float(np.asarray(v1) @ w1)
    g = math.nan if gamma is None else gamma * r1 * r1
    val = lambda1 * r1 * r1
    return H3Report(val, g, r1, abs(val) <= zero_tol)


class BoundDomainError(ValueError):
    """Arguments outside the domain where the asymptotic bound was derived."""


def gamma_bar(q: float) -> float:
    return 3 + 4 / (q - 1)


def asymptotic_correlation_bound(q: float, x: float) -> float:
    """Lower bound on the squared correlation ``<w, v2>^2 / |w|^2``.

    ``q = lambda1/lambda2 > 1`` and ``x = mu1/lambda2``. Uses the small-``x``
    value ``gbar = 3 + 4/(q - 1)`` and needs ``(gbar + 1) x <= 1/2``::

        (1 - 2x/(q-1)) (1 - (gbar+1) x)^3
        / (1 + (gbar+1) x / (2(q-1)) + sqrt(q (gbar+1) x))^2
    """
    if not q > 1:
        raise BoundDomainError(f"q must exceed 1, got {q}")
    gb = gamma_bar(q)
    if not 0 <= x or (gb + 1) * x > 0.5:
        raise BoundDomainError(f"x={x} outside [0, 1/(2(gbar+1))] = [0, {0.5 / (gb + 1):.6g}]")
    num = (1 - 2 * x / (q - 1)) * (1 - (gb + 1) * x) ** 3
    den = (1 + (gb + 1) * x / (2 * (q - 1)) + math.sqrt(q * (gb + 1) * x)) ** 2
    return num / den


def asymptotic_correlation_validity(q: float) -> float:
    """Largest ``x`` accepted by :func:`asymptotic_correlation_bound`."""
    return 0.5 / (gamma_bar(q) + 1)


class QuadratureError(RuntimeError):
    pass


def expected_isolated_vertices(N: int, gamma: float) -> float:
    """Expected number of isolated vertices of the pure kernel graph.

    Each pair is joined with probability ``exp(-gamma |Xi - Xj|^2)``. With
    ``t = |Xi|^2 / 2`` unit exponential and ``c = 1/(1 + 2 gamma)``,
    ``b = 2 gamma c``, the count is ``N E(1 - c e^{-b t})^{N-1}``; after
    ``u = e^{-t}`` this is ``N int_0^1 (1 - c u^b)^{N-1} du``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if N < 2:
        raise ValueError("N must be at least 2")
    c = 1.0 / (1.0 + 2.0 * gamma)
    b = 2.0 * gamma * c
    n1 = N - 1

    def integrand(u):
        return math.exp(n1 * math.log1p(-c * u ** b))

    # the integrand rises from 0 where c u^b is close to 1/N; split there
    pts = []
    u_star = (1.0 / (c * N)) ** (1.0 / b) if c * N > 1 else None
    if u_star is not None and 0 < u_star < 1:
        pts = [u_star]
    tol = 1e-10
    val, err = integrate.quad(integrand, 0.0, 1.0, points=pts or None, epsabs=tol, epsrel=1e-12, limit=500)
    if not math.isfinite(val) or err > tol:
        raise QuadratureError(f"quadrature did not converge (estimate {val}, error {err})")
    return N * val
