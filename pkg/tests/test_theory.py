import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geosbm.eigen import Spectrum, eig_sym
from geosbm.graphgen import conditional_mean, kernel_matrix, sample_adjacency
from geosbm.model import community_vector, make_params, ones_vector, sample_latents
from geosbm.resolvent import context_from_matrix, detached_eigenvalues, predicted_correlation
from geosbm.theory import (BoundDomainError, QuadratureError, asymptotic_correlation_bound,
                           asymptotic_correlation_validity, check_H3, check_regimes,
                           expected_isolated_vertices, gamma_bar, lambda12, mu1_approx,
                           noise_norm_bound, separation_condition)

PAPER = dict(N=2000, p1=0.025, p2=0.01, kappa=0.97)


def paper(gamma, **kw):
    d = dict(PAPER, gamma=gamma)
    d.update(kw)
    return make_params(**d)


def test_lambda12():
    assert lambda12(paper(100)) == (35.0, 15.0)
    assert lambda12(2000, 0.025, 0.01) == (35.0, 15.0)
    assert lambda12(make_params(4000, 0.025, 0.01, 0.97, 100)) == (70.0, 30.0)
    assert lambda12(2000, 0.3, 0.3) == (600.0, 0.0)
    with pytest.raises(TypeError):
        lambda12(2000, 0.025)


def test_mu1_table():
    vals = [mu1_approx(2000, g, kappa=1.0) for g in (50, 70, 100, 110)]
    assert [round(v, 1) for v in vals] == [20.0, 14.3, 10.0, 9.1]
    assert vals[0] == 20.0 and vals[2] == 10.0
    assert mu1_approx(paper(100)) == pytest.approx(9.7, abs=1e-12)
    assert mu1_approx(paper(100)) == mu1_approx(2000, 100.0, kappa=0.97)


def test_noise_norm_bound():
    assert noise_norm_bound(paper(100, kappa=0.0)) == pytest.approx(math.sqrt(2000 * 0.0175), rel=1e-15)
    assert noise_norm_bound(paper(100)) == pytest.approx(math.sqrt(19.4) + math.sqrt(2000 * (0.0175 + 0.00485)),
                                                        rel=1e-15)
    assert abs(noise_norm_bound(paper(100)) - 11.09) < 0.01


@pytest.mark.slow
def test_noise_norm_bound_empirical():
    # the big-O term is taken with coefficient 1; 1.3x is the recorded slack
    p = paper(100)
    ratios = []
    for s in range(5):
        Q = conditional_mean(p, kernel_matrix(sample_latents(p, s), p.gamma))
        A = sample_adjacency(Q, s).dense()
        ratios.append(np.linalg.norm(A - Q, 2) / noise_norm_bound(p))
    assert np.median(ratios) <= 1.3


def test_separation_condition():
    assert separation_condition(make_params(2000, 0.04, 0.01, 0.5, 200), 1.0)
    assert not separation_condition(paper(100), 0.05)
    assert separation_condition(paper(100, kappa=0.0), 100.0)
    with pytest.raises(ValueError):
        separation_condition(paper(100), 0.0)


@given(st.floats(0.01, 0.9), st.floats(0.01, 0.99), st.floats(0.0, 0.5), st.floats(1, 1000),
       st.floats(1e-3, 5))
def test_separation_condition_equivalence(p1, frac, kappa, gamma, eps):
    p = make_params(2, p1, p1 * frac, min(kappa, 1 - p1), gamma)
    l1, l2 = lambda12(p)
    lhs = (p.p1 - p.p2) / 2 >= (2 * p.kappa / p.gamma) * (1 + eps)
    assert separation_condition(p, eps) == lhs
    # same inequality written through lambda2 and mu1, up to rounding at equality
    alt = l2 >= 4 * mu1_approx(p) * (1 + eps)
    gap = l2 - 4 * mu1_approx(p) * (1 + eps)
    assert lhs == alt or abs(gap) < 1e-9 * max(1.0, l2)


def test_regimes_paper_values():
    rep = check_regimes(paper(100))
    assert rep["N_over_gamma_lnN"].ratio == pytest.approx(2.63, abs=0.01)
    assert rep["mu1_over_lambda2"].ratio == pytest.approx(0.647, abs=1e-3)
    assert rep["lambda2_over_sqrt_lambda1"].ratio == pytest.approx(2.54, abs=0.01)
    assert rep["easy_case"].ratio == pytest.approx(30 / (math.sqrt(2000) + 20), rel=1e-12)
    assert abs(rep["easy_case"].ratio - 0.46) < 0.01 and not rep["easy_case"].passed
    data = json.loads(rep.to_json())
    assert {"name", "lhs", "rhs", "ratio", "pass", "inequality"} <= set(data["checks"][0])
    assert all(math.isfinite(c.ratio) for c in rep.checks)
    assert check_regimes(paper(100)).to_json() == rep.to_json()


def test_regimes_bounded_gamma_note():
    assert check_regimes(paper(10)).notes
    assert not check_regimes(paper(100)).notes


def test_easy_case_ratio_large_signal():
    rep = check_regimes(make_params(2000, 0.2, 0.05, 0.5, 500))
    assert rep["easy_case"].ratio == pytest.approx(6.2, abs=0.05) and rep["easy_case"].passed


def test_H3_trivial_and_flagged():
    n = 6
    v1 = ones_vector(n)
    spec = Spectrum(np.array([2.0] + [0.0] * (n - 1)), v1[:, None], np.zeros(1), 2.0)
    assert check_H3(spec, v1, 4.0).lambda1_r1sq == pytest.approx(4.0, rel=1e-14)
    w = community_vector(n)
    spec = Spectrum(np.array([2.0] + [0.0] * (n - 1)), w[:, None], np.zeros(1), 2.0)
    rep = check_H3(spec, v1, 4.0, gamma=10.0)
    assert rep.flagged and rep.gamma_r1sq == pytest.approx(0, abs=1e-30)


@pytest.mark.slow
def test_H3_paper_params():
    p = paper(100)
    vals = []
    for s in range(5):
        P1 = p.kappa * kernel_matrix(sample_latents(p, s), p.gamma)
        vals.append(check_H3(eig_sym(P1, k=1), ones_vector(p.N), 35.0, p.gamma).lambda1_r1sq)
    assert min(vals) > 0.5


def test_bound_values():
    assert asymptotic_correlation_bound(35 / 15, 0.0) == 1.0
    q = 35 / 15
    v = asymptotic_correlation_bound(q, 0.01)
    assert 0 < v < 1
    xs = np.linspace(0, asymptotic_correlation_validity(q), 50)
    vals = [asymptotic_correlation_bound(q, x) for x in xs]
    assert np.all(np.diff(vals) < 0)
    assert gamma_bar(3.0) == 5.0


def test_bound_domain():
    with pytest.raises(BoundDomainError):
        asymptotic_correlation_bound(1.0, 0.0)
    q = 2.0
    with pytest.raises(BoundDomainError):
        asymptotic_correlation_bound(q, asymptotic_correlation_validity(q) * 1.01)
    with pytest.raises(BoundDomainError):
        asymptotic_correlation_bound(q, -0.1)


@settings(max_examples=50)
@given(st.integers(10, 30).map(lambda h: 2 * h), st.integers(0, 2 ** 32 - 1), st.floats(1.3, 4.0), st.floats(0.05, 1.0))
def test_bound_below_exact_correlation(N, seed, q, frac):
    X = np.random.default_rng(seed).standard_normal((N, 2))
    P1 = kernel_matrix(X, 1.0)
    P1 *= 1.0 / np.linalg.eigvalsh(P1)[-1]
    l2 = 10.0
    x_max = asymptotic_correlation_validity(q)
    # mu1 = x * lambda2 with x inside the validity window
    x = frac * x_max
    P1 *= x * l2
    ctx = context_from_matrix(P1, ones_vector(N), community_vector(N), q * l2, l2)
    roots = detached_eigenvalues(ctx)
    assert len(roots) == 2
    exact = max(predicted_correlation(ctx, t) for t in roots)
    assert asymptotic_correlation_bound(q, x) <= exact + 1e-12


@pytest.mark.parametrize("gamma", [0.1, 1.0, 3.7, 50.0])
def test_isolated_two_vertices(gamma):
    assert abs(expected_isolated_vertices(2, gamma) - 2 * (1 - 1 / (1 + 4 * gamma))) < 1e-10


def test_isolated_monotone_and_limits():
    vals = [expected_isolated_vertices(200, g) for g in (1, 2, 5, 10, 20)]
    assert np.all(np.diff(vals) > 0)
    assert expected_isolated_vertices(200, 1e-8) < 1e-10
    with pytest.raises(ValueError):
        expected_isolated_vertices(1, 1.0)
    with pytest.raises(ValueError):
        expected_isolated_vertices(10, 0.0)


def test_isolated_against_direct_expectation():
    # N E(1 - c e^{-b t})^{N-1} with t ~ Exp(1), by a fine trapezoid rule in t
    N, g = 50, 3.0
    c, b = 1 / (1 + 2 * g), 2 * g / (1 + 2 * g)
    t = np.linspace(0, 60, 600001)
    f = np.exp(-t) * (1 - c * np.exp(-b * t)) ** (N - 1)
    ref = N * np.sum((f[1:] + f[:-1]) / 2 * np.diff(t))
    assert abs(expected_isolated_vertices(N, g) - ref) < 1e-7


def test_quadrature_error_type():
    assert issubclass(QuadratureError, RuntimeError)
