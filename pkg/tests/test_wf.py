import math

import mpmath as mp
import numpy as np
import pytest
import scipy.special as sc
from hypothesis import given, strategies as st

from afscale import wf
from afscale.errors import DomainError, ToleranceError


def bessel_phi(mu, beta, gamma=1.0):
    r = math.sqrt(mu)
    return gamma * r * sc.ive(beta, 2 * r) / sc.ive(beta - 1, 2 * r)


@pytest.mark.parametrize("beta", [1.5, 2.0, 3.0, 7.5])
@pytest.mark.parametrize("mu", [1e-10, 1e-3, 0.25, 1.0, 4.0, 100.0, 1e4])
def test_limit_exponent_matches_scipy(beta, mu):
    assert wf.wf_phi_limit(mu, beta, 1.3) == pytest.approx(bessel_phi(mu, beta, 1.3), rel=1e-12)


@pytest.mark.parametrize("beta", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("mu", [0.25, 0.5, 1.0, 2.0, 4.0])
def test_continued_fraction_depth40(beta, mu):
    assert abs(wf.wf_phi_cf(mu, beta, 40) - wf.wf_phi_limit(mu, beta)) <= 1e-10


def test_convergents_settle():
    c = wf.wf_cf_convergents(2.0, 2.0, 30)
    assert np.all(np.abs(np.diff(c))[10:] < 1e-8)
    assert c[-1] == pytest.approx(wf.wf_phi_limit(2.0, 2.0), abs=1e-14)


def test_limit_exponent_small_mu_slope():
    assert wf.wf_phi_limit(1e-12, 2.0, 3.0) == pytest.approx(3.0 * 1e-12 / 2.0, rel=1e-10)


@given(st.floats(0.0, 20.0), st.floats(1.05, 6.0))
def test_limit_coefficients_closed_form(mu, beta):
    seq = wf.wf_limit_coefficients(mu, beta, 30)
    k = np.arange(31)
    ref = np.exp(k * np.log(mu) - sc.gammaln(k + 1) - sc.gammaln(beta + k) + sc.gammaln(beta)) if mu > 0 else (k == 0) * 1.0
    np.testing.assert_allclose(seq.coefficients, ref, rtol=1e-11, atol=1e-300)


@pytest.mark.parametrize("mu,beta", [(0.7, 2.0), (3.0, 1.5)])
def test_limit_integrals_are_bessel(mu, beta):
    r = math.sqrt(mu)
    ref = math.gamma(beta) * mu ** (-(beta - 1) / 2) * sc.iv(beta - 1, 2 * r)
    assert wf.limit_speed_integral(mu, beta) == pytest.approx(ref, rel=1e-12)
    ratio = mu * wf.limit_representing_integral(mu, beta, 2.0) / wf.limit_speed_integral(mu, beta)
    assert ratio == pytest.approx(wf.wf_phi_limit(mu, beta, 2.0), rel=1e-12)


@given(st.floats(1e-4, 0.5), st.floats(1.1, 4.0), st.floats(0.0, 6.0))
def test_u_mu_is_decreasing_with_boundary_slope(tau, beta, mu):
    p = wf.WfScaling.along(tau, 1.0, beta)
    seq = wf.wf_coefficients(p, mu)
    x = np.linspace(0.5, 1.0, 60)
    u = wf.u_mu(seq, x)
    if mu + p.lam * tau > 1e-12:
        assert np.all(np.diff(u) < 0)
    assert wf.u_mu_derivative(seq, 1.0) == pytest.approx(-(p.lam * tau + mu) / beta, rel=1e-12)


@pytest.mark.parametrize("tau,alpha,beta,lam", [(0.1, 0.1, 2.0, 1.0), (0.05, 0.3, 1.5, 2.0), (1e-3, 1e-3, 3.0, 1.0)])
def test_killing_free_solution_is_hypergeometric(tau, alpha, beta, lam):
    # mu = 0: x(1-x)u'' + (alpha - (alpha+beta)x)u' = lam tau u, bounded at 1
    p = wf.WfScaling(tau, alpha, beta, lam)
    sol = wf.WfFundamentalSolution(p, 0.0)
    s = alpha + beta - 1
    d = math.sqrt(s * s - 4 * lam * tau)
    a, b = (s + d) / 2, (s - d) / 2
    for x in (0.0, 1e-6, 0.1, 0.3, 0.5, 0.8, 1.0):
        ref = float(mp.hyp2f1(a, b, beta, 1 - x))
        assert sol(x) == pytest.approx(ref, rel=1e-10)
    # int u dm against a direct mpmath quadrature (substitution x = y^(1/alpha))
    al = mp.mpf(alpha)
    f = lambda y: mp.hyp2f1(a, b, beta, 1 - y ** (1 / al)) * (1 - y ** (1 / al)) ** (beta - 1)
    ref = mp.quad(f, [0, 0.5 ** alpha, 1]) / al / mp.beta(alpha, beta)
    assert sol.speed_integral() == pytest.approx(float(ref), rel=1e-8)


@pytest.mark.parametrize("tau,mu", [(1e-2, 0.5), (1e-3, 2.0), (1e-4, 1.0), (0.2, 3.0)])
def test_green_identity(tau, mu):
    # lam int u dm + mu int u dk = -du/ds(0+)
    p = wf.WfScaling.along(tau, 1.0, 2.0)
    sol = wf.WfFundamentalSolution(p, mu)
    lhs = p.lam * sol.speed_integral() + mu * sol.representing_integral()
    assert lhs == pytest.approx(-sol.scale_derivative_at_zero(), rel=1e-12)


def test_branches_agree_across_matching_point():
    p = wf.WfScaling.along(1e-3, 1.0, 2.0)
    sol = wf.WfFundamentalSolution(p, 1.5)
    for x in (0.3, 0.4, 0.45, 0.55, 0.7):
        near = sol.c0 * sol._branch(sol._b0, 0.0, x) + sol.c1 * sol._branch(sol._b1, sol._s1, x)
        far = float(np.polynomial.polynomial.polyval(1 - x, sol.seq.coefficients))
        assert near == pytest.approx(far, rel=1e-10)


def test_solution_satisfies_equation():
    tau, alpha, beta, lam, mu = 0.05, 0.05, 2.0, 1.0, 2.0
    sol = wf.WfFundamentalSolution(wf.WfScaling(tau, alpha, beta, lam), mu)
    for x in (0.05, 0.2, 0.6, 0.9):
        h = 1e-4
        u0, up, um = sol(x), sol(x + h), sol(x - h)
        d1 = (up - um) / (2 * h)
        d2 = (up - 2 * u0 + um) / h ** 2
        res = x * (1 - x) * d2 + (alpha * (1 - x) - beta * x) * d1 - (lam * tau + mu * x) * u0
        assert abs(res) < 1e-5


def test_prelimit_gaps_decrease():
    for mu in (0.5, 1.0, 2.0):
        lim = wf.wf_phi_limit(mu, 2.0)
        gaps = [abs(wf.wf_phi_n(wf.WfScaling.along(t, 1.0, 2.0), mu) - lim) for t in (1e-2, 1e-3, 1e-4)]
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] <= 0.01 * lim
        # first-order convergence in tau
        assert gaps[0] / gaps[1] == pytest.approx(10, rel=0.1)


def test_prelimit_exponent_zero_and_monotone():
    p = wf.WfScaling.along(1e-3, 1.0, 2.0)
    assert wf.wf_phi_n(p, 0.0) == 0.0
    vals = [wf.wf_phi_n(p, m) for m in (0.1, 0.5, 1.0, 3.0)]
    assert np.all(np.diff(vals) > 0)


def test_coefficient_decay_report():
    p = wf.WfScaling.along(1e-3, 1.0, 2.0)
    rep = wf.coefficient_decay_check(wf.wf_coefficients(p, 4.0, 200), 0.5)
    assert rep.passed and rep.relative_change < 1e-2
    with pytest.raises(DomainError):
        wf.coefficient_decay_check(wf.wf_coefficients(p, 4.0, 200), 1.5)


def test_coefficient_guard():
    with pytest.raises(ToleranceError):
        wf.wf_coefficients(wf.WfScaling(1.0, 1.0, 1.01, 1.0), 1e9, 400)


def test_stationary_moments_of_integral():
    tau, alpha, beta = 1e-3, 1e-3, 2.0
    assert wf.integrated_mean(tau, alpha, beta) == pytest.approx(1 / (alpha + beta))
    # oracle: double integral of the stationary covariance
    ab = alpha + beta
    var_x = alpha * beta / (ab ** 2 * (ab + 1))
    th = ab / tau
    ref = mp.quad(lambda s: 2 * (1 - s) * var_x * mp.e ** (-th * s), [0, 1e-3, 1]) / tau ** 2
    assert wf.integrated_variance(tau, alpha, beta) == pytest.approx(float(ref), rel=1e-10)
    assert wf.integrated_variance(tau, alpha, beta, 1e-9) > 0


def test_measures():
    p = wf.WfScaling(0.1, 0.4, 2.0)
    spec = wf.MeasureSpec("wf_speed", p)
    assert spec.total_mass == pytest.approx(1.0, rel=1e-10)
    x = np.array([0.2, 0.5])
    np.testing.assert_allclose(wf.speed_density(p, x), x ** -0.6 * (1 - x) / sc.beta(0.4, 2.0))
    np.testing.assert_allclose(wf.representing_density(p, x), x / 0.1 * wf.speed_density(p, x))


def test_invalid_parameters():
    with pytest.raises(DomainError):
        wf.WfScaling(0.1, 0.1, 1.0)
    with pytest.raises(DomainError):
        wf.WfScaling(-0.1, 0.1, 2.0)
    with pytest.raises(DomainError):
        wf.wf_phi_limit(-1.0, 2.0)
    with pytest.raises(DomainError):
        wf.WfFundamentalSolution(wf.WfScaling(0.5, 1.5, 2.0), 1.0)
