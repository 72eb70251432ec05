import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from afscale import analytic
from afscale.errors import DomainError

# Frozen from an mpmath oracle: decreasing solution exp(L x) U(A, alpha, S x) of the
# killed Feller equation, integrals against x^(alpha-1) e^(-beta x) with x = y^(1/alpha)
# on [0, 1] (20 digits).
FELLER_ORACLE = [
    ((10.0, 0.3, 2.0, 1.0, 1.0), 1.1462805292353014673),
    ((100.0, 0.01, 2.0, 1.0, 0.5), 0.22357277366224095379),
    ((1e4, 1e-4, 2.0, 1.0, 1.0), 0.41419117004160614539),
]


@pytest.mark.parametrize("args,ref", FELLER_ORACLE)
def test_feller_prelimit_against_oracle(args, ref):
    assert analytic.feller_phi_n(*args) == pytest.approx(ref, rel=1e-12)


def test_feller_converges():
    lim = analytic.feller_phi_limit(1.0, 2.0)
    gaps = [abs(analytic.feller_phi_n(n, 1 / n, 2.0, 1.0, 1.0) - lim) / lim for n in (1e2, 1e3, 1e4)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.01


@given(st.floats(0.0, 50.0), st.floats(0.1, 5.0), st.floats(0.1, 3.0))
def test_feller_limit_forms_agree(mu, beta, gamma):
    a = analytic.feller_phi_limit(mu, beta, gamma)
    b = analytic.feller_phi_limit_alt(mu, beta, gamma)
    assert a == pytest.approx(b, rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("beta,gamma", [(2.0, 1.0), (1.0, 3.0), (4.0, 0.5)])
def test_inverse_gaussian_fit(beta, gamma):
    fit = analytic.ig_parameter_fit(beta, gamma)
    assert fit.mean == pytest.approx(gamma / beta, rel=1e-10)
    assert fit.shape == pytest.approx(gamma ** 2 / 2, rel=1e-10)
    assert fit.max_abs_gap <= 1e-10


def test_taylor_coefficients():
    c = analytic.taylor_coefficients(np.exp, 1.0, 6)
    np.testing.assert_allclose(c, [1 / math.factorial(k) for k in range(6)], rtol=1e-13)


def rbm_oracle(n, beta, lam, mu):
    mp.mp.dps = 25
    g = (mp.mpf(mu) * beta / n) ** (mp.mpf(1) / 3)
    c = (mp.mpf(lam) / n + mp.mpf(beta) ** 2 / 4) / g ** 2
    u = lambda x: mp.exp(beta * x / 2) * mp.airyai(c + g * x)
    w = lambda x: mp.exp(-beta * x)
    top = mp.quad(lambda x: beta * x * u(x) * w(x), [0, 1, 10, 100, mp.inf])
    bottom = mp.quad(lambda x: u(x) * w(x), [0, 1, 10, 100, mp.inf])
    out = float(mu * top / bottom)
    mp.mp.dps = 15
    return out


@pytest.mark.parametrize("n,beta,lam,mu", [(1.0, 1.0, 1.0, 1.0), (100.0, 0.5, 2.0, 0.3), (1e4, 0.1, 1.0, 2.0)])
def test_rbm_prelimit_against_oracle(n, beta, lam, mu):
    assert analytic.rbm_phi_n(n, beta, lam, mu) == pytest.approx(rbm_oracle(n, beta, lam, mu), rel=1e-8)


def test_rbm_constants():
    aux = analytic.RbmAux(1e4, 0.3, 2.0, 1.5)
    assert aux.rho == pytest.approx(math.sqrt(1 + 4 * 2.0 / (0.09 * 1e4)), rel=1e-12)
    assert aux.gamma ** 3 == pytest.approx(1.5 * 0.3 / 1e4, rel=1e-12)


def test_rbm_limit():
    n = 1e6
    for mu in (0.5, 1.0, 2.0):
        assert analytic.rbm_phi_n(n, n ** -0.25, 1.0, mu) == pytest.approx(mu, rel=0.02)
    assert analytic.rbm_limit_exponent()(3.0) == 3.0


def test_zero_killing_mass():
    n, b, lam = 50.0, 0.4, 1.5
    r = (b - math.sqrt(b * b + 4 * lam / n)) / 2
    # phi0 = exp(r x) against the Exp(b) stationary law
    assert analytic.rbm_zero_killing_mass(n, b, lam) == pytest.approx(b / (b - r), rel=1e-13)


@pytest.mark.parametrize("c,g,d,a", [(400.0, 1.0, 20.0, 1.0), (9.0, 0.5, 3.0, 0.5), (3.0, 2.0, 1.0, 2.0)])
def test_airy_laplace_ratio_against_mpmath(c, g, d, a):
    mp.mp.dps = 25
    f = lambda x: d ** (1 + a) / mp.gamma(1 + a) * mp.exp(-d * x) * x ** a * mp.airyai(c + g * x)
    # breakpoints follow the decay rate delta + sqrt(c) gamma of the integrand
    pts = mp.linspace(0, 50 / (d + math.sqrt(c) * g), 41) + [mp.inf]
    ref = mp.quad(f, pts) / mp.airyai(c)
    mp.mp.dps = 15
    assert analytic.airy_laplace_ratio(c, g, d, a) == pytest.approx(float(ref), rel=1e-9)


@given(st.floats(2.0, 2000.0), st.floats(0.1, 3.0), st.floats(0.1, 50.0), st.floats(0.2, 2.0))
def test_airy_sandwich_brackets_ratio(c, g, d, a):
    s = analytic.airy_sandwich(c, g, d, a)
    v = analytic.airy_laplace_ratio(c, g, d, a)
    assert s.lower <= v * (1 + 1e-9)
    assert v <= s.upper * (1 + 1e-9)


def test_airy_ratio_target():
    assert analytic.airy_laplace_ratio(400.0, 1.0, 20.0, 1.0) == pytest.approx(0.25, rel=0.01)


def test_errors():
    with pytest.raises(DomainError):
        analytic.feller_phi_n(10.0, -0.1, 2.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        analytic.airy_sandwich(1.0, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        analytic.rbm_phi_n(1.0, 0.0, 1.0, 1.0)
