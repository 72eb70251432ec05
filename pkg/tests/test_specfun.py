import math

import mpmath as mp
import numpy as np
import pytest
import scipy.special as sc
from hypothesis import given, strategies as st

from afscale import specfun
from afscale.errors import DomainError


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 2.0, 3.7, 10.0])
@pytest.mark.parametrize("x", [1e-6, 0.3, 2.0, 17.0, 60.0, 400.0])
def test_bessel_i_matches_scipy(nu, x):
    ref = sc.ive(nu, x)
    assert specfun.bessel_i_scaled(nu, x) == pytest.approx(ref, rel=1e-12)
    if x < 700:
        assert specfun.bessel_i(nu, x) == pytest.approx(sc.iv(nu, x), rel=1e-12)


@given(st.floats(0.0, 20.0), st.floats(1e-3, 500.0))
def test_bessel_i_ratio(nu, x):
    got = specfun.bessel_i_ratio(nu, x)
    ref = sc.ive(nu + 1, x) / sc.ive(nu, x)
    assert got == pytest.approx(ref, rel=1e-11)
    assert 0 < got < 1


@given(st.floats(1.0, 12.0), st.floats(0.05, 150.0))
def test_bessel_i_recurrence(nu, x):
    lhs = specfun.bessel_i_scaled(nu - 1, x) - specfun.bessel_i_scaled(nu + 1, x)
    rhs = 2 * nu / x * specfun.bessel_i_scaled(nu, x)
    assert lhs == pytest.approx(rhs, rel=1e-9)


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 2.5, 7.0])
@pytest.mark.parametrize("x", [0.01, 1.0, 5.5, 30.0, 250.0])
def test_bessel_j_matches_scipy(nu, x):
    assert specfun.bessel_j(nu, x) == pytest.approx(sc.jv(nu, x), rel=1e-10, abs=1e-13)


@pytest.mark.parametrize("nu", [0, 1, 2, 5])
def test_zeros_match_scipy(nu):
    tab = specfun.bessel_j_zeros(float(nu), 500)
    np.testing.assert_allclose(tab.zeros, sc.jn_zeros(nu, 500), rtol=1e-13)


@pytest.mark.parametrize("nu", [0.5, 1.5, 0.25, 3.3])
def test_zeros_fractional_order(nu):
    tab = specfun.bessel_j_zeros(nu, 40)
    ref = [float(mp.besseljzero(nu, k)) for k in (1, 2, 10, 40)]
    np.testing.assert_allclose(tab.zeros[[0, 1, 9, 39]], ref, rtol=1e-13)
    if nu == 0.5:
        np.testing.assert_allclose(tab.zeros, np.pi * np.arange(1, 41), rtol=1e-14)


def test_zero_table_interlaces_and_grows():
    a = specfun.bessel_j_zeros(1.0, 300).zeros
    b = specfun.bessel_j_zeros(2.0, 300).zeros
    assert np.all(np.diff(a) > 0)
    # zeros of J_nu and J_{nu+1} interlace
    assert np.all(a[:-1] < b[:-1]) and np.all(b[:-1] < a[1:])
    longer = specfun.bessel_j_zeros(1.0, 600).zeros
    np.testing.assert_array_equal(longer[:300], a)


def test_mcmahon_is_close_for_large_index():
    z = specfun.bessel_j_zeros(1.0, 1000).zeros
    assert abs(specfun.mcmahon_zero(1.0, 1000) - z[-1]) < 1e-9


@pytest.mark.parametrize("nu,n", [(0.0, 1), (1.0, 1), (1.0, 2), (2.5, 3), (4.0, 4)])
def test_rayleigh_sigma(nu, n):
    ref = float(mp.nsum(lambda k: mp.besseljzero(nu, int(k)) ** (-2 * n), [1, mp.inf])) if n > 1 else 1 / (4 * (nu + 1))
    assert specfun.rayleigh_sigma(nu, n) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("a,b,x", [(0.5, 0.3, 1.0), (2.0, 1e-3, 0.1), (1e-4, 0.5, 20.0), (3.0, 2.0, 0.5)])
def test_kummer_u_matches_mpmath(a, b, x):
    assert specfun.kummer_u(a, b, x) == pytest.approx(float(mp.hyperu(a, b, x)), rel=1e-9)


@pytest.mark.parametrize("a,y", [(0.5, 0.1), (2.0, 3.0), (1.5, 1.0), (1e-3, 1e-2), (5.0, 40.0)])
def test_upper_incomplete_gamma(a, y):
    assert specfun.upper_incomplete_gamma(a, y) == pytest.approx(float(mp.gammainc(a, y)), rel=1e-10)


@given(st.floats(0.01, 170.0))
def test_gamma_ln(x):
    assert specfun.gamma_ln(x) == pytest.approx(math.lgamma(x), rel=1e-13, abs=1e-13)


@pytest.mark.parametrize("x", [-9.5, -3.3, -0.5, 0.0, 0.7, 3.0, 5.9, 6.1, 15.0, 80.0])
def test_airy_matches_scipy(x):
    ai, _, bi, _ = sc.airy(x)
    assert specfun.airy_ai(x) == pytest.approx(ai, rel=1e-10, abs=1e-14)
    if x < 30:
        assert specfun.airy_bi(x) == pytest.approx(bi, rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("x", [1.0, 50.0, 400.0, 5000.0])
def test_log_airy_far_tail(x):
    assert specfun.log_airy_ai(x) == pytest.approx(float(mp.log(mp.airyai(x))), rel=1e-12)


@given(st.floats(2.01, 200.0))
def test_airy_tail_sandwich(y):
    r = 1.5 * y ** -1.5
    qe = y ** -0.25 * math.exp(-2 / 3 * y ** 1.5) / math.sqrt(4 * math.pi)
    ai = specfun.airy_ai(y)
    assert (1 - r) * qe <= ai <= qe


def test_invalid_arguments_raise():
    with pytest.raises(DomainError):
        specfun.bessel_i(-1.0, 1.0)
    with pytest.raises(DomainError):
        specfun.bessel_j_zeros(1.0, 0)
    with pytest.raises(DomainError):
        specfun.bessel_i(1.0, float("nan"))


@pytest.mark.parametrize("beta", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("mu", [0.25, 1.0, 4.0])
def test_pochhammer_series_bessel_exponent(beta, mu):
    k = np.arange(61)
    terms = np.exp(k * math.log(mu) - sc.gammaln(k + 1) - sc.gammaln(beta + k) + sc.gammaln(beta))
    s = math.fsum(terms)
    bes = math.gamma(beta) * specfun.bessel_i(beta - 1.0, 2.0 * math.sqrt(mu))
    assert s == pytest.approx(mu ** (-(beta - 1.0) / 2.0) * bes, rel=1e-10)
    # the exponent -(1 + beta)/2 is off by a factor mu, visible away from mu = 1
    other = mu ** (-(1.0 + beta) / 2.0) * bes
    if mu != 1.0:
        assert abs(other / s - 1.0) > 0.5
