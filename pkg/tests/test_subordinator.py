import math

import mpmath as mp
import numpy as np
import pytest
import scipy.integrate as si
import scipy.special as sc

from afscale import subordinator as sb
from afscale.errors import DomainError


def mp_phi(mu, beta, gamma=1.0):
    # the Bessel ratio written with 0F1, analytic at mu = 0
    return gamma * mu / beta * mp.hyp0f1(beta + 1, mu) / mp.hyp0f1(beta, mu)


@pytest.fixture(scope="module")
def law():
    return sb.SubordinatorLaw.wright_fisher(2.0, 1.0)


@pytest.mark.parametrize("beta", [1.5, 2.0, 3.0])
def test_arbitration_selects_partial_fraction(beta):
    rep = sb.arbitrate_convention(beta, 1.0)
    assert rep.selected == "partial_fraction"
    assert max(rep.gaps["partial_fraction"]) <= 1e-4
    assert min(rep.gaps["paper_pi_dens"]) > 1e-3
    assert rep.separation > 10


def test_levy_khinchine_sum(law):
    for mu in (0.1, 0.5, 1.0, 2.0, 10.0):
        value, gap = sb.lk_consistency(law, mu)
        assert gap <= 1e-10
        assert value == pytest.approx(float(mp_phi(mu, 2.0)), rel=1e-10)


def test_rates_and_weights(law):
    rho = law.rates(5)
    np.testing.assert_allclose(rho, 0.25 * sc.jn_zeros(1, 5) ** 2, rtol=1e-13)
    np.testing.assert_array_equal(law.weights(5), np.ones(5))
    assert law.asymptotic_rate(1000) == pytest.approx(law.rates(1000)[-1], rel=1e-6)


@pytest.mark.parametrize("beta,gamma", [(2.0, 1.0), (1.5, 2.0), (3.0, 0.5)])
def test_cumulants_are_derivatives_of_exponent(beta, gamma):
    k = sb.cumulants(beta, gamma, 4)
    mp.mp.dps = 30
    for n in range(1, 5):
        ref = (-1) ** (n + 1) * mp.diff(lambda m: mp_phi(m, beta, gamma), mp.mpf("0.0"), n, direction=1)
        assert k[n - 1] == pytest.approx(float(ref), rel=1e-9)
    mp.mp.dps = 15


def test_cumulant_values(law):
    np.testing.assert_allclose(sb.cumulants(2.0, 1.0, 4), [0.5, 1 / 6, 0.125, 2 / 15], rtol=1e-12)
    assert sb.slope_at_zero(law.exponent) == pytest.approx(0.5, abs=1e-10)


def test_moments_from_laplace_transform(law):
    t = 1.7
    m = sb.moments(law, t, 4)
    for n in range(1, 5):
        ref = (-1) ** n * mp.diff(lambda u: mp.exp(-t * mp_phi(u, 2.0)), mp.mpf("0.0"), n, direction=1)
        assert m[n] == pytest.approx(float(ref), rel=1e-8)
    assert m[2] - m[1] ** 2 == pytest.approx(t / 6, rel=1e-12)
    assert sb.moments([0.5, 1 / 6], 1.0, 2)[2] == pytest.approx(0.25 + 1 / 6)


def test_jump_density_laplace_transform(law):
    # int (1 - e^{-mu x}) pi(x) dx = Phi(mu)
    mu = 1.3
    f = lambda x: -math.expm1(-mu * x) * sb.jump_density(law, x)
    # x = y^2 removes the x^(-1/2) endpoint behaviour of the integrand
    y0 = 1e-7
    total = si.quad(lambda y: 2 * y * f(y * y), y0, math.sqrt(1e-3), limit=200)[0]
    total += si.quad(f, 1e-3, 60, limit=200)[0]
    # below y0^2 the density is c x^(-3/2) with c = 1/(4 sqrt(pi s)), s = 1/4
    total += mu / math.sqrt(math.pi) * y0
    assert total == pytest.approx(law.exponent(mu), rel=1e-8)


def test_jump_moments(law):
    assert sb.jump_moment(law, 1.0).value == pytest.approx(0.5, rel=1e-4)
    assert sb.jump_moment(law, 2.0).value == pytest.approx(1 / 6, rel=1e-8)
    assert sb.jump_moment(law, 0.4).diverges
    assert sb.jump_moment(law, 0.5).diverges
    j = sb.jump_moment(law, 0.6)
    assert not j.diverges
    # oracle: scipy zeros plus a Hurwitz zeta tail from McMahon's approximation
    z = sc.jn_zeros(1, 4000)
    c = 0.5 - 0.25
    head = np.sum((z / 2) ** -1.2)
    tail = (math.pi / 2) ** -1.2 * float(mp.zeta(1.2, 4001 + c))
    assert j.value == pytest.approx(math.gamma(1.6) * (head + tail), rel=1e-4)


def test_sampled_increments_match_cumulants(law):
    s = sb.sample_increment(law, 1.0, 1e-6, rng=np.random.default_rng(5), size=20_000)
    se = s.std() / math.sqrt(s.size)
    assert abs(s.mean() - 0.5) < 3 * se
    c = s - s.mean()
    se_v = math.sqrt((np.mean(c ** 4) - np.mean(c ** 2) ** 2) / s.size)
    assert abs(s.var() - 1 / 6) < 3 * se_v
    for mu in (0.5, 2.0):
        e = np.exp(-mu * s)
        assert abs(e.mean() - math.exp(-law.exponent(mu))) < 3 * e.std() / math.sqrt(s.size)


def test_sampling_is_reproducible_and_scales(law):
    a = sb.sample_increment(law, 0.5, 1e-5, rng=3, size=100)
    b = sb.sample_increment(law, 0.5, 1e-5, rng=3, size=100)
    np.testing.assert_array_equal(a, b)
    assert np.all(a > 0)
    assert sb.sample_increment(law, 0.0, 1e-5, rng=1) == 0.0
    assert isinstance(sb.sample_increment(law, 1.0, 1e-4, rng=1), float)


def test_errors(law):
    with pytest.raises(DomainError):
        sb.sample_increment(law, 1.0, 1e-14, rng=0, size=2)
    with pytest.raises(DomainError):
        sb.jump_density(law, 0.0)
    with pytest.raises(DomainError):
        sb.jump_moment(law, -1.0)
    with pytest.raises(DomainError):
        sb.lk_consistency(law, 0.0)
