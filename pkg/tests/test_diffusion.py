import math
import warnings

import numpy as np
import pytest
import scipy.stats as ss

from afscale import _kernels as kr
from afscale import analytic, diffusion as df, wf
from afscale.errors import DomainError

SEED = df.path_seeds(11, 0, 1)[0]


def test_uniform_and_normal_streams():
    u = np.empty(50_000)
    kr.fill_uniform(SEED, u)
    assert u.min() > 0 and u.max() < 1
    assert ss.kstest(u, "uniform").pvalue > 1e-3
    z = np.empty(50_000)
    kr.fill_normal(SEED, z)
    assert ss.kstest(z, "norm").pvalue > 1e-3


@pytest.mark.parametrize("a", [0.05, 0.7, 1.0, 3.5])
def test_gamma_stream(a):
    v = np.empty(30_000)
    kr.fill_gamma(SEED, a, v)
    assert ss.kstest(v, ss.loggamma(a).cdf).pvalue > 1e-3


@pytest.mark.parametrize("m", [0.3, 4.0, 9.9, 10.0, 37.0, 500.0])
def test_poisson_stream(m):
    v = np.empty(40_000, dtype=np.int64)
    kr.fill_poisson(SEED, m, v)
    ks = np.arange(int(m + 8 * math.sqrt(m) + 10))
    obs = np.bincount(v, minlength=ks.size)[:ks.size]
    exp = ss.poisson(m).pmf(ks) * v.size
    keep = exp > 20
    obs_k, exp_k = obs[keep], exp[keep]
    chi2 = np.sum((obs_k - exp_k) ** 2 / exp_k)
    assert ss.chi2(keep.sum() - 1).sf(chi2) > 1e-4
    assert abs(v.mean() - m) < 4 * math.sqrt(m / v.size)


@pytest.mark.parametrize("x,half_df", [(0.3, 0.05), (2.0, 1.7), (1e-3, 0.002), (0.0, 0.5)])
def test_square_root_step_is_noncentral_chi_square(x, half_df):
    e, cc = math.exp(-0.4), 0.2
    v = np.empty(30_000)
    kr.fill_cir(SEED, x, e, cc, half_df, v)
    if x == 0.0:
        ref = ss.gamma(half_df, scale=2 * cc)
    else:
        ref = ss.ncx2(2 * half_df, x * e / cc, scale=cc)
    # the floor sends states below X_FLOOR to zero; compare above it
    thr = 1e-12
    p0 = ref.cdf(thr)
    assert abs(np.mean(v <= thr) - p0) < 4 * math.sqrt(p0 * (1 - p0) / v.size) + 1e-3
    hi = v[v > thr]
    assert ss.kstest(hi, lambda t: (ref.cdf(t) - p0) / (1 - p0)).pvalue > 1e-3


def test_path_seeds_are_stable_and_distinct():
    a = df.path_seeds(5, 0, 40)
    b = df.path_seeds(5, 10, 10)
    np.testing.assert_array_equal(a[10:20], b)
    assert len({tuple(r) for r in a}) == 40


@pytest.mark.parametrize("family", ["wf", "feller", "rbm"])
def test_worker_and_chunk_invariance(family):
    m = {"wf": df.DiffusionModel.wright_fisher(0.02, 0.02, 2.0),
         "feller": df.DiffusionModel.feller(50.0, 0.02, 2.0),
         "rbm": df.DiffusionModel.reflected_bm(100.0, 0.3)}[family]
    kw = dict(start="stationary", laplace_pairs=[(1.0, 0.7)])
    a = df.simulate_ensemble(m, 0.2, 4e-4, 23, 9, workers=1, chunk=64, **kw)
    b = df.simulate_ensemble(m, 0.2, 4e-4, 23, 9, workers=4, chunk=5, **kw)
    for name in ("X", "A", "window_min", "X_T", "A_T", "laplace"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_feller_step_is_exact_in_mean():
    n, alpha, beta = 5.0, 0.4, 2.0
    m = df.DiffusionModel.feller(n, alpha, beta)
    ens = df.simulate_ensemble(m, 0.5, 0.25, 20_000, 3, start=0.7)
    theta, kappa = alpha / beta, n * beta
    mean = theta + (0.7 - theta) * math.exp(-kappa * 0.5)
    assert abs(ens.X_T.mean() - mean) < 4 * ens.X_T.std() / math.sqrt(ens.X_T.size)


def test_wright_fisher_keeps_stationary_law():
    m = df.DiffusionModel.wright_fisher(0.05, 0.05, 2.0)
    ens = df.simulate_ensemble(m, 1.0, 1e-3, 4000, 21, start="stationary")
    se = ens.X_T.std() / math.sqrt(ens.X_T.size)
    assert abs(ens.X_T.mean() - m.stationary_mean) < 4 * se
    assert np.all((ens.X >= 0) & (ens.X < 1))
    em = wf.integrated_mean(0.05, 0.05, 2.0)
    assert abs(ens.A_T.mean() - em) < 4 * ens.A_T.std() / math.sqrt(ens.A_T.size)


def test_reflected_bm_is_exact():
    m = df.DiffusionModel.reflected_bm(4.0, 1.5)
    st_ = df.simulate_ensemble(m, 1.0, 0.05, 8000, 2, start="stationary")
    assert ss.kstest(st_.X_T, ss.expon(scale=1 / 1.5).cdf).pvalue > 1e-3
    assert np.all(st_.X >= 0)
    # from zero the law at T does not depend on the step size
    a = df.simulate_ensemble(m, 0.4, 0.1, 8000, 4, start="zero").X_T
    b = df.simulate_ensemble(m, 0.4, 0.001, 8000, 5, start="zero").X_T
    assert ss.ks_2samp(a, b).pvalue > 1e-3
    # oracle: P(X_t <= y) for BM with drift -d, variance v per unit time, reflected at 0:
    # Phi((y + d t)/sqrt(v t)) - exp(-2 d y / v) Phi((d t - y)/sqrt(v t)), here 2 d / v = beta
    t, y = 0.4, 0.5
    sd, shift = math.sqrt(2 * 4.0 * t), 4.0 * 1.5 * t
    cdf = ss.norm.cdf((y + shift) / sd) - math.exp(-1.5 * y) * ss.norm.cdf((shift - y) / sd)
    assert abs(np.mean(b <= y) - cdf) < 4 * math.sqrt(cdf * (1 - cdf) / b.size)


def test_feller_laplace_matches_prelimit_exponent():
    m = df.DiffusionModel.feller(10.0, 0.3, 2.0)
    ens = df.simulate_ensemble(m, 16.0, 2e-3, 3000, 8, start="zero", laplace_pairs=[(1.0, 1.0)])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ph, se = df.phi_hat(ens, 1.0, 1.0)
    assert abs(ph - analytic.feller_phi_n(10.0, 0.3, 2.0, 1.0, 1.0)) < 4 * se


def test_estimators_and_warnings():
    m = df.DiffusionModel.wright_fisher(0.02, 0.02, 2.0)
    ens = df.simulate_ensemble(m, 1.0, 4e-4, 200, 1, start="stationary", laplace_pairs=[(1.0, 1.0)],
                               record_dt=4e-3)
    with pytest.warns(df.TruncationWarning):
        r, se = df.empirical_laplace(ens, 1.0, 0.0)
    assert r == pytest.approx(1 - math.exp(-1.0)) and se == 0.0
    with pytest.warns(RuntimeWarning):
        grid = df.empirical_laplace(ens, 1.0, 0.5)
    assert 0 < grid[0] < 1
    p, se = df.hitting_time_tail(ens, 0.5, 0.1)
    assert 0 <= p <= 1
    with pytest.raises(DomainError):
        df.hitting_time_tail(ens, 0.5, 0.01)
    mods = df.modulus_bound(ens, [0.04, 0.2, 0.6])
    assert mods[0][1] < mods[1][1] < mods[2][1]
    rep = df.condition_report(ens, [(0.2, 0.1)], [0.1])
    kinds = [r[0] for r in rep.rows()]
    assert kinds == ["hitting_tail", "modulus", "resolvent"]
    ft, fse = df.functional_laplace(ens, 1.0)
    assert ft > 0 and fse > 0


def test_stationary_sampler():
    rng = np.random.default_rng(0)
    m = df.DiffusionModel.wright_fisher(0.1, 0.3, 2.0)
    assert ss.kstest(df.stationary_sample(m, rng, 20_000), ss.beta(0.3, 2.0).cdf).pvalue > 1e-3
    f = df.DiffusionModel.feller(3.0, 0.5, 2.0)
    assert ss.kstest(df.stationary_sample(f, rng, 20_000), ss.gamma(0.5, scale=0.5).cdf).pvalue > 1e-3
    tiny = df.stationary_sample(df.DiffusionModel.wright_fisher(1e-4, 1e-4, 2.0), rng, 1000)
    assert np.all(np.isfinite(tiny)) and np.all(tiny >= 0)


def test_resolvent_sandwich():
    m = df.DiffusionModel.wright_fisher(0.05, 0.05, 2.0)
    pts = df.resolvent_sandwich_check(m, 1.0, 1.0, [0.0, 0.3], paths=600, T=12.0, dt=1e-3, master_seed=4)
    assert all(p.holds(3.0) for p in pts)
    assert pts[1].envelope > 0 and pts[0].envelope == pytest.approx(0.0, abs=1e-14)


def test_euler_scheme_runs():
    m = df.DiffusionModel.wright_fisher(0.05, 0.05, 2.0)
    ens = df.simulate_ensemble(m, 0.5, 1e-3, 50, 2, scheme="euler", start="stationary")
    assert ens.scheme == "euler" and ens.failed.size == 0
    assert np.all((ens.X >= 0) & (ens.X < 1))


def test_validation():
    m = df.DiffusionModel.wright_fisher(0.01, 0.01, 2.0)
    with pytest.raises(DomainError):
        df.simulate_ensemble(m, 1.0, 1e-3, 10, 0)
    with pytest.raises(DomainError):
        df.simulate_ensemble(m, 1.00001, 2e-4, 10, 0)
    with pytest.raises(DomainError):
        df.simulate_ensemble(m, 1.0, 2e-4, 10, 0, start=1.5)
    with pytest.raises(DomainError):
        df.simulate_ensemble(m, 1.0, 2e-4, 10, 0, scheme="exact")
    with pytest.raises(DomainError):
        df.simulate_ensemble(m, 1.0, 2e-4, 10, 0, record_dt=2e-4)
    with pytest.raises(DomainError):
        df.DiffusionModel.wright_fisher(0.01, 0.01, 0.9)
    with pytest.raises(DomainError):
        df.DiffusionModel.feller(-1.0, 0.1, 1.0)
