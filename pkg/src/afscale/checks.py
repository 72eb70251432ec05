"""Acceptance checks shared by ``afscale verify`` and the test suite.

Each check returns a :class:`CheckResult` with the measured quantities; the
``desk`` profile runs the stated problem sizes, ``smoke`` shrinks the Monte
Carlo work to seconds while keeping the tolerances.
"""

from __future__ import annotations

import math
import time
import traceback
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import analytic, diffusion, specfun, spiking, subordinator, wf
from .errors import DomainError

__all__ = ["CheckResult", "PROFILES", "CRITERIA", "GROUPS", "run_checks", "run_criterion"]

PROFILES = {
    "desk": {
        "mc_tau": 1e-3, "mc_paths": 10_000, "mc_dt": 2e-5, "mc_T": 6.0,
        "stat_paths": 10_000,
        "inc_samples": 100_000,
        "spike_samples": 1_000_000,
        "det_paths": 24, "det_T": 0.2,
        "zero_count": 2000,
    },
    "smoke": {
        "mc_tau": 1e-2, "mc_paths": 600, "mc_dt": 2e-4, "mc_T": 6.0,
        "stat_paths": 1500,
        "inc_samples": 20_000,
        "spike_samples": 200_000,
        "det_paths": 10, "det_T": 0.05,
        "zero_count": 200,
    },
}


@dataclass
class CheckResult:
    criterion: str
    name: str
    passed: bool
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.criterion} {self.name} ({self.seconds:.1f} s)"

    def as_dict(self) -> dict:
        return {"criterion": self.criterion, "name": self.name, "passed": bool(self.passed),
                "seconds": self.seconds, "detail": _jsonable(self.detail)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _se_var(v: np.ndarray) -> tuple[float, float]:
    """Sample variance and its standard error from the fourth central moment."""
    c = v - v.mean()
    s2 = float(np.mean(c * c))
    m4 = float(np.mean(c ** 4))
    return float(np.var(v, ddof=1)), math.sqrt(max(m4 - s2 * s2, 0.0) / v.size)


# -- criteria -----------------------------------------------------------------

def c1_exponent_identity(prof, seed):
    t0 = time.perf_counter()
    worst = 0.0
    for beta in (1.5, 2.0, 3.0):
        for mu in (0.25, 0.5, 1.0, 2.0, 4.0):
            worst = max(worst, abs(wf.wf_phi_cf(mu, beta, 40) - wf.wf_phi_limit(mu, beta, 1.0)))
    el = time.perf_counter() - t0
    return worst <= 1e-10 and el < 1.0, {"max_abs_gap": worst, "runtime_s": el}


def c2_prelimit_convergence(prof, seed):
    t0 = time.perf_counter()
    rows = {}
    ok = True
    for mu in (0.5, 1.0, 2.0):
        lim = wf.wf_phi_limit(mu, 2.0, 1.0)
        gaps = [abs(wf.wf_phi_n(wf.WfScaling.along(tau, 1.0, 2.0, 1.0), mu) - lim)
                for tau in (1e-2, 1e-3, 1e-4)]
        dec = gaps[0] > gaps[1] > gaps[2]
        ok &= dec and gaps[2] <= 0.01 * lim
        rows[str(mu)] = {"phi": lim, "gaps": gaps, "decreasing": dec}
    el = time.perf_counter() - t0
    return ok and el < 60.0, {"gaps": rows, "runtime_s": el}


def _wf_mc_model(prof):
    tau = prof["mc_tau"]
    return diffusion.DiffusionModel.wright_fisher(tau, tau, 2.0)


def c3_monte_carlo_laplace(prof, seed, workers=1):
    t0 = time.perf_counter()
    model = _wf_mc_model(prof)
    mus = (0.5, 1.0)
    ens = diffusion.simulate_ensemble(model, prof["mc_T"], prof["mc_dt"], prof["mc_paths"], seed,
                                      start="zero", laplace_pairs=[(1.0, m) for m in mus],
                                      workers=workers)
    rows = {}
    ok = ens.failed.size == 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", diffusion.TruncationWarning)
        for mu in mus:
            ph, se = diffusion.phi_hat(ens, 1.0, mu)
            target = wf.wf_phi_limit(mu, 2.0, 1.0)
            tol = max(3 * se, 0.05 * target)
            rows[str(mu)] = {"phi_hat": ph, "se": se, "phi": target, "allowed": tol}
            ok &= abs(ph - target) <= tol
    el = time.perf_counter() - t0
    limit = 900.0 if prof is PROFILES["desk"] else math.inf
    return ok and el <= limit, {"estimates": rows, "paths": ens.paths, "runtime_s": el}


def c4_stationary_moments(prof, seed, workers=1):
    t0 = time.perf_counter()
    model = _wf_mc_model(prof)
    ens = diffusion.simulate_ensemble(model, 1.0, prof["mc_dt"], prof["stat_paths"], seed + 1,
                                      start="stationary", workers=workers)
    a = ens.A_T[ens.ok]
    m = float(a.mean())
    se_m = float(a.std(ddof=1) / math.sqrt(a.size))
    v, se_v = _se_var(a)
    em = wf.integrated_mean(model.tau, model.alpha, model.beta)
    ev = wf.integrated_variance(model.tau, model.alpha, model.beta)
    ok = abs(m - em) <= 3 * se_m and abs(v - ev) <= 3 * se_v
    return ok, {"mean": m, "mean_se": se_m, "mean_exact": em, "var": v, "var_se": se_v,
                "var_exact": ev, "runtime_s": time.perf_counter() - t0}


def c5_lk_arbitration(prof, seed):
    gaps = {}
    for conv in subordinator.CONVENTIONS:
        law = subordinator.SubordinatorLaw(subordinator.wf_limit_exponent(2.0, 1.0), 2.0, 1.0, conv, 10_000)
        gaps[conv] = [subordinator.lk_consistency(law, mu)[1] for mu in (0.5, 1.0, 2.0)]
    passing = [c for c, g in gaps.items() if max(g) <= 1e-4]
    ok = len(passing) == 1 and all(min(g) > 1e-3 for c, g in gaps.items() if c not in passing)
    return ok, {"gaps": gaps, "selected": passing[0] if len(passing) == 1 else None}


def c6_cumulant_anchor(prof, seed):
    law = subordinator.SubordinatorLaw.wright_fisher(2.0, 1.0)
    kappa = subordinator.cumulants(2.0, 1.0, 2)
    slope = subordinator.slope_at_zero(law.exponent)
    s = subordinator.sample_increment(law, 1.0, 1e-6, rng=np.random.default_rng(seed),
                                      size=prof["inc_samples"])
    m = float(s.mean())
    se_m = float(s.std(ddof=1) / math.sqrt(s.size))
    v, se_v = _se_var(s)
    j04 = subordinator.jump_moment(law, 0.4)
    j06 = subordinator.jump_moment(law, 0.6)
    ok = (abs(kappa[0] - slope) <= 1e-8 and abs(m - kappa[0]) <= 3 * se_m
          and abs(v - kappa[1]) <= 3 * se_v and j04.diverges and not j06.diverges)
    return ok, {"kappa": kappa, "slope": slope, "sample_mean": m, "mean_se": se_m,
                "sample_var": v, "var_se": se_v, "r0.4_diverges": j04.diverges,
                "r0.6_value": j06.value, "r0.6_diverges": j06.diverges}


def c7_feller(prof, seed):
    gaps = {}
    ok = True
    for mu in (0.5, 1.0, 2.0):
        n = 1e4
        val = analytic.feller_phi_n(n, 1.0 / n, 2.0, 1.0, mu)
        lim = analytic.feller_phi_limit(mu, 2.0, 1.0)
        gaps[str(mu)] = abs(val - lim) / lim
        ok &= gaps[str(mu)] <= 0.01
    fit = analytic.ig_parameter_fit(2.0, 1.0)
    ok &= fit.max_abs_gap <= 1e-10 and abs(fit.mean - 0.5) <= 1e-8
    return ok, {"relative_gaps": gaps, "ig_mean": fit.mean, "ig_shape": fit.shape,
                "ig_shape_stated": 1.0 ** 2 / 2.0, "ig_max_abs_gap": fit.max_abs_gap}


def c8_rbm(prof, seed):
    n = 1e6
    vals = {}
    ok = True
    for mu in (0.5, 1.0, 2.0):
        v = analytic.rbm_phi_n(n, n ** -0.25, 1.0, mu)
        vals[str(mu)] = v
        ok &= abs(v - mu) <= 0.02 * mu
    lap = analytic.airy_laplace_ratio(400.0, 1.0, 20.0, 1.0)
    ok &= abs(lap - 0.25) <= 0.01 * 0.25
    return ok, {"phi_n": vals, "airy_ratio": lap}


def c9_spiking(prof, seed):
    stats = spiking.compound_poisson_limit_stats(3.0, 1.0, [1e-2, 1e-3], 10, prof["spike_samples"], seed)
    last = stats[-1]
    target = 0.25
    ok = (abs(last.rho.value - target) <= 3 * last.rho.se
          and abs(last.identity.value - target) <= 3 * last.identity.se)
    return ok, {"eps": [s.eps for s in stats], "rho": [s.rho.value for s in stats],
                "rho_se": [s.rho.se for s in stats], "identity": [s.identity.value for s in stats],
                "identity_se": [s.identity.se for s in stats], "rate": [s.rate for s in stats],
                "rate_exact": [s.rate_exact for s in stats]}


# -- property suites (criterion 10) --------------------------------------------

def p_bessel_recurrence(prof, seed):
    worst = 0.0
    for nu in (1.0, 1.5, 2.5, 4.0):
        for x in np.linspace(0.1, 120.0, 97):
            lhs = specfun.bessel_i(nu - 1.0, x) - specfun.bessel_i(nu + 1.0, x)
            rhs = 2.0 * nu / x * specfun.bessel_i(nu, x)
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return worst <= 1e-9, {"max_rel_residual": worst}


def p_zero_residuals(prof, seed):
    worst = 0.0
    for nu in (0.0, 0.5, 1.0, 2.0):
        tab = specfun.bessel_j_zeros(nu, prof["zero_count"])
        worst = max(worst, max(abs(specfun.bessel_j(nu, z)) for z in tab.zeros))
    return worst <= 1e-10, {"max_abs_residual": worst}


def p_airy_sandwich(prof, seed):
    ok = True
    for y in np.linspace(2.05, 60.0, 200):
        r = 1.5 * y ** -1.5
        qe = y ** -0.25 * math.exp(-2.0 / 3.0 * y ** 1.5) / math.sqrt(4.0 * math.pi)
        ai = specfun.airy_ai(y)
        ok &= (1.0 - r) * qe <= ai <= qe
    return ok, {}


def p_u_mu(prof, seed):
    grid = np.linspace(0.0, 1.0, 201)
    detail = {}
    lim = wf.wf_limit_coefficients(1.0, 2.0)
    vals = wf.u_mu(lim, grid)
    ok = bool(np.all(np.diff(vals) < 0))
    p = wf.WfScaling(1e-2, 1e-2, 2.0, 1.0)
    sol = wf.WfFundamentalSolution(p, 1.0)
    pre = sol(grid)
    ok &= bool(np.all(np.diff(pre) < 0))
    # boundary derivative: series term-by-term and Richardson finite difference
    seq = wf.wf_coefficients(p, 1.0)
    expected = -(p.lam * p.tau + 1.0) / p.beta
    d_series = float(wf.u_mu_derivative(seq, 1.0))
    h = 1e-5
    f = lambda hh: (1.0 - float(np.polynomial.polynomial.polyval(hh, seq.coefficients))) / hh
    d_fd = (4.0 * f(h / 2) - f(h)) / 3.0
    detail.update(series_derivative=d_series, fd_derivative=d_fd, expected=expected)
    ok &= abs(d_series - expected) <= 1e-8 and abs(d_fd - expected) <= 1e-6
    return ok, detail


def p_coefficient_decay(prof, seed):
    p = wf.WfScaling(1e-3, 1e-3, 2.0, 1.0)
    rep = wf.coefficient_decay_check(wf.wf_coefficients(p, 4.0, 200), 0.5)
    lim = wf.coefficient_decay_check(wf.wf_limit_coefficients(1.0, 2.0), 0.5)
    ok = rep.passed and lim.passed
    return ok, {"constant_K200": rep.constant, "constant_K400": rep.constant_doubled,
                "relative_change": rep.relative_change, "limit_constant": lim.constant}


def p_worker_determinism(prof, seed):
    model = diffusion.DiffusionModel.wright_fisher(1e-2, 1e-2, 2.0)
    kw = dict(start="stationary", laplace_pairs=[(1.0, 1.0)])
    a = diffusion.simulate_ensemble(model, prof["det_T"], 2e-4, prof["det_paths"], seed,
                                    workers=1, chunk=64, **kw)
    b = diffusion.simulate_ensemble(model, prof["det_T"], 2e-4, prof["det_paths"], seed,
                                    workers=3, chunk=3, **kw)
    same = (np.array_equal(a.A, b.A) and np.array_equal(a.X, b.X)
            and np.array_equal(a.laplace, b.laplace) and np.array_equal(a.A_T, b.A_T))
    return same, {"paths": a.paths}


# -- registry ------------------------------------------------------------------

CRITERIA: dict[str, tuple[str, Callable]] = {
    "1": ("exponent-identity", c1_exponent_identity),
    "2": ("wf-prelimit-convergence", c2_prelimit_convergence),
    "3": ("wf-monte-carlo-laplace", c3_monte_carlo_laplace),
    "4": ("wf-stationary-moments", c4_stationary_moments),
    "5": ("levy-khinchine-arbitration", c5_lk_arbitration),
    "6": ("cumulant-anchor", c6_cumulant_anchor),
    "7": ("feller", c7_feller),
    "8": ("reflected-bm", c8_rbm),
    "9": ("spiking-correlation", c9_spiking),
    "10a": ("bessel-recurrence", p_bessel_recurrence),
    "10b": ("bessel-zero-residuals", p_zero_residuals),
    "10c": ("airy-tail-sandwich", p_airy_sandwich),
    "10d": ("u-mu-monotone-boundary-derivative", p_u_mu),
    "10e": ("coefficient-decay-stability", p_coefficient_decay),
    "10f": ("worker-count-determinism", p_worker_determinism),
}

GROUPS = {
    "specfun": ["10a", "10b", "10c"],
    "wf": ["1", "2", "3", "4", "10d", "10e", "10f"],
    "subordinator": ["5", "6"],
    "feller": ["7"],
    "rbm": ["8"],
    "spiking": ["9"],
    "all": list(CRITERIA),
}

_MC = {"3", "4", "10f"}


def run_criterion(key: str, profile: str = "desk", seed: int = 20240917, workers: int = 1) -> CheckResult:
    if profile not in PROFILES:
        raise DomainError(f"unknown profile {profile!r}")
    name, fn = CRITERIA[key]
    prof = PROFILES[profile]
    t0 = time.perf_counter()
    try:
        if key in ("3", "4"):
            ok, detail = fn(prof, seed, workers=workers)
        else:
            ok, detail = fn(prof, seed)
    except Exception as exc:  # a crashing check is a failing check
        ok, detail = False, {"error": f"{type(exc).__name__}: {exc}",
                             "traceback": traceback.format_exc(limit=3)}
    return CheckResult(key, name, bool(ok), time.perf_counter() - t0, detail)


def run_checks(group: str = "all", profile: str = "desk", seed: int = 20240917, workers: int = 1,
               echo: Callable[[str], None] | None = None) -> list[CheckResult]:
    if group not in GROUPS:
        raise DomainError(f"unknown verification group {group!r}")
    out = []
    for key in GROUPS[group]:
        res = run_criterion(key, profile, seed, workers)
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out
