"""Monte Carlo ensembles of the prelimit diffusions and their additive functionals.

Three families are supported, all reflected at 0:

* ``wright_fisher(tau, alpha, beta)`` on ``[0, 1)``, ``A = (1/tau) int X``;
* ``feller(n, alpha, beta)`` on ``[0, inf)``, ``A = n int X``;
* ``reflected_bm(n, beta_n)`` on ``[0, inf)``, ``A = beta_n int X``.

Paths are simulated by compiled kernels in chunks, optionally on several
threads. Each path draws from its own stream seeded by
``SeedSequence(master_seed, spawn_key=(i,))``, so an ensemble is bit-identical
for any worker count and chunk size.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import DomainError
from .wf import WfFundamentalSolution, WfScaling, wf_phi_n

__all__ = [
    "DiffusionModel",
    "PathEnsemble",
    "ConditionReport",
    "SandwichPoint",
    "TruncationWarning",
    "path_seeds",
    "simulate_ensemble",
    "stationary_sample",
    "empirical_laplace",
    "phi_hat",
    "functional_laplace",
    "hitting_time_tail",
    "modulus_bound",
    "condition_report",
    "resolvent_sandwich_check",
]

FAMILIES = ("wright_fisher", "feller", "reflected_bm")
SCHEMES = {"wright_fisher": ("cir", "euler"), "feller": ("cir", "euler"),
           "reflected_bm": ("exact",)}
HIT_FRACTION = 1e-3
MAX_RECORDS = 4000


class TruncationWarning(RuntimeWarning):
    """The finite horizon cuts a non-negligible part of a Laplace integral."""


@dataclass(frozen=True)
class DiffusionModel:
    family: str
    alpha: float = 0.0
    beta: float = 0.0
    tau: float = 0.0
    n: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}")
        names = {"wright_fisher": ("tau", "alpha", "beta"),
                 "feller": ("n", "alpha", "beta"),
                 "reflected_bm": ("n", "beta")}[self.family]
        for k in names:
            v = getattr(self, k)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{k} must be positive for {self.family}, got {v!r}")
        if self.family == "wright_fisher" and not self.beta > 1:
            raise DomainError(f"Wright-Fisher needs beta > 1, got {self.beta!r}")

    @classmethod
    def wright_fisher(cls, tau: float, alpha: float, beta: float) -> "DiffusionModel":
        return cls("wright_fisher", alpha=alpha, beta=beta, tau=tau)

    @classmethod
    def feller(cls, n: float, alpha: float, beta: float) -> "DiffusionModel":
        return cls("feller", alpha=alpha, beta=beta, n=n)

    @classmethod
    def reflected_bm(cls, n: float, beta_n: float) -> "DiffusionModel":
        return cls("reflected_bm", beta=beta_n, n=n)

    @property
    def upper(self) -> float:
        return 1.0 if self.family == "wright_fisher" else math.inf

    @property
    def functional_scale(self) -> float:
        return {"wright_fisher": 1.0 / self.tau if self.tau else 0.0,
                "feller": self.n, "reflected_bm": self.beta}[self.family]

    @property
    def stationary_mean(self) -> float:
        """Mean of ``X`` under the stationary law."""
        if self.family == "wright_fisher":
            return self.alpha / (self.alpha + self.beta)
        if self.family == "feller":
            return self.alpha / self.beta
        return 1.0 / self.beta

    @property
    def functional_rate(self) -> float:
        """``E[A(1)]`` under the stationary law."""
        return self.functional_scale * self.stationary_mean

    @property
    def hit_threshold(self) -> float:
        return HIT_FRACTION * self.stationary_mean

    def default_scheme(self) -> str:
        return SCHEMES[self.family][0]

    def as_dict(self) -> dict:
        d = {"family": self.family, "alpha": self.alpha, "beta": self.beta}
        if self.family == "wright_fisher":
            d["tau"] = self.tau
        else:
            d["n"] = self.n
        if self.family == "reflected_bm":
            del d["alpha"]
        return d


@dataclass
class PathEnsemble:
    """Simulated paths with their recorded states and functionals.

    ``X``, ``A`` and ``window_min`` have one row per path and one column per
    record time in ``times``; ``window_min[:, j]`` is the smallest grid state in
    ``(times[j-1], times[j]]``. ``laplace[:, p]`` holds the per-path trapezoid
    integral of ``exp(-lam t - mu A(t))`` over ``[0, T]`` for
    ``laplace_pairs[p] = (lam, mu)``.
    """

    model: DiffusionModel
    T: float
    dt: float
    paths: int
    master_seed: int
    start: object
    scheme: str
    times: np.ndarray
    X: np.ndarray
    A: np.ndarray
    window_min: np.ndarray
    X_T: np.ndarray
    A_T: np.ndarray
    laplace_pairs: np.ndarray
    laplace: np.ndarray
    status: np.ndarray

    @property
    def record_dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else self.T

    @property
    def failed(self) -> np.ndarray:
        return np.flatnonzero(self.status != _kernels.OK)

    @property
    def ok(self) -> np.ndarray:
        return self.status == _kernels.OK

    def meta(self) -> dict:
        return {"model": self.model.as_dict(), "T": self.T, "dt": self.dt, "paths": self.paths,
                "master_seed": self.master_seed, "start": self.start, "scheme": self.scheme,
                "record_dt": self.record_dt, "failed_paths": self.failed.tolist(),
                "laplace_pairs": self.laplace_pairs.tolist()}


def path_seeds(master_seed: int, first: int, count: int) -> np.ndarray:
    """Seed words for paths ``first .. first + count - 1``."""
    out = np.empty((count, 4), dtype=np.uint64)
    for r in range(count):
        ss = np.random.SeedSequence(master_seed, spawn_key=(first + r,))
        out[r] = ss.generate_state(4, dtype=np.uint64)
    # xoshiro must not start from the all-zero state
    zero = ~out.any(axis=1)
    out[zero, 0] = 1
    return out


def _steps(T: float, dt: float) -> int:
    n = T / dt
    k = int(round(n))
    if abs(n - k) > 1e-9 * max(1.0, n):
        raise DomainError(f"T={T!r} is not an integer multiple of dt={dt!r}")
    return k


def simulate_ensemble(model: DiffusionModel, T: float, dt: float, paths: int, master_seed: int,
                      start="zero", laplace_pairs: Sequence = (), record_dt: Optional[float] = None,
                      scheme: Optional[str] = None, workers: int = 1,
                      chunk: int = 64) -> PathEnsemble:
    """Simulate ``paths`` independent trajectories on ``[0, T]``.

    Parameters
    ----------
    start : {"zero", "stationary"} or float
        Initial law: the point mass at 0, the stationary law, or a point.
    laplace_pairs : sequence of (lam, mu)
        Laplace integrals accumulated on the full step grid.
    record_dt : float, optional
        Spacing of stored states; a multiple of ``dt``. Defaults to the
        coarsest spacing giving at most 200 records.
    scheme : str, optional
        ``"cir"`` (default) or ``"euler"`` for Wright-Fisher and Feller,
        ``"exact"`` for reflected Brownian motion.
    """
    if paths < 1:
        raise DomainError("paths must be >= 1")
    if not (dt > 0 and T >= 0):
        raise DomainError("need dt > 0 and T >= 0")
    if model.family == "wright_fisher" and dt > model.tau / 50 * (1 + 1e-9):
        raise DomainError(f"dt={dt!r} must not exceed tau/50={model.tau / 50!r}")
    scheme = scheme or model.default_scheme()
    if scheme not in SCHEMES[model.family]:
        raise DomainError(f"scheme {scheme!r} not available for {model.family}")
    nsteps = _steps(T, dt)
    if record_dt is None:
        rec_every = max(1, -(-nsteps // 200))
    else:
        rec_every = max(1, int(round(record_dt / dt)))
        if abs(rec_every * dt - record_dt) > 1e-9 * record_dt:
            raise DomainError("record_dt must be a multiple of dt")
    nrec = nsteps // rec_every if nsteps else 0
    if nrec > MAX_RECORDS:
        raise DomainError(f"{nrec} records per path exceed the limit {MAX_RECORDS}")

    stationary = start == "stationary"
    if stationary:
        x0 = np.zeros(paths)
    elif start == "zero":
        x0 = np.zeros(paths)
    else:
        x = float(start)
        if not 0 <= x < model.upper:
            raise DomainError(f"start {x!r} outside the state space")
        x0 = np.full(paths, x)
    pairs = np.asarray(laplace_pairs, dtype=float).reshape(-1, 2)
    if np.any(pairs[:, 0] <= 0) or np.any(pairs[:, 1] < 0):
        raise DomainError("Laplace pairs need lam > 0 and mu >= 0")
    lam = np.ascontiguousarray(pairs[:, 0])
    mu = np.ascontiguousarray(pairs[:, 1])

    out_x = np.empty(paths)
    out_a = np.empty(paths)
    out_lap = np.zeros((paths, pairs.shape[0]))
    rec_x = np.empty((paths, nrec + 1))
    rec_a = np.empty((paths, nrec + 1))
    rec_min = np.empty((paths, nrec + 1))
    status = np.zeros(paths, dtype=np.int64)

    if model.family == "wright_fisher":
        ab = model.alpha + model.beta
        coeffs = (True, ab / model.tau, model.alpha / ab, 2.0 / model.tau, 1.0 / model.tau)
    elif model.family == "feller":
        coeffs = (False, model.n * model.beta, model.alpha / model.beta, 2.0 * model.n, model.n)
    sch = 0 if scheme in ("cir", "exact") else 1

    def run(lo: int, hi: int):
        seeds = path_seeds(master_seed, lo, hi - lo)
        sl = slice(lo, hi)
        if model.family == "reflected_bm":
            _kernels.reflected_bm_paths(seeds, x0[sl], stationary, model.n, model.beta, dt, nsteps,
                                        rec_every, lam, mu, out_x[sl], out_a[sl], out_lap[sl],
                                        rec_x[sl], rec_a[sl], rec_min[sl], status[sl])
        else:
            wf, kappa, theta, sigma2, scale = coeffs
            _kernels.sqrt_diffusion_paths(seeds, x0[sl], stationary, wf, kappa, theta, sigma2, scale,
                                          dt, nsteps, rec_every, sch, lam, mu, out_x[sl], out_a[sl],
                                          out_lap[sl], rec_x[sl], rec_a[sl], rec_min[sl], status[sl])

    bounds = [(lo, min(lo + chunk, paths)) for lo in range(0, paths, chunk)]
    if workers <= 1 or len(bounds) == 1:
        for lo, hi in bounds:
            run(lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda b: run(*b), bounds))

    times = np.arange(nrec + 1) * (rec_every * dt)
    ens = PathEnsemble(model, float(T), float(dt), int(paths), int(master_seed),
                       start, scheme, times, rec_x, rec_a, rec_min, out_x, out_a, pairs, out_lap, status)
    if ens.failed.size:
        warnings.warn(f"{ens.failed.size} paths aborted on non-finite states", RuntimeWarning)
    return ens


def stationary_sample(model: DiffusionModel, rng=None, size: Optional[int] = None):
    """Draws from the stationary law: Beta, Gamma or Exponential.

    Gamma variates with shape ``a < 1`` are produced in log space as
    ``log G(1 + a) + log(U) / a``, so shapes down to ``1e-4`` and below keep
    their mass near 0 without underflow artifacts in the Beta ratio.
    """
    rng = np.random.default_rng(rng)
    n = 1 if size is None else int(size)

    def log_gamma(a):
        if a >= 1:
            return np.log(rng.gamma(a, size=n))
        return np.log(rng.gamma(a + 1.0, size=n)) + np.log(rng.random(n)) / a

    if model.family == "wright_fisher":
        d = log_gamma(model.beta) - log_gamma(model.alpha)
        with np.errstate(over="ignore"):
            out = np.where(d > 700, np.exp(-np.minimum(d, 1e300)), 1.0 / (1.0 + np.exp(np.minimum(d, 700))))
    elif model.family == "feller":
        out = np.exp(log_gamma(model.alpha)) / model.beta
    else:
        out = rng.exponential(1.0 / model.beta, size=n)
    return float(out[0]) if size is None else out


def _mean_se(v: np.ndarray) -> tuple[float, float]:
    v = np.asarray(v, dtype=float)
    n = v.size
    m = float(np.sum(v) / n)
    se = float(np.std(v, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return m, se


def empirical_laplace(ens: PathEnsemble, lam: float, mu: float) -> tuple[float, float]:
    """``E[int_0^T exp(-lam t - mu A(t)) dt]`` and its standard error over paths."""
    if not lam > 0 or mu < 0:
        raise DomainError("need lam > 0 and mu >= 0")
    if math.exp(-lam * ens.T) >= 1e-6:
        warnings.warn(f"exp(-lam T) = {math.exp(-lam * ens.T):.2g}: horizon truncates the resolvent",
                      TruncationWarning, stacklevel=2)
    if mu == 0:
        return -math.expm1(-lam * ens.T) / lam, 0.0
    ok = ens.ok
    hit = np.flatnonzero((ens.laplace_pairs[:, 0] == lam) & (ens.laplace_pairs[:, 1] == mu))
    if hit.size:
        vals = ens.laplace[ok, hit[0]]
    else:
        warnings.warn("pair not accumulated during simulation; using the record grid", RuntimeWarning,
                      stacklevel=2)
        f = np.exp(-lam * ens.times[None, :] - mu * ens.A[ok])
        h = np.diff(ens.times)
        vals = 0.5 * ((f[:, 1:] + f[:, :-1]) * h).sum(axis=1)
    return _mean_se(vals)


def phi_hat(ens: PathEnsemble, lam: float, mu: float) -> tuple[float, float]:
    """``1/R - lam`` from the empirical resolvent, with a delta-method standard error."""
    r, se = empirical_laplace(ens, lam, mu)
    return 1.0 / r - lam, se / (r * r)


def functional_laplace(ens: PathEnsemble, mu: float, t: Optional[float] = None) -> tuple[float, float]:
    """``-log E[exp(-mu A(t))] / t`` with a delta-method standard error."""
    t = ens.T if t is None else t
    if t == ens.T:
        a = ens.A_T[ens.ok]
    else:
        j = int(round(t / ens.record_dt))
        if abs(j * ens.record_dt - t) > 1e-9 * max(t, 1.0):
            raise DomainError("t must lie on the record grid")
        a = ens.A[ens.ok, j]
    m, se = _mean_se(np.exp(-mu * a))
    return -math.log(m) / t, se / (m * t)


def hitting_time_tail(ens: PathEnsemble, t: float, eps: float,
                      threshold: Optional[float] = None) -> tuple[float, float]:
    """Fraction of paths that stay above the visit threshold throughout ``[t, t + eps]``.

    A path counts as visiting 0 when a grid state in the window is at most
    ``threshold`` (default: ``1e-3`` times the stationary mean of ``X``);
    reflections detected inside a step of the exact reflected-BM scheme count
    as visits.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    if ens.record_dt > eps / 10 * (1 + 1e-9):
        raise DomainError(f"record spacing {ens.record_dt:g} is coarser than eps/10")
    if t + eps > ens.T * (1 + 1e-12):
        raise DomainError("window extends beyond the horizon")
    thr = ens.model.hit_threshold if threshold is None else threshold
    tol = 1e-9 * ens.record_dt
    j0 = int(np.searchsorted(ens.times, t - tol))
    j1 = int(np.searchsorted(ens.times, t + eps + tol, side="right")) - 1
    cols = ens.window_min[ens.ok, j0 + 1:j1 + 1]
    at_start = ens.X[ens.ok, j0] <= thr
    visited = at_start | np.any(cols <= thr, axis=1)
    p = float(np.mean(~visited))
    se = math.sqrt(max(p * (1 - p), 1.0 / visited.size) / visited.size)
    return p, se


def modulus_bound(ens: PathEnsemble, deltas) -> list[tuple[float, float, float]]:
    """``(delta, a_hat, se)`` with ``a_hat`` the largest mean increment of ``A`` over ``delta``."""
    out = []
    A = ens.A[ens.ok]
    for d in np.atleast_1d(deltas):
        k = int(round(float(d) / ens.record_dt))
        if k == 0:
            out.append((float(d), 0.0, 0.0))
            continue
        if k >= A.shape[1]:
            raise DomainError(f"delta {d!r} exceeds the recorded horizon")
        inc = A[:, k:] - A[:, :-k]
        means = inc.mean(axis=0)
        j = int(np.argmax(means))
        m, se = _mean_se(inc[:, j])
        out.append((k * ens.record_dt, m, se))
    return out


@dataclass
class ConditionReport:
    hitting: list = field(default_factory=list)       # (t, eps, p_hat, se)
    modulus: list = field(default_factory=list)       # (delta, a_hat, se)
    resolvent: list = field(default_factory=list)     # (lam, mu, R_hat, se)

    def rows(self):
        for t, e, p, se in self.hitting:
            yield ("hitting_tail", t, e, p, se)
        for d, a, se in self.modulus:
            yield ("modulus", d, "", a, se)
        for lam, mu, r, se in self.resolvent:
            yield ("resolvent", lam, mu, r, se)


def condition_report(ens: PathEnsemble, hitting=(), deltas=()) -> ConditionReport:
    rep = ConditionReport()
    for t, e in hitting:
        p, se = hitting_time_tail(ens, t, e)
        rep.hitting.append((t, e, p, se))
    rep.modulus = modulus_bound(ens, deltas) if len(deltas) else []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        for lam, mu in ens.laplace_pairs:
            r, se = empirical_laplace(ens, float(lam), float(mu))
            rep.resolvent.append((float(lam), float(mu), r, se))
    return rep


@dataclass(frozen=True)
class SandwichPoint:
    x: float
    r_hat: float
    se: float
    middle: float
    envelope: float

    @property
    def gap(self) -> float:
        return self.r_hat - self.middle

    def holds(self, z: float = 3.0) -> bool:
        return -z * self.se <= self.gap <= self.envelope + z * self.se


def resolvent_sandwich_check(model: DiffusionModel, lam: float, mu: float, x_grid,
                             paths: int = 2000, T: Optional[float] = None, dt: Optional[float] = None,
                             master_seed: int = 0, workers: int = 1) -> list[SandwichPoint]:
    """Compare the Monte Carlo resolvent from ``x`` with its analytic bracket.

    The middle term is ``u(x)/u(0) / (lam + Phi_n(mu))`` with ``u`` the decreasing
    solution; the gap to the true resolvent lies in
    ``[0, (1 - u0(x)/u0(0)) / lam]`` with ``u0`` the solution without killing.
    """
    if model.family != "wright_fisher":
        raise DomainError("the sandwich check needs the Wright-Fisher fundamental solutions")
    p = WfScaling(model.tau, model.alpha, model.beta, lam)
    sol = WfFundamentalSolution(p, mu)
    sol0 = WfFundamentalSolution(p, 0.0)
    r0 = 1.0 / (lam + wf_phi_n(p, mu))
    T = T if T is not None else math.ceil(14.0 / lam)
    dt = dt if dt is not None else model.tau / 50
    out = []
    for i, x in enumerate(np.atleast_1d(x_grid)):
        ens = simulate_ensemble(model, T, dt, paths, master_seed + i, start=float(x),
                                laplace_pairs=[(lam, mu)], workers=workers)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            r, se = empirical_laplace(ens, lam, mu)
        mid = float(sol(x) / sol(0.0)) * r0
        env = (1.0 - float(sol0(x) / sol0(0.0))) / lam
        out.append(SandwichPoint(float(x), r, se, mid, env))
    return out
