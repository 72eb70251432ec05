"""Laplace exponents for integrated Wright-Fisher diffusions.

The prelimit diffusion on ``[0, 1)`` has generator

    (1/tau) x (1-x) f'' + (1/tau) (alpha (1-x) - beta x) f'

and the additive functional is ``A(t) = (1/tau) int_0^t X(u) du``. The
decreasing solution of the killed equation is expanded in powers of ``1 - x``
(coefficients ``a(k)``). That series converges only algebraically at ``x = 0``,
where the stationary law puts almost all of its mass, so integrals against the
speed and representing measures use a second pair of expansions around
``x = 0`` (exponents ``0`` and ``1 - alpha``) matched to the first at
``x = 1/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import DomainError, ToleranceError
from .quadrature import jacobi_integral
from .specfun import bessel_i_ratio, bessel_i, gamma_ln

__all__ = [
    "WfScaling",
    "CoefficientSeq",
    "DecayReport",
    "WfFundamentalSolution",
    "wf_coefficients",
    "wf_limit_coefficients",
    "u_mu",
    "u_mu_derivative",
    "wf_phi_n",
    "wf_phi_limit",
    "wf_phi_cf",
    "wf_cf_convergents",
    "coefficient_decay_check",
    "limit_speed_integral",
    "limit_representing_integral",
    "integrated_mean",
    "integrated_variance",
    "speed_density",
    "representing_density",
    "MeasureSpec",
]

DEFAULT_K = 400
COEFF_LIMIT = 1e6
_MATCH_POINT = 0.5
_FROBENIUS_TERMS = 220


@dataclass(frozen=True)
class WfScaling:
    """One member of the scaling sequence.

    ``gamma`` is the limit of ``alpha / tau``; when omitted it is taken equal to
    the current ratio.
    """

    tau: float
    alpha: float
    beta: float
    lam: float = 1.0
    gamma: Optional[float] = None

    def __post_init__(self):
        for name in ("tau", "alpha", "lam"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive, got {v!r}")
        if not (math.isfinite(self.beta) and self.beta > 1):
            raise DomainError(f"beta must exceed 1 (entrance, not exit, at x = 1), got {self.beta!r}")
        if self.gamma is None:
            object.__setattr__(self, "gamma", self.alpha / self.tau)
        elif not (math.isfinite(self.gamma) and self.gamma > 0):
            raise DomainError(f"gamma must be positive, got {self.gamma!r}")

    @classmethod
    def along(cls, tau: float, gamma: float, beta: float, lam: float = 1.0) -> "WfScaling":
        """Member with ``alpha = gamma * tau`` exactly on the limit ray."""
        return cls(tau=tau, alpha=gamma * tau, beta=beta, lam=lam, gamma=gamma)

    @property
    def log_beta_fn(self) -> float:
        return gamma_ln(self.alpha) + gamma_ln(self.beta) - gamma_ln(self.alpha + self.beta)


@dataclass(frozen=True)
class CoefficientSeq:
    """Coefficients of ``sum_k a(k) (1-x)^k``; ``params is None`` marks the limit."""

    coefficients: np.ndarray
    mu: float
    beta: float
    params: Optional[WfScaling] = None

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def truncation(self) -> int:
        return int(self.coefficients.size - 1)

    @property
    def is_limit(self) -> bool:
        return self.params is None


def wf_coefficients(p: WfScaling, mu: float, K: int = DEFAULT_K) -> CoefficientSeq:
    """Prelimit coefficients ``a_n(0..K)`` from the three-term recursion."""
    if mu < 0 or not math.isfinite(mu):
        raise DomainError(f"mu must be >= 0, got {mu!r}")
    if K < 2:
        raise DomainError(f"K must be >= 2, got {K!r}")
    lt = p.lam * p.tau
    a = np.empty(K + 1)
    a[0] = 1.0
    a[1] = (lt + mu) / p.beta
    ab2 = p.alpha + p.beta - 2.0
    for k in range(2, K + 1):
        den = k * (p.beta + k - 1.0)
        c1 = (lt + mu + (k - 1.0) * (k + ab2)) / den
        c2 = mu / den
        a[k] = c1 * a[k - 1] - c2 * a[k - 2]
        if not abs(a[k]) <= COEFF_LIMIT:
            raise ToleranceError(
                f"coefficient a({k}) = {a[k]!r} exceeds {COEFF_LIMIT:g}; parameters outside the regime")
    return CoefficientSeq(a, float(mu), p.beta, p)


def _limit_recursion_residual(a: np.ndarray, mu: float, beta: float) -> float:
    worst = abs(a[0] - 1.0)
    if a.size > 1:
        worst = max(worst, abs(a[1] - mu / beta))
    for k in range(2, a.size):
        den = k * (k + beta - 1.0)
        rhs = (mu + (k - 1.0) * (k + beta - 2.0)) / den * a[k - 1] - mu / den * a[k - 2]
        scale = max(abs(a[k]), abs(a[k - 1]), abs(a[k - 2]) * mu / den, 1e-300)
        worst = max(worst, abs(a[k] - rhs) / scale)
    return worst


def wf_limit_coefficients(mu: float, beta: float, K: int = DEFAULT_K) -> CoefficientSeq:
    """Limit coefficients ``a(k) = mu^k / (k! (beta)_k)``."""
    if mu < 0 or not math.isfinite(mu):
        raise DomainError(f"mu must be >= 0, got {mu!r}")
    if not beta > 1:
        raise DomainError(f"beta must exceed 1, got {beta!r}")
    if K < 0:
        raise DomainError(f"K must be >= 0, got {K!r}")
    a = np.zeros(K + 1)
    a[0] = 1.0
    for k in range(1, K + 1):
        a[k] = a[k - 1] * mu / (k * (beta + k - 1.0))
    res = _limit_recursion_residual(a, mu, beta)
    if res > 1e-14:
        raise ToleranceError(f"limit coefficients violate their recursion by {res:.3g}")
    return CoefficientSeq(a, float(mu), float(beta), None)


def _decay_constant(seq: CoefficientSeq) -> float:
    a = seq.coefficients
    K = a.size - 1
    k = np.arange(K // 2 + 1, K + 1, dtype=float)
    if k.size == 0:
        return 0.0
    return float(np.max(np.abs(a[K // 2 + 1:]) * k ** 1.5))


def _tail_bound(seq: CoefficientSeq, x: float) -> float:
    # sum_{k > K} C k^(-3/2) (1-x)^k with C taken from the upper half of the table.
    C = _decay_constant(seq)
    if C == 0.0:
        return 0.0
    K = seq.truncation
    algebraic = 2.0 * C / math.sqrt(K)
    if x > 0:
        geometric = C * (1.0 - x) ** (K + 1) * (K + 1) ** -1.5 / x
        return min(algebraic, geometric)
    return algebraic


def u_mu(seq: CoefficientSeq, x, tol: float = 1e-9):
    """Evaluate ``sum_k a(k) (1-x)^k`` on ``[0, 1]``.

    Raises :class:`ToleranceError` when the truncation tail bound exceeds
    ``tol`` at the smallest requested ``x``.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((xs < 0) | (xs > 1)):
        raise DomainError("u_mu is defined on [0, 1]")
    bound = _tail_bound(seq, float(xs.min()))
    if bound > tol:
        raise ToleranceError(
            f"series tail bound {bound:.3g} exceeds tolerance {tol:.3g} at x = {xs.min():g}")
    y = 1.0 - xs
    out = np.polynomial.polynomial.polyval(y, seq.coefficients)
    return float(out[0]) if np.ndim(x) == 0 else out


def u_mu_derivative(seq: CoefficientSeq, x):
    """Term-by-term derivative in ``x`` of the truncated series."""
    xs = np.asarray(x, dtype=float)
    k = np.arange(1, seq.coefficients.size)
    d = -(k * seq.coefficients[1:])
    return np.polynomial.polynomial.polyval(1.0 - xs, d)


def speed_density(p: WfScaling, x):
    """Stationary (speed) density ``x^(alpha-1) (1-x)^(beta-1) / B(alpha, beta)``."""
    x = np.asarray(x, dtype=float)
    return np.exp((p.alpha - 1.0) * np.log(x) + (p.beta - 1.0) * np.log1p(-x) - p.log_beta_fn)


def representing_density(p: WfScaling, x):
    """Density of the representing measure of ``A``: ``x / tau`` times the speed density."""
    return np.asarray(x, dtype=float) / p.tau * speed_density(p, x)


@dataclass(frozen=True)
class MeasureSpec:
    """Speed or representing measure of a prelimit diffusion on ``(0, 1)``."""

    kind: str
    params: WfScaling

    def __post_init__(self):
        if self.kind not in ("wf_speed", "wf_representing"):
            raise DomainError(f"unknown measure kind {self.kind!r}")

    def density(self, x):
        if self.kind == "wf_speed":
            return speed_density(self.params, x)
        return representing_density(self.params, x)

    @property
    def total_mass(self) -> float:
        p = self.params
        return 1.0 if self.kind == "wf_speed" else p.alpha / (p.tau * (p.alpha + p.beta))


class WfFundamentalSolution:
    """Decreasing solution ``u`` of the killed equation, normalised by ``u(1) = 1``.

    Parameters
    ----------
    p : WfScaling
        Prelimit parameters; ``alpha`` must lie in ``(0, 1)`` so that ``x = 0``
        is a regular boundary.
    mu : float
        Killing rate per unit of ``A``.
    K : int
        Truncation of the expansion in ``1 - x``.
    """

    def __init__(self, p: WfScaling, mu: float, K: int = DEFAULT_K,
                 frobenius_terms: int = _FROBENIUS_TERMS):
        if not 0 < p.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1) for a regular boundary at 0, got {p.alpha!r}")
        self.params = p
        self.mu = float(mu)
        self.seq = wf_coefficients(p, mu, K)
        self._s1 = 1.0 - p.alpha
        self._b0 = self._frobenius(0.0, frobenius_terms)
        self._b1 = self._frobenius(self._s1, frobenius_terms)
        x0 = _MATCH_POINT
        u0 = float(np.polynomial.polynomial.polyval(1.0 - x0, self.seq.coefficients))
        du0 = float(u_mu_derivative(self.seq, x0))
        f0, df0 = self._branch(self._b0, 0.0, x0, True)
        f1, df1 = self._branch(self._b1, self._s1, x0, True)
        det = f0 * df1 - f1 * df0
        self.c0 = (u0 * df1 - f1 * du0) / det
        self.c1 = (f0 * du0 - u0 * df0) / det

    def _frobenius(self, s: float, n: int) -> np.ndarray:
        p = self.params
        lt = p.lam * p.tau
        ab = p.alpha + p.beta
        b = np.zeros(n + 1)
        b[0] = 1.0
        prev = 0.0
        for m in range(n):
            ms = m + s
            nxt = (b[m] * (ms * (ms + ab - 1.0) + lt) + self.mu * prev) / ((ms + 1.0) * (ms + p.alpha))
            prev = b[m]
            b[m + 1] = nxt
        tail = abs(b[-1]) * _MATCH_POINT ** n
        if not math.isfinite(tail) or tail > 1e-13 * abs(b).max():
            raise ToleranceError("expansion around x = 0 has not converged at the matching point")
        return b

    @staticmethod
    def _branch(b, s, x, derivative=False):
        x = np.asarray(x, dtype=float)
        g = np.polynomial.polynomial.polyval(x, b)
        xs = x ** s if s else 1.0
        if not derivative:
            return xs * g
        dg = np.polynomial.polynomial.polyval(x, b[1:] * np.arange(1, b.size))
        if s == 0.0:
            return g, dg
        return xs * g, s * x ** (s - 1.0) * g + xs * dg

    def __call__(self, x):
        xs = np.asarray(x, dtype=float)
        if np.any((xs < 0) | (xs > 1)):
            raise DomainError("u is defined on [0, 1]")
        near = xs < _MATCH_POINT
        out = np.empty_like(xs, dtype=float)
        if np.any(~near):
            out[~near] = np.polynomial.polynomial.polyval(1.0 - xs[~near], self.seq.coefficients)
        if np.any(near):
            f0 = self._branch(self._b0, 0.0, xs[near])
            f1 = self._branch(self._b1, self._s1, xs[near])
            out[near] = self.c0 * f0 + self.c1 * f1
        return float(out) if out.ndim == 0 else out

    def _integral(self, extra_power: float) -> float:
        # int_0^1 x^(alpha - 1 + extra) (1-x)^(beta - 1) u(x) dx
        p = self.params
        x0 = _MATCH_POINT
        a = self.seq.coefficients
        b0, b1 = self._b0, self._b1
        bm1 = p.beta - 1.0

        def regular(x):
            return np.exp(bm1 * np.log1p(-x)) * np.polynomial.polynomial.polyval(x, b0)

        def singular(x):
            # x^(alpha-1+extra) * x^(1-alpha) = x^extra
            return (x ** extra_power * np.exp(bm1 * np.log1p(-x))
                    * np.polynomial.polynomial.polyval(x, b1))

        def outer(x):
            return (np.exp((p.alpha - 1.0 + extra_power) * np.log(x))
                    * np.polynomial.polynomial.polyval(1.0 - x, a))

        left_reg = jacobi_integral(regular, p.alpha - 1.0 + extra_power, 0.0, 0.0, x0)
        left_sing = jacobi_integral(singular, 0.0, 0.0, 0.0, x0)
        right = jacobi_integral(outer, 0.0, bm1, x0, 1.0)
        return self.c0 * left_reg + self.c1 * left_sing + right

    def speed_integral(self) -> float:
        """``int u dm`` with ``m`` the Beta(alpha, beta) stationary law."""
        return self._integral(0.0) * math.exp(-self.params.log_beta_fn)

    def representing_integral(self) -> float:
        """``int u dk`` with ``k(dx) = (x / tau) m(dx)``."""
        p = self.params
        return self._integral(1.0) * math.exp(-p.log_beta_fn) / p.tau

    def scale_derivative_at_zero(self) -> float:
        """Right derivative ``du/ds`` at ``0+`` with respect to the scale function."""
        p = self.params
        return self.c1 * self._s1 / (p.tau * math.exp(p.log_beta_fn))


@lru_cache(maxsize=256)
def _solution(p: WfScaling, mu: float) -> WfFundamentalSolution:
    return WfFundamentalSolution(p, mu)


def wf_phi_n(p: WfScaling, mu: float) -> float:
    """Prelimit exponent ``mu * int u dk / int u dm``."""
    if mu < 0 or not math.isfinite(mu):
        raise DomainError(f"mu must be >= 0, got {mu!r}")
    if mu == 0:
        return 0.0
    sol = _solution(p, float(mu))
    return mu * sol.representing_integral() / sol.speed_integral()


def wf_phi_limit(mu: float, beta: float, gamma: float = 1.0) -> float:
    """Limit exponent ``gamma sqrt(mu) I_beta(2 sqrt(mu)) / I_{beta-1}(2 sqrt(mu))``."""
    if mu < 0 or not math.isfinite(mu):
        raise DomainError(f"mu must be >= 0, got {mu!r}")
    if not beta > 1:
        raise DomainError(f"beta must exceed 1, got {beta!r}")
    if mu == 0:
        return 0.0
    r = math.sqrt(mu)
    if r < 1e-4:
        # Two terms of the ratio of series keep full precision for tiny mu.
        return gamma * mu / beta * (1.0 - mu / (beta * (beta + 1.0)))
    return gamma * r * bessel_i_ratio(beta - 1.0, 2.0 * r)


def wf_phi_cf(mu: float, beta: float, depth: int = 40) -> float:
    """Continued fraction ``mu / (beta + mu / (beta + 1 + mu / (beta + 2 + ...)))``.

    Evaluated bottom-up from level ``depth``; multiply by ``gamma`` outside.
    """
    if depth < 1:
        raise DomainError(f"depth must be >= 1, got {depth!r}")
    if mu == 0:
        return 0.0
    d = beta + depth - 1.0
    for j in range(depth - 2, -1, -1):
        d = beta + j + mu / d
    return mu / d


def wf_cf_convergents(mu: float, beta: float, depth: int) -> np.ndarray:
    """Successive convergents ``wf_phi_cf(mu, beta, 1..depth)``."""
    return np.array([wf_phi_cf(mu, beta, d) for d in range(1, depth + 1)])


@dataclass(frozen=True)
class DecayReport:
    epsilon: float
    constant: float
    constant_doubled: float
    argmax: int
    passed: bool

    @property
    def relative_change(self) -> float:
        return abs(self.constant_doubled - self.constant) / max(self.constant, 1e-300)


def _sup_weighted(a: np.ndarray, epsilon: float) -> tuple[float, int]:
    k = np.arange(1, a.size, dtype=float)
    w = np.abs(a[1:]) * k ** (2.0 - epsilon)
    if w.size == 0:
        return 0.0, 0
    i = int(np.argmax(w))
    return float(w[i]), i + 1


def coefficient_decay_check(seq: CoefficientSeq, epsilon: float = 0.5,
                            stability: float = 1e-2) -> DecayReport:
    """Empirical constant ``sup_k |a(k)| k^(2 - epsilon)`` and its stability under ``K -> 2K``."""
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    c, arg = _sup_weighted(seq.coefficients, epsilon)
    K2 = 2 * seq.truncation
    if seq.is_limit:
        doubled = wf_limit_coefficients(seq.mu, seq.beta, K2)
    else:
        doubled = wf_coefficients(seq.params, seq.mu, K2)
    c2, _ = _sup_weighted(doubled.coefficients, epsilon)
    ok = math.isfinite(c) and math.isfinite(c2) and abs(c2 - c) <= stability * max(c, 1e-300)
    return DecayReport(epsilon, c, c2, arg, ok)


def limit_speed_integral(mu: float, beta: float) -> float:
    """``sum_k mu^k / (k! (beta)_k) = Gamma(beta) mu^(-(beta-1)/2) I_{beta-1}(2 sqrt(mu))``."""
    if mu == 0:
        return 1.0
    r = math.sqrt(mu)
    return math.exp(gamma_ln(beta) - 0.5 * (beta - 1.0) * math.log(mu)) * bessel_i(beta - 1.0, 2 * r)


def limit_representing_integral(mu: float, beta: float, gamma: float = 1.0) -> float:
    """``(gamma / beta) sum_k mu^k / (k! (beta+1)_k)``, the limit of ``int u dk``."""
    return gamma / beta * limit_speed_integral(mu, beta + 1.0)


def integrated_mean(tau: float, alpha: float, beta: float, t: float = 1.0) -> float:
    """Stationary mean of ``A(t) = (1/tau) int_0^t X``: ``t (alpha/tau) / (alpha + beta)``."""
    return t * alpha / tau / (alpha + beta)


def integrated_variance(tau: float, alpha: float, beta: float, t: float = 1.0) -> float:
    """Stationary variance of ``A(t)``.

    ``X`` has variance ``alpha beta / ((alpha+beta)^2 (alpha+beta+1))`` and
    autocorrelation ``exp(-theta s)`` with ``theta = (alpha + beta) / tau``.
    """
    ab = alpha + beta
    theta = ab / tau
    th = theta * t
    # (e^-th - 1 + th) / th^2, with a series near 0 to avoid cancellation
    if th < 1e-4:
        g = 0.5 - th / 6.0 + th * th / 24.0
    else:
        g = (math.expm1(-th) + th) / (th * th)
    var_x = alpha * beta / (ab * ab * (ab + 1.0))
    return 2.0 * var_x * t * t * g / (tau * tau)
