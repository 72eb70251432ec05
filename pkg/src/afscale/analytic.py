"""Prelimit and limit exponents for the Feller and reflected Brownian examples.

Feller diffusion: generator ``n x f'' + n (alpha - beta x) f'`` with
``A(t) = n int X``. The decreasing solution is a Kummer ``U`` function and its
integrals against the Gamma speed measure reduce to Beta-type integrals over
``[0, 1]``.

Reflected Brownian motion: generator ``n f'' - n beta f'`` with
``A(t) = beta int X``. The decreasing solution is ``exp(beta x / 2) Ai(c + g x)``
and the exponent becomes a ratio of Airy-Laplace transforms.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ToleranceError
from .quadrature import jacobi_integral
from .specfun import log_airy_ai, upper_incomplete_gamma
from .subordinator import LaplaceExponent

__all__ = [
    "FellerAux",
    "RbmAux",
    "IgFit",
    "AirySandwich",
    "feller_phi_n",
    "feller_phi_limit",
    "feller_phi_limit_alt",
    "feller_limit_exponent",
    "taylor_coefficients",
    "ig_parameter_fit",
    "ig_exponent",
    "rbm_phi_n",
    "rbm_limit_exponent",
    "rbm_zero_killing_mass",
    "airy_laplace_ratio",
    "airy_sandwich",
]


def _positive(**kw):
    for k, v in kw.items():
        if not (math.isfinite(v) and v > 0):
            raise DomainError(f"{k} must be positive, got {v!r}")


@dataclass(frozen=True)
class FellerAux:
    """Constants of the Kummer-type decreasing solution."""

    n: float
    alpha: float
    beta: float
    lam: float
    mu: float

    def __post_init__(self):
        _positive(n=self.n, alpha=self.alpha, beta=self.beta, lam=self.lam)
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise DomainError(f"mu must be >= 0, got {self.mu!r}")

    @property
    def S(self) -> float:
        return math.sqrt(self.beta ** 2 + 4.0 * self.mu)

    @property
    def L(self) -> float:
        # (beta - S) / 2 written without cancellation
        return -2.0 * self.mu / (self.beta + self.S)

    @property
    def R(self) -> float:
        return 0.5 * (self.beta + self.S)

    @property
    def A(self) -> float:
        return (self.lam / self.n - self.alpha * self.L) / self.S


def feller_phi_n(n: float, alpha_n: float, beta: float, lam: float, mu: float,
                 nodes: int = 40, rtol: float = 1e-7) -> float:
    """Prelimit exponent of the Feller example.

    ``n alpha mu I2 / I1`` with

        I1 = int_0^1 r^(A-1) (R(1-r) + S r)^(-alpha) dr
        I2 = int_0^1 r^(A-1) (1-r) (R(1-r) + S r)^(-alpha-1) dr

    Both integrals use Gauss-Jacobi rules carrying the ``r^(A-1)`` weight.
    """
    if mu == 0:
        return 0.0
    aux = FellerAux(n, alpha_n, beta, lam, mu)
    R, S, A = aux.R, aux.S, aux.A

    def lin(r):
        return R * (1.0 - r) + S * r

    i1 = jacobi_integral(lambda r: lin(r) ** -alpha_n, A - 1.0, 0.0, n=nodes, rtol=rtol)
    i2 = jacobi_integral(lambda r: lin(r) ** (-alpha_n - 1.0), A - 1.0, 1.0, n=nodes, rtol=rtol)
    return n * alpha_n * mu * i2 / i1


def feller_phi_limit(mu: float, beta: float, gamma: float = 1.0) -> float:
    """``2 gamma mu / (beta + sqrt(beta^2 + 4 mu))``."""
    if mu < 0:
        raise DomainError(f"mu must be >= 0, got {mu!r}")
    return 2.0 * gamma * mu / (beta + math.sqrt(beta * beta + 4.0 * mu))


def feller_phi_limit_alt(mu: float, beta: float, gamma: float = 1.0) -> float:
    """Equivalent form ``(gamma / 2) (sqrt(beta^2 + 4 mu) - beta)``."""
    if mu < 0:
        raise DomainError(f"mu must be >= 0, got {mu!r}")
    return 0.5 * gamma * (math.sqrt(beta * beta + 4.0 * mu) - beta)


def feller_limit_exponent(beta: float, gamma: float = 1.0) -> LaplaceExponent:
    _positive(beta=beta, gamma=gamma)
    return LaplaceExponent("feller_limit", {"beta": beta, "gamma": gamma},
                           lambda mu: feller_phi_limit(mu, beta, gamma))


def taylor_coefficients(f, radius: float, count: int = 4, points: int = 64) -> np.ndarray:
    """Maclaurin coefficients of an analytic ``f`` by the trapezoid rule on a circle.

    ``f`` must accept complex arguments; the error decays geometrically in
    ``points`` as long as ``radius`` is inside the disc of analyticity.
    """
    th = 2.0 * np.pi * np.arange(points) / points
    z = radius * np.exp(1j * th)
    vals = np.array([f(complex(v)) for v in z])
    c = np.fft.fft(vals) / points
    return np.real(c[:count]) / radius ** np.arange(count)


@dataclass(frozen=True)
class IgFit:
    mean: float
    shape: float
    max_abs_gap: float


def ig_exponent(mu, mean: float, shape: float):
    """Inverse-Gaussian exponent ``(shape/mean) (sqrt(1 + 2 mean^2 mu / shape) - 1)``."""
    mu = np.asarray(mu, dtype=float)
    x = 2.0 * mean * mean * mu / shape
    # sqrt(1+x) - 1 = x / (sqrt(1+x) + 1)
    return shape / mean * x / (np.sqrt(1.0 + x) + 1.0)


def ig_parameter_fit(beta: float, gamma: float = 1.0, mu_grid=None) -> IgFit:
    """Fit an inverse-Gaussian exponent to the Feller limit by its first two derivatives at 0.

    With ``Phi'(0) = M`` and ``Phi''(0) = -M^3 / Lambda`` for the inverse
    Gaussian with mean ``M`` and shape ``Lambda``.
    """
    _positive(beta=beta, gamma=gamma)

    def f(z):
        return 2.0 * gamma * z / (beta + cmath.sqrt(beta * beta + 4.0 * z))

    c = taylor_coefficients(f, radius=beta * beta / 8.0)
    mean = c[1]
    shape = -mean ** 3 / (2.0 * c[2])
    if mu_grid is None:
        mu_grid = np.linspace(0.0, 10.0, 1001)
    mu_grid = np.asarray(mu_grid, dtype=float)
    target = np.array([feller_phi_limit(m, beta, gamma) for m in mu_grid])
    gap = float(np.max(np.abs(ig_exponent(mu_grid, mean, shape) - target)))
    return IgFit(float(mean), float(shape), gap)


@dataclass(frozen=True)
class RbmAux:
    """Constants of the Airy-type decreasing solution ``exp(beta x/2) Ai(c + g x)``."""

    n: float
    beta: float
    lam: float
    mu: float

    def __post_init__(self):
        _positive(n=self.n, beta=self.beta, lam=self.lam, mu=self.mu)

    @property
    def scale(self) -> float:
        return self.beta ** 2 * self.n

    @property
    def c(self) -> float:
        s = self.scale
        return (0.25 * s ** (2.0 / 3.0) + self.lam * s ** (-1.0 / 3.0)) * self.mu ** (-2.0 / 3.0)

    @property
    def gamma(self) -> float:
        return (self.mu * self.beta / self.n) ** (1.0 / 3.0)

    @property
    def delta(self) -> float:
        return 0.5 * self.beta

    @property
    def rho(self) -> float:
        """``c^(1/2) g / delta = sqrt(1 + 4 lam / (beta^2 n))`` at this ``n``."""
        return math.sqrt(self.c) * self.gamma / self.delta


def _log_airy_vec(x) -> np.ndarray:
    return np.array([log_airy_ai(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))


@dataclass(frozen=True)
class AirySandwich:
    lower: float
    upper: float


def airy_sandwich(c: float, gamma_: float, delta_: float, alpha_: float) -> AirySandwich:
    """Bounds on :func:`airy_laplace_ratio` from the Airy tail estimates.

    With ``d = delta / gamma``, ``r(y) = 1.5 y^(-3/2)`` and
    ``b = d + c^(1/2) + 1/(4c)``:

        upper = (d / (d + c^(1/2)))^(1+alpha) / (1 - r(c))
        lower = (1 - r(c)) exp(-sqrt(b/c)/4) P(1+alpha, b^(5/4)) (d / b)^(1+alpha)

    where ``P`` is the regularized lower incomplete gamma function. Valid for
    ``c > (3/2)^(2/3)``.
    """
    _positive(c=c, gamma_=gamma_, delta_=delta_, alpha_=alpha_)
    if c <= 1.5 ** (2.0 / 3.0):
        raise DomainError("the Airy tail bounds need c > (3/2)^(2/3)")
    d = delta_ / gamma_
    rc = 1.5 * c ** -1.5
    sc = math.sqrt(c)
    upper = (d / (d + sc)) ** (1.0 + alpha_) / (1.0 - rc)
    b = d + sc + 0.25 / c
    a1 = 1.0 + alpha_
    lower_inc = 1.0 - upper_incomplete_gamma(a1, b ** 1.25) / math.gamma(a1)
    lower = (1.0 - rc) * math.exp(-0.25 * math.sqrt(b / c)) * lower_inc * (d / b) ** a1
    return AirySandwich(lower, upper)


def airy_laplace_ratio(c: float, gamma_: float, delta_: float, alpha_: float,
                       nodes: int = 64, rtol: float = 1e-9) -> float:
    """``(1/Ai(c)) int_0^inf delta^(1+alpha)/Gamma(1+alpha) e^(-delta x) x^alpha Ai(c + gamma x) dx``.

    The Airy factor enters as ``exp(log Ai(c + gamma x) - log Ai(c))``. The range
    is cut where the exponential envelope ``exp(-(delta + c^(1/2) gamma) x)``
    has fallen by ``e^-60``; for ``c > (3/2)^(2/3)`` the discarded tail is
    bounded using the upper Airy estimate and must be below ``1e-13``.
    """
    _positive(gamma_=gamma_, delta_=delta_, alpha_=alpha_)
    if not c >= 0:
        raise DomainError(f"c must be >= 0, got {c!r}")
    rate = delta_ + math.sqrt(c) * gamma_
    xmax = 60.0 / rate
    a1 = 1.0 + alpha_
    log_ai_c = log_airy_ai(c)
    logpref = a1 * math.log(delta_) - math.lgamma(a1)

    def smooth(x):
        return np.exp(logpref - delta_ * x + _log_airy_vec(c + gamma_ * x) - log_ai_c)

    value = jacobi_integral(smooth, alpha_, 0.0, 0.0, xmax, n=nodes, rtol=rtol)
    if c > 1.5 ** (2.0 / 3.0):
        rc = 1.5 * c ** -1.5
        tail = ((delta_ / rate) ** a1 / (1.0 - rc)
                * upper_incomplete_gamma(a1, rate * xmax) / math.gamma(a1))
        if tail > 1e-13 * max(value, 1e-300):
            raise ToleranceError(f"Airy-Laplace tail {tail:.3g} not negligible")
    if not (math.isfinite(value) and value > 0):
        raise ToleranceError(f"Airy-Laplace ratio under/overflowed: {value!r}")
    return value


def rbm_phi_n(n: float, beta_n: float, lam: float, mu: float) -> float:
    """Prelimit exponent of the reflected Brownian example.

    ``mu int beta^2 x e^(-beta x/2) Ai(c + g x) dx / int beta e^(-beta x/2) Ai(c + g x) dx``,
    which equals ``2 mu L1 / L0`` with ``L_a`` the normalised Airy-Laplace
    transforms of order ``a`` at rate ``beta / 2``.
    """
    if mu == 0:
        return 0.0
    aux = RbmAux(n, beta_n, lam, mu)
    l1 = airy_laplace_ratio(aux.c, aux.gamma, aux.delta, 1.0)
    l0 = _airy_laplace_order0(aux.c, aux.gamma, aux.delta)
    return 2.0 * mu * l1 / l0


def _airy_laplace_order0(c, g, d, nodes: int = 64, rtol: float = 1e-9) -> float:
    # alpha = 0 has no endpoint weight; Legendre nodes on the same range
    rate = d + math.sqrt(c) * g
    xmax = 60.0 / rate
    log_ai_c = log_airy_ai(c)

    def smooth(x):
        return np.exp(math.log(d) - d * x + _log_airy_vec(c + g * x) - log_ai_c)

    return jacobi_integral(smooth, 0.0, 0.0, 0.0, xmax, n=nodes, rtol=rtol)


def rbm_limit_exponent() -> LaplaceExponent:
    """``Phi(mu) = mu``: the functional converges to deterministic time."""
    return LaplaceExponent("rbm_limit", {}, lambda mu: float(mu))


def rbm_zero_killing_mass(n: float, beta_n: float, lam: float) -> float:
    """``int phi0 dm = 2 / (1 + sqrt(1 + 4 lam / (beta^2 n)))`` for ``phi0(x) = exp(x (beta - sqrt(beta^2 + 4 lam/n)) / 2)``."""
    _positive(n=n, beta_n=beta_n, lam=lam)
    return 2.0 / (1.0 + math.sqrt(1.0 + 4.0 * lam / (beta_n ** 2 * n)))
