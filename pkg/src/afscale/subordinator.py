"""Lévy-Khinchine data of the limiting subordinator.

The Wright-Fisher limit exponent is a ratio of modified Bessel functions and
has the partial-fraction expansion

    Phi(mu) = gamma * sum_k mu / (mu + rho_k),    rho_k = s * j_k**2,

with ``j_k`` the positive zeros of ``J_{beta-1}``. Each term is the exponent of
a compound Poisson process with jump density ``gamma * rho_k * exp(-rho_k x)``,
so the jump measure is an exponential mixture. Two candidate scalings ``s``
are carried and the one reproducing the closed-form exponent is selected by
:func:`arbitrate_convention`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, ToleranceError
from .specfun import BesselZeroTable, bessel_j_zeros, rayleigh_sigma
from .wf import wf_phi_limit

__all__ = [
    "CONVENTIONS",
    "LaplaceExponent",
    "SubordinatorLaw",
    "ArbitrationReport",
    "JumpMoment",
    "wf_limit_exponent",
    "arbitrate_convention",
    "jump_density",
    "lk_consistency",
    "slope_at_zero",
    "cumulants",
    "moments",
    "jump_moment",
    "sample_increment",
]

# rate scale s in rho_k = s * j_k**2
CONVENTIONS = {"paper_pi_dens": 4.0, "partial_fraction": 0.25}
DEFAULT_TERMS = 10_000
DEFAULT_EPS = 1e-6


@dataclass(frozen=True)
class LaplaceExponent:
    """An evaluatable ``mu -> Phi(mu)`` with its provenance."""

    family: str
    params: dict
    evaluate: Callable[[float], float] = field(compare=False, repr=False)

    def __call__(self, mu: float) -> float:
        return self.evaluate(mu)

    def grid(self, mus) -> np.ndarray:
        return np.array([self.evaluate(float(m)) for m in np.ravel(mus)])


def wf_limit_exponent(beta: float, gamma: float = 1.0) -> LaplaceExponent:
    if not beta > 1:
        raise DomainError(f"beta must exceed 1, got {beta!r}")
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma!r}")
    return LaplaceExponent("wf_limit", {"beta": beta, "gamma": gamma},
                           lambda mu: wf_phi_limit(mu, beta, gamma))


def _tail_offset(nu: float) -> float:
    # McMahon: j_{nu,k} ~ pi * (k + nu/2 - 1/4)
    return 0.5 * nu - 0.25


@dataclass(frozen=True)
class SubordinatorLaw:
    """Drift-free subordinator with jump density ``sum_k w * rho_k exp(-rho_k x)``.

    The weight ``w`` equals ``gamma`` for every component. Rates are built on
    demand from the zeros of ``J_{beta-1}``.
    """

    exponent: LaplaceExponent
    beta: float
    gamma: float
    convention: str
    terms: int = DEFAULT_TERMS
    drift: float = 0.0

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise DomainError(f"unknown convention {self.convention!r}")
        if self.terms < 1:
            raise DomainError("terms must be positive")

    @classmethod
    def wright_fisher(cls, beta: float, gamma: float = 1.0, convention: Optional[str] = None,
                      terms: int = DEFAULT_TERMS) -> "SubordinatorLaw":
        """Law of the Wright-Fisher limit; ``convention=None`` runs the arbitration."""
        if convention is None:
            convention = arbitrate_convention(beta, gamma, terms=terms).selected
        return cls(wf_limit_exponent(beta, gamma), beta, gamma, convention, terms)

    @property
    def nu(self) -> float:
        return self.beta - 1.0

    @property
    def scale(self) -> float:
        return CONVENTIONS[self.convention]

    @property
    def zero_table(self) -> BesselZeroTable:
        return bessel_j_zeros(self.nu, self.terms)

    def rates(self, n: Optional[int] = None) -> np.ndarray:
        n = self.terms if n is None else n
        return self.scale * bessel_j_zeros(self.nu, n).zeros ** 2

    def weights(self, n: Optional[int] = None) -> np.ndarray:
        return np.full(self.terms if n is None else n, self.gamma)

    def asymptotic_rate(self, k):
        """Continuous interpolation of ``rho_k`` from the McMahon leading term."""
        return self.scale * (math.pi * (np.asarray(k, dtype=float) + _tail_offset(self.nu))) ** 2

    def cumulants(self, n_max: int) -> np.ndarray:
        """``kappa_n = gamma n! s^-n sigma_n(beta - 1)`` for ``n = 1..n_max``."""
        if n_max < 1:
            raise DomainError("n_max must be >= 1")
        out = np.empty(n_max)
        for n in range(1, n_max + 1):
            out[n - 1] = self.gamma * math.factorial(n) * self.scale ** -n * rayleigh_sigma(self.nu, n)
        return out


def _lk_tail(scale: float, nu: float, mu: float, n: int) -> float:
    # int_{n+1/2}^inf mu / (mu + s pi^2 (x + c)^2) dx
    a = math.pi * math.sqrt(scale)
    y = a * (n + 0.5 + _tail_offset(nu)) / math.sqrt(mu)
    return math.sqrt(mu) / a * (0.5 * math.pi - math.atan(y))


def lk_consistency(law: SubordinatorLaw, mu: float, terms: Optional[int] = None) -> tuple[float, float]:
    """Lévy-Khinchine sum ``sum_k w mu/(mu + rho_k)`` with tail estimate, and its gap to the exponent."""
    if not mu > 0:
        raise DomainError(f"mu must be positive, got {mu!r}")
    n = law.terms if terms is None else terms
    rho = law.rates(n)
    terms_ = mu / (mu + rho)
    value = law.gamma * (math.fsum(terms_[::-1]) + _lk_tail(law.scale, law.nu, mu, n))
    return value, abs(value - law.exponent(mu))


@dataclass(frozen=True)
class ArbitrationReport:
    mus: tuple
    gaps: dict
    selected: str
    tolerance: float

    @property
    def separation(self) -> float:
        """Smallest ratio of a rejected convention's gap to the selected one's tolerance."""
        others = [max(g) for c, g in self.gaps.items() if c != self.selected]
        return min(others) / self.tolerance if others else math.inf


def arbitrate_convention(beta: float, gamma: float = 1.0, mus=(0.5, 1.0, 2.0),
                         terms: int = DEFAULT_TERMS, tol: float = 1e-4) -> ArbitrationReport:
    """Pick the mixture convention whose Lévy-Khinchine sum reproduces the exponent.

    Raises :class:`ToleranceError` unless exactly one convention passes at every
    ``mu`` and the others miss by more than ten times ``tol``.
    """
    exponent = wf_limit_exponent(beta, gamma)
    gaps = {}
    for conv in CONVENTIONS:
        law = SubordinatorLaw(exponent, beta, gamma, conv, terms)
        gaps[conv] = tuple(lk_consistency(law, mu)[1] for mu in mus)
    passing = [c for c, g in gaps.items() if max(g) <= tol]
    if len(passing) != 1:
        raise ToleranceError(f"convention arbitration inconclusive: gaps {gaps}")
    chosen = passing[0]
    for c, g in gaps.items():
        if c != chosen and min(g) <= 10 * tol:
            raise ToleranceError(f"convention {c!r} is within 10x of tolerance: {g}")
    return ArbitrationReport(tuple(mus), gaps, chosen, tol)


def jump_density(law: SubordinatorLaw, x: float, terms: Optional[int] = None,
                 rtol: float = 1e-10) -> float:
    """Jump density at ``x > 0``; the number of components grows until the tail is below ``rtol``."""
    if not x > 0:
        raise DomainError(f"the jump density diverges at x <= 0, got {x!r}")
    n = max(8, law.terms if terms is None else terms)
    while True:
        rho = law.rates(n)
        t = rho * np.exp(-rho * x)
        value = law.gamma * math.fsum(t[::-1])
        # terms decay super-geometrically once rho x > 1; bound the remainder
        # by a geometric series with the last ratio.
        r = t[-1] / t[-2] if t[-2] > 0 else 0.0
        tail = law.gamma * t[-1] * r / (1.0 - r) if r < 1 and rho[-1] * x > 1 else math.inf
        if tail <= rtol * value:
            return value
        n *= 2
        if n > 10_000_000:
            raise ToleranceError(f"jump density at x={x!r} needs more than {n} components")


def slope_at_zero(exponent: Callable[[float], float], h: float = 1e-2, levels: int = 6) -> float:
    """``Phi'(0)`` by Richardson extrapolation of ``Phi(h)/h``."""
    table = [exponent(h / 2 ** i) / (h / 2 ** i) for i in range(levels)]
    for j in range(1, levels):
        f = 2.0 ** j
        table = [(f * table[i + 1] - table[i]) / (f - 1.0) for i in range(len(table) - 1)]
    return table[0]


def cumulants(beta: float, gamma: float, n_max: int, anchor_tol: float = 1e-8) -> np.ndarray:
    """Cumulants of ``A(1)`` from the Rayleigh power sums.

    The scale (``4**n`` vs ``4**-n``) is fixed by requiring ``kappa_1`` to equal
    the exponent's slope at zero.
    """
    exponent = wf_limit_exponent(beta, gamma)
    slope = slope_at_zero(exponent)
    for conv in ("partial_fraction", "paper_pi_dens"):
        law = SubordinatorLaw(exponent, beta, gamma, conv, terms=1)
        k = law.cumulants(n_max)
        if abs(k[0] - slope) <= anchor_tol * max(1.0, abs(slope)):
            return k
    raise ToleranceError(f"no cumulant scale reproduces Phi'(0) = {slope!r}")


def moments(law_or_cumulants, t: float, n_max: int) -> np.ndarray:
    """Raw moments ``m_0..m_n_max`` of ``A(t)``.

    Uses ``m_{n+1} = t sum_i C(n, i) kappa_{i+1} m_{n-i}``, the recursion that
    keeps ``m_2 - m_1**2 = t kappa_2``.
    """
    if t < 0:
        raise DomainError("t must be >= 0")
    if isinstance(law_or_cumulants, SubordinatorLaw):
        kappa = law_or_cumulants.cumulants(max(n_max, 1))
    else:
        kappa = np.asarray(law_or_cumulants, dtype=float)
        if kappa.size < n_max:
            raise DomainError(f"need {n_max} cumulants, got {kappa.size}")
    m = np.zeros(n_max + 1)
    m[0] = 1.0
    for n in range(n_max):
        m[n + 1] = t * math.fsum(math.comb(n, i) * kappa[i] * m[n - i] for i in range(n + 1))
    return m


@dataclass(frozen=True)
class JumpMoment:
    r: float
    value: float
    diverges: bool
    partial_sums: tuple
    increment_ratio: float


def jump_moment(law: SubordinatorLaw, r: float, terms: Optional[int] = None) -> JumpMoment:
    """``int x^r pi(x) dx = gamma Gamma(1+r) sum_k rho_k^-r``.

    Partial sums at ``N/4, N/2, N`` are compared: for the comparison series
    ``k^(-2r)`` the ratio of successive increments tends to ``2^(1-2r)``, so a
    ratio of at least one flags divergence. Convergent sums get an integral
    tail correction from the McMahon asymptotics.
    """
    if not r > 0:
        raise DomainError(f"r must be positive, got {r!r}")
    n = law.terms if terms is None else terms
    if n < 16:
        raise DomainError("need at least 16 terms")
    rho = law.rates(n)
    pref = law.gamma * math.gamma(1.0 + r)
    powers = rho ** -r
    cuts = (n // 4, n // 2, n)
    sums = tuple(pref * math.fsum(powers[:c][::-1]) for c in cuts)
    d1, d2 = sums[1] - sums[0], sums[2] - sums[1]
    ratio = d2 / d1
    if ratio >= 0.999:
        return JumpMoment(r, math.inf, True, sums, ratio)
    # sum_{k>n} (s pi^2 (k+c)^2)^-r ~ int_{n+1/2}^inf
    base = n + 0.5 + _tail_offset(law.nu)
    tail = (law.scale * math.pi ** 2) ** -r * base ** (1.0 - 2.0 * r) / (2.0 * r - 1.0)
    return JumpMoment(r, sums[2] + pref * tail, False, sums, ratio)


def _small_jump_mean(law: SubordinatorLaw, rho: np.ndarray, eps: float) -> float:
    # sum_k w int_0^eps x rho e^{-rho x} dx, plus the components beyond the table
    inner = 1.0 / rho - np.exp(-rho * eps) * (eps + 1.0 / rho)
    base = rho.size + 0.5 + _tail_offset(law.nu)
    tail = 1.0 / (law.scale * math.pi ** 2 * base)
    return law.gamma * (math.fsum(inner[::-1]) + tail)


def sample_increment(law: SubordinatorLaw, t: float, eps: float = DEFAULT_EPS, rng=None,
                     size: Optional[int] = None, max_mean_jumps: float = 1e5,
                     chunk: int = 4096):
    """Compound Poisson approximation of ``A(t)`` with jumps below ``eps`` compensated.

    Jumps of size ``>= eps`` are drawn exactly from the truncated mixture: each
    component contributes at rate ``w exp(-rho eps)`` and, by memorylessness,
    sizes ``eps + Exp(rho)``. Jumps below ``eps`` are replaced by their mean,
    so the sample mean is unbiased and the variance is low by
    ``t * int_0^eps x^2 pi(x) dx = O(eps^(1/2))``.

    Parameters
    ----------
    rng : numpy Generator, seed or None
    size : int, optional
        Number of independent samples; a scalar is returned when omitted.
    max_mean_jumps : float
        Budget on the expected jump count per sample.
    """
    if t < 0 or not math.isfinite(t):
        raise DomainError(f"t must be >= 0, got {t!r}")
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps!r}")
    rng = np.random.default_rng(rng)
    n_out = 1 if size is None else int(size)
    if t == 0:
        out = np.zeros(n_out)
        return 0.0 if size is None else out

    # the mass above eps is about gamma / (2 sqrt(pi s eps)); refuse before building the table
    approx = law.gamma / (2.0 * math.sqrt(math.pi * law.scale * eps))
    if t * approx > 2.0 * max_mean_jumps:
        raise DomainError(
            f"cutoff eps={eps:g} too small: about {t * approx:.3g} expected jumps per sample exceeds budget")
    # keep components until exp(-rho eps) is negligible
    n = max(64, int(math.ceil(12.0 / (math.pi * math.sqrt(law.scale * eps)))))
    rho = law.rates(n)
    mass = law.gamma * np.exp(-rho * eps)
    total = float(math.fsum(mass))
    if t * total > max_mean_jumps:
        raise DomainError(
            f"cutoff eps={eps:g} too small: {t * total:.3g} expected jumps per sample exceeds budget")
    cdf = np.cumsum(mass) / total
    cdf[-1] = 1.0
    drift = t * _small_jump_mean(law, rho, eps)

    out = np.empty(n_out)
    for start in range(0, n_out, chunk):
        m = min(chunk, n_out - start)
        counts = rng.poisson(t * total, size=m)
        nj = int(counts.sum())
        comp = np.searchsorted(cdf, rng.random(nj), side="right")
        np.minimum(comp, n - 1, out=comp)
        sizes = eps + rng.standard_exponential(nj) / rho[comp]
        owner = np.repeat(np.arange(m), counts)
        out[start:start + m] = drift + np.bincount(owner, weights=sizes, minlength=m)
    return float(out[0]) if size is None else out
