"""Binned spike counts of ``K`` neurons driven by a common mixing variable.

In each bin a success probability ``Z`` is drawn (independently across bins,
from a time-integrated diffusion, or from subordinator increments) and the
count ``S`` of active neurons is ``Binomial(K, Z)``. The pairwise spiking
correlation of the exchangeable model is ``Var Z / (E Z (1 - E Z))``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .diffusion import PathEnsemble
from .errors import DomainError
from .subordinator import SubordinatorLaw, sample_increment

__all__ = [
    "MixingMeasure",
    "SpikeBatch",
    "ClampWarning",
    "CorrelationEstimate",
    "EpsStats",
    "beta_binomial_pmf",
    "pairwise_correlation",
    "jump_identity",
    "sample_ind_model",
    "sample_doubly_stochastic",
    "compound_poisson_limit_stats",
    "subordinator_driven_spikes",
]

GENERATORS = ("binomial", "poisson")


class ClampWarning(RuntimeWarning):
    """Too many mixing values had to be clamped into [0, 1]."""


@dataclass(frozen=True)
class MixingMeasure:
    """Law of the per-bin success probability ``Z``."""

    kind: str
    a: float = 0.0
    b: float = 0.0
    values: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind == "beta":
            if not (self.a >= 0 and self.b > 0):
                raise DomainError(f"Beta mixing needs a >= 0 and b > 0, got ({self.a}, {self.b})")
        elif self.kind == "empirical":
            v = np.asarray(self.values, dtype=float)
            if v.size == 0 or np.any((v < 0) | (v > 1)):
                raise DomainError("empirical mixing values must lie in [0, 1]")
            object.__setattr__(self, "values", v)
        else:
            raise DomainError(f"unknown mixing kind {self.kind!r}")

    @classmethod
    def beta(cls, a: float, b: float) -> "MixingMeasure":
        """``Be(a, b)``; ``a = 0`` is the point mass at 0."""
        return cls("beta", a=float(a), b=float(b))

    @classmethod
    def beta_rate(cls, b: float, r: float, eps: float) -> "MixingMeasure":
        """``Be(a_eps, b)`` with ``a_eps = b r eps / (1 - r eps)``, so that ``E Z = r eps``."""
        if not 0 < r * eps < 1:
            raise DomainError(f"need 0 < r eps < 1, got {r * eps!r}")
        return cls.beta(b * r * eps / (1.0 - r * eps), b)

    @classmethod
    def empirical(cls, values) -> "MixingMeasure":
        return cls("empirical", values=np.asarray(values, dtype=float))

    @classmethod
    def from_ensemble(cls, ens: PathEnsemble, bin_width: float = 1.0) -> "MixingMeasure":
        """Bin integrals ``int X`` of every path, pooled."""
        return cls.empirical(bin_integrals(ens, bin_width).ravel())

    @property
    def mean(self) -> float:
        if self.kind == "beta":
            return self.a / (self.a + self.b)
        return float(np.mean(self.values))

    @property
    def variance(self) -> float:
        if self.kind == "beta":
            s = self.a + self.b
            return self.a * self.b / (s * s * (s + 1.0))
        return float(np.var(self.values))

    @property
    def correlation(self) -> float:
        """Pairwise spiking correlation ``Var Z / (E Z (1 - E Z))``."""
        m = self.mean
        return self.variance / (m * (1.0 - m)) if 0 < m < 1 else 0.0

    def sample(self, rng, size: int) -> np.ndarray:
        rng = np.random.default_rng(rng)
        if self.kind == "empirical":
            return rng.choice(self.values, size=size, replace=True)
        if self.a == 0:
            return np.zeros(size)
        # log-space Gamma ratio keeps tiny shapes from collapsing to 0/0
        la = _log_gamma(rng, self.a, size)
        lb = _log_gamma(rng, self.b, size)
        d = lb - la
        w = np.exp(-np.abs(d))
        return np.where(d > 0, w / (1.0 + w), 1.0 / (1.0 + w))


def _log_gamma(rng, a: float, size: int) -> np.ndarray:
    if a >= 1:
        return np.log(rng.gamma(a, size=size))
    return np.log(rng.gamma(a + 1.0, size=size)) + np.log(rng.random(size)) / a


@dataclass
class SpikeBatch:
    """Counts ``S_j`` of active neurons per bin (a row per replicate when 2-D)."""

    K: int
    counts: np.ndarray
    bin_width: float
    seed: object
    mixing: Optional[np.ndarray] = None
    clamp_rate: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.counts)
        if np.any((c < 0) | (c > self.K)):
            raise DomainError("spike counts must lie in [0, K]")

    @property
    def bins(self) -> int:
        return int(np.asarray(self.counts).shape[-1])


def _spikes(rng, K: int, z: np.ndarray, generator: str) -> np.ndarray:
    if generator == "binomial":
        return rng.binomial(K, z)
    if generator == "poisson":
        # one Poisson(K z) draw per bin, capped at the population size
        return np.minimum(rng.poisson(K * z), K)
    raise DomainError(f"unknown generator {generator!r}")


def sample_ind_model(F: MixingMeasure, K: int, J: int, seed=None,
                     generator: str = "binomial") -> SpikeBatch:
    """``J`` bins with independent ``Z_j ~ F`` and ``S_j ~ Binomial(K, Z_j)``."""
    if K < 1 or J < 1:
        raise DomainError("K and J must be >= 1")
    rng = np.random.default_rng(seed)
    z = F.sample(rng, J)
    return SpikeBatch(K, _spikes(rng, K, z, generator), 1.0, seed, mixing=z)


def bin_integrals(ens: PathEnsemble, bin_width: float = 1.0) -> np.ndarray:
    """``int X`` over consecutive bins, one row per path (without the functional's prefactor)."""
    k = int(round(bin_width / ens.record_dt))
    if k < 1 or abs(k * ens.record_dt - bin_width) > 1e-9 * bin_width:
        raise DomainError("bin width must be a multiple of the record spacing")
    J = (ens.A.shape[1] - 1) // k
    if J < 1:
        raise DomainError(f"horizon {ens.T} shorter than one bin")
    a = ens.A[ens.ok][:, ::k][:, :J + 1]
    return np.diff(a, axis=1) / ens.model.functional_scale


def sample_doubly_stochastic(ens: PathEnsemble, K: int, seed=None, bin_width: float = 1.0,
                             bins: Optional[int] = None, generator: str = "binomial") -> SpikeBatch:
    """Counts driven by unit-bin integrals ``Z_j = int_{j-1}^j X dt`` of simulated paths."""
    z = bin_integrals(ens, bin_width)
    if bins is not None:
        if bins > z.shape[1]:
            raise DomainError(f"horizon holds {z.shape[1]} bins, {bins} requested")
        z = z[:, :bins]
    z = np.clip(z, 0.0, 1.0)
    rng = np.random.default_rng(seed)
    return SpikeBatch(K, _spikes(rng, K, z, generator), bin_width, seed, mixing=z)


@dataclass(frozen=True)
class CorrelationEstimate:
    value: float
    se: float


def pairwise_correlation(batch: SpikeBatch) -> CorrelationEstimate:
    """Moment estimate of the pairwise correlation from counts alone.

    ``a = E[S(S-1)] / (K(K-1))`` estimates ``E[Z^2]`` and ``p = E[S]/K`` estimates
    ``E[Z]``; ``rho = (a - p^2) / (p (1 - p))`` with a delta-method error.
    """
    K = batch.K
    if K < 2:
        raise DomainError("correlation needs K >= 2")
    s = np.asarray(batch.counts, dtype=float).ravel()
    aj = s * (s - 1.0) / (K * (K - 1.0))
    pj = s / K
    a, p = aj.mean(), pj.mean()
    if not 0 < p < 1:
        return CorrelationEstimate(math.nan, math.inf)
    q = p * (1.0 - p)
    rho = (a - p * p) / q
    da = 1.0 / q
    dp = (-2.0 * p * q - (a - p * p) * (1.0 - 2.0 * p)) / (q * q)
    infl = da * (aj - a) + dp * (pj - p)
    return CorrelationEstimate(float(rho), float(infl.std(ddof=1) / math.sqrt(s.size)))


def jump_identity(batch: SpikeBatch) -> CorrelationEstimate:
    """``E[J(J-1)] / ((K-1) E[J])`` for the law of ``S`` given ``S > 0``."""
    s = np.asarray(batch.counts, dtype=float).ravel()
    s = s[s > 0]
    if s.size < 2:
        return CorrelationEstimate(math.nan, math.inf)
    K = batch.K
    u = s * (s - 1.0) / (K - 1.0)
    mu_u, mu_s = u.mean(), s.mean()
    val = mu_u / mu_s
    infl = (u - mu_u) / mu_s - val * (s - mu_s) / mu_s
    return CorrelationEstimate(float(val), float(infl.std(ddof=1) / math.sqrt(s.size)))


def beta_binomial_pmf(k, K: int, a: float, b: float):
    """``P[S = k]`` for ``S ~ Binomial(K, Z)``, ``Z ~ Be(a, b)``."""
    k = np.asarray(k, dtype=float)
    lg = math.lgamma
    logc = np.array([lg(K + 1.0) - lg(x + 1.0) - lg(K - x + 1.0) for x in np.ravel(k)]).reshape(k.shape)
    lb = np.array([lg(x + a) + lg(K - x + b) - lg(K + a + b) for x in np.ravel(k)]).reshape(k.shape)
    return np.exp(logc + lb - (lg(a) + lg(b) - lg(a + b)))


@dataclass
class EpsStats:
    eps: float
    alpha_eps: float
    rate: float
    rate_se: float
    rate_exact: float
    jump_law: np.ndarray
    rho: CorrelationEstimate
    rho_exact: float
    identity: CorrelationEstimate


def compound_poisson_limit_stats(beta: float, r: float, eps_grid, K: int, samples: int,
                                 seed=None) -> list[EpsStats]:
    """Jump rate, jump-size law and correlation of the binned counts along ``eps``.

    For ``F = Be(a_eps, beta)`` with ``a_eps = beta r eps / (1 - r eps)``, the rate
    ``(1 - P[S = 0]) / eps`` and the law of ``S`` given ``S > 0`` converge as
    ``eps -> 0`` (compound Poisson limit) and the correlation tends to
    ``1 / (1 + beta)``.
    """
    out = []
    ss = np.random.SeedSequence(seed)
    for e, child in zip(eps_grid, ss.spawn(len(eps_grid))):
        F = MixingMeasure.beta_rate(beta, r, e)
        batch = sample_ind_model(F, K, samples, np.random.default_rng(child))
        s = np.asarray(batch.counts)
        nz = s > 0
        p_nz = nz.mean()
        rate_se = math.sqrt(p_nz * (1 - p_nz) / s.size) / e
        p0 = float(beta_binomial_pmf(0, K, F.a, F.b))
        law = np.bincount(s[nz], minlength=K + 1)[1:] / max(nz.sum(), 1)
        out.append(EpsStats(float(e), F.a, float(p_nz / e), rate_se, (1.0 - p0) / e, law,
                            pairwise_correlation(batch), F.correlation, jump_identity(batch)))
    return out


def subordinator_driven_spikes(law: SubordinatorLaw, rate_scale: float, K: int, T: float,
                               bin_eps: float, seed=None, cutoff: float = 1e-6,
                               generator: str = "binomial") -> SpikeBatch:
    """Counts driven by ``Z_j = rate_scale * (L(j eps) - L((j-1) eps))`` for the subordinator ``L``.

    ``Z_j`` is clamped into ``[0, 1]``; a :class:`ClampWarning` is issued when
    more than 0.1% of bins clamp.
    """
    if not (rate_scale >= 0 and bin_eps > 0 and T > 0):
        raise DomainError("need rate_scale >= 0, bin_eps > 0 and T > 0")
    J = int(round(T / bin_eps))
    if J < 1:
        raise DomainError("horizon shorter than one bin")
    rng = np.random.default_rng(seed)
    inc = sample_increment(law, bin_eps, cutoff, rng=rng, size=J)
    z = rate_scale * inc
    clamped = float(np.mean(z > 1.0))
    if clamped > 1e-3:
        warnings.warn(f"{clamped:.2%} of mixing values clamped to 1", ClampWarning, stacklevel=2)
    z = np.clip(z, 0.0, 1.0)
    return SpikeBatch(K, _spikes(rng, K, z, generator), bin_eps, seed, mixing=z, clamp_rate=clamped)
