"""Gauss rules on [0, 1] and a small adaptive integrator.

Gauss-Jacobi nodes are produced by the Golub-Welsch eigenvalue method from the
three-term recurrence of the Jacobi polynomials, so the weight
``x**p * (1 - x)**q`` is integrated exactly and only the smooth factor of the
integrand is sampled.
"""

from __future__ import annotations

import math
import threading
from functools import lru_cache

import numpy as np

from .errors import DomainError, QuadratureError

__all__ = [
    "gauss_legendre",
    "gauss_jacobi",
    "jacobi_integral",
    "adaptive_integral",
]


@lru_cache(maxsize=64)
def _legendre_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (t + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, lo: float = 0.0, hi: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``n``-point Gauss-Legendre rule on ``[lo, hi]``."""
    if n < 1:
        raise DomainError("need at least one node")
    x, w = _legendre_unit(n)
    h = hi - lo
    return lo + h * x, h * w


_jacobi_lock = threading.Lock()
_jacobi_cache: dict[tuple[int, float, float], tuple[np.ndarray, np.ndarray]] = {}


def gauss_jacobi(n: int, p: float, q: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule on [0, 1] for the weight ``x**p * (1 - x)**q``.

    Parameters
    ----------
    n : int
        Number of nodes.
    p, q : float
        Exponents at the left and right endpoint, both ``> -1``.

    Returns
    -------
    x, w : ndarray
        Nodes in increasing order and positive weights; ``w.sum()`` equals
        ``B(p + 1, q + 1)``.
    """
    if n < 1:
        raise DomainError("need at least one node")
    if p <= -1.0 or q <= -1.0:
        raise DomainError(f"Jacobi exponents must exceed -1, got p={p}, q={q}")
    key = (int(n), float(p), float(q))
    with _jacobi_lock:
        hit = _jacobi_cache.get(key)
    if hit is not None:
        return hit

    # Jacobi weight (1 - t)^a (1 + t)^b on [-1, 1]; x = (1 + t) / 2.
    a, b = float(q), float(p)
    k = np.arange(n, dtype=float)
    s = 2.0 * k + a + b
    diag = np.empty(n)
    diag[0] = (b - a) / (a + b + 2.0)
    if n > 1:
        sk = s[1:]
        diag[1:] = (b * b - a * a) / (sk * (sk + 2.0))
    off = np.empty(max(n - 1, 0))
    if n > 1:
        # k = 1 written with the (1 + a + b) factor cancelled; it vanishes
        # in numerator and denominator when a + b = -1.
        off[0] = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b) ** 2 * (3.0 + a + b))
        kk = k[2:]
        sk = 2.0 * kk + a + b
        off[1:] = (4.0 * kk * (kk + a) * (kk + b) * (kk + a + b)
                   / (sk * sk * (sk + 1.0) * (sk - 1.0)))
    jac = np.diag(diag) + np.diag(np.sqrt(off), 1) + np.diag(np.sqrt(off), -1)
    t, vec = np.linalg.eigh(jac)
    log_mu0 = (math.lgamma(a + 1.0) + math.lgamma(b + 1.0) - math.lgamma(a + b + 2.0))
    w = math.exp(log_mu0) * vec[0, :] ** 2
    x = 0.5 * (t + 1.0)
    x = np.clip(x, 0.0, 1.0)
    x.setflags(write=False)
    w.setflags(write=False)
    with _jacobi_lock:
        _jacobi_cache[key] = (x, w)
    return x, w


def jacobi_integral(f, p: float, q: float, lo: float = 0.0, hi: float = 1.0,
                    n: int = 40, rtol: float = 1e-7) -> float:
    """Integrate ``(x-lo)**p (hi-x)**q f(x)`` over ``[lo, hi]`` with an n/2n check.

    ``f`` must accept an array of nodes. Raises :class:`QuadratureError` when the
    two rules disagree by more than ``rtol`` relative.
    """
    h = hi - lo
    scale = h ** (p + q + 1.0)
    vals = []
    for m in (n, 2 * n):
        x, w = gauss_jacobi(m, p, q)
        vals.append(scale * float(np.dot(w, f(lo + h * x))))
    coarse, fine = vals
    if abs(fine - coarse) > rtol * max(abs(fine), 1e-300):
        raise QuadratureError(
            f"Gauss-Jacobi rules with {n} and {2 * n} nodes disagree: {coarse!r} vs {fine!r}")
    return fine


def adaptive_integral(f, lo: float, hi: float, rtol: float = 1e-10, atol: float = 0.0,
                      order: int = 20, max_panels: int = 4000) -> float:
    """Adaptive Gauss-Legendre integration of a vectorised ``f`` over ``[lo, hi]``.

    Each panel is accepted when rules with ``order`` and ``2*order`` nodes agree
    to the panel's share of the tolerance; otherwise it is bisected.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError("finite limits required")
    if hi == lo:
        return 0.0
    xc, wc = _legendre_unit(order)
    xf, wf = _legendre_unit(2 * order)

    def panel(a, b):
        h = b - a
        fine = h * float(np.dot(wf, f(a + h * xf)))
        coarse = h * float(np.dot(wc, f(a + h * xc)))
        return fine, abs(fine - coarse)

    total_est, _ = panel(lo, hi)
    stack = [(lo, hi)]
    total = 0.0
    pieces = []
    panels = 0
    while stack:
        a, b = stack.pop()
        fine, err = panel(a, b)
        panels += 1
        width = (b - a) / (hi - lo)
        tol = max(rtol * abs(total_est), atol) * width
        if err <= tol or err <= 1e-15 * abs(fine) or panels >= max_panels:
            if panels >= max_panels and err > tol:
                raise QuadratureError(f"adaptive quadrature exceeded {max_panels} panels")
            pieces.append(fine)
        else:
            m = 0.5 * (a + b)
            stack.append((m, b))
            stack.append((a, m))
    pieces.sort(key=abs)
    total = math.fsum(pieces)
    return total
