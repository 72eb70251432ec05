"""Compiled path kernels.

Every path owns a xoshiro256** stream (four ``uint64`` words plus a slot for
the spare polar-method normal), so a path's trajectory depends only on its
seed words and never on which thread or batch simulated it.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_U53 = 1.0 / 9007199254740992.0
# States below this are set to 0: they add at most T * scale * 1e-30 to A, and
# the chance that they lead the next step anywhere else than a step from 0
# is below 1e-25.
X_FLOOR = 1e-30
_LOG_FLOOR = math.log(X_FLOOR)

# status codes
OK = 0
NONFINITE = 1


@njit(cache=True)
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True)
def next_u64(s):
    s0 = s[0]
    s1 = s[1]
    s2 = s[2]
    s3 = s[3]
    r = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
    t = s1 << np.uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    s[0] = s0
    s[1] = s1
    s[2] = s2
    s[3] = s3
    return r


@njit(cache=True)
def uniform(s):
    """Uniform on the open interval (0, 1)."""
    return ((next_u64(s) >> np.uint64(11)) + 0.5) * _U53


@njit(cache=True)
def normal(s, spare):
    if spare[0] != 0.0:
        spare[0] = 0.0
        return spare[1]
    while True:
        u = 2.0 * uniform(s) - 1.0
        v = 2.0 * uniform(s) - 1.0
        q = u * u + v * v
        if 0.0 < q < 1.0:
            f = math.sqrt(-2.0 * math.log(q) / q)
            spare[0] = 1.0
            spare[1] = v * f
            return u * f


@njit(cache=True)
def gamma_ge1(s, spare, a):
    """Gamma(a, 1) for a >= 1 (Marsaglia-Tsang)."""
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = normal(s, spare)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = uniform(s)
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2:
            return d * v
        if math.log(u) < 0.5 * x2 + d * (1.0 - v + math.log(v)):
            return d * v


@njit(cache=True)
def log_gamma_variate(s, spare, a):
    """``log G`` with ``G ~ Gamma(a, 1)``; stable for shapes far below one."""
    if a >= 1.0:
        return math.log(gamma_ge1(s, spare, a))
    return math.log(gamma_ge1(s, spare, a + 1.0)) + math.log(uniform(s)) / a


@njit(cache=True)
def poisson(s, m):
    if m <= 0.0:
        return 0
    if m < 10.0:
        lim = math.exp(-m)
        k = 0
        p = uniform(s)
        while p > lim:
            k += 1
            p *= uniform(s)
        return k
    # transformed rejection (Hormann's PTRS)
    slam = math.sqrt(m)
    loglam = math.log(m)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = uniform(s) - 0.5
        v = uniform(s)
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + m + 0.43)
        if us >= 0.07 and v <= vr:
            return int(k)
        if k < 0.0 or (us < 0.013 and v > us):
            continue
        if (math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)
                <= -m + k * loglam - math.lgamma(k + 1.0)):
            return int(k)


@njit(cache=True)
def _cir_step(s, spare, x, e, cc, half_df):
    """Exact square-root diffusion transition: ``cc`` times a noncentral chi-square."""
    nc = x * e / (2.0 * cc)
    n = poisson(s, nc)
    sh = half_df + n
    if sh >= 1.0:
        return 2.0 * cc * gamma_ge1(s, spare, sh)
    lu = math.log(uniform(s)) / sh
    lc = math.log(2.0 * cc)
    # the result lands below the floor unless Gamma(1 + sh) > e^5 (probability < 1e-60)
    if lu + lc + 5.0 < _LOG_FLOOR:
        return 0.0
    xn = math.exp(lc + math.log(gamma_ge1(s, spare, sh + 1.0)) + lu)
    return xn if xn >= X_FLOOR else 0.0


@njit(cache=True)
def _accumulate(lap, g, el, mu, d_a, dt):
    for p in range(g.size):
        old = g[p]
        z = mu[p] * d_a
        if z > 1e-17:
            g[p] = old * el[p] * math.exp(-z)
        else:
            g[p] = old * el[p]
        lap[p] += 0.5 * dt * (old + g[p])


@njit(cache=True, nogil=True)
def sqrt_diffusion_paths(seeds, x0, stationary, wf, kappa, theta, sigma2, a_scale,
                         dt, nsteps, rec_every, scheme, lam, mu,
                         out_x, out_a, out_lap, rec_x, rec_a, rec_min, status):
    """Wright-Fisher (``wf=True``) or Feller paths.

    Generator ``kappa (theta - x) f' + (sigma2 / 2) x h(x) f''`` with
    ``h(x) = 1 - x`` for Wright-Fisher and ``h = 1`` for Feller; the functional
    is ``A = a_scale * int X``.

    ``scheme`` 0: square-root (CIR) transition with ``h`` frozen at the start
    of the step, exact for Feller; 1: Euler with full truncation and clamping.
    """
    npaths = seeds.shape[0]
    npairs = lam.size
    e = math.exp(-kappa * dt)
    c0 = sigma2 * (-math.expm1(-kappa * dt)) / (4.0 * kappa)
    half_df0 = 2.0 * kappa * theta / sigma2
    sq = math.sqrt(dt)
    upper = 1.0 - 1e-12
    el = np.empty(npairs)
    for p in range(npairs):
        el[p] = math.exp(-lam[p] * dt)
    g = np.empty(npairs)
    spare = np.zeros(2)
    s = np.empty(4, dtype=np.uint64)
    for i in range(npaths):
        for k in range(4):
            s[k] = seeds[i, k]
        spare[0] = 0.0
        if stationary:
            if wf:
                la = log_gamma_variate(s, spare, theta * kappa * 2.0 / sigma2)
                lb = log_gamma_variate(s, spare, (1.0 - theta) * kappa * 2.0 / sigma2)
                d = lb - la
                x = math.exp(-d) if d > 700.0 else 1.0 / (1.0 + math.exp(d))
                if x > upper:
                    x = upper
            else:
                # Gamma(shape 2 kappa theta / sigma2, rate 2 kappa / sigma2)
                x = math.exp(log_gamma_variate(s, spare, half_df0)) * sigma2 / (2.0 * kappa)
        else:
            x = x0[i]
        a = 0.0
        for p in range(npairs):
            g[p] = 1.0
            out_lap[i, p] = 0.0
        rec_x[i, 0] = x
        rec_a[i, 0] = 0.0
        rec_min[i, 0] = x
        wmin = x
        j = 0
        st = OK
        for step in range(nsteps):
            if scheme == 0 and not (wf and x > 0.999):
                h = 1.0 - x if wf else 1.0
                xn = _cir_step(s, spare, x, e, c0 * h, half_df0 / h)
            else:
                xp = x if x > 0.0 else 0.0
                h = 1.0 - xp if wf else 1.0
                xn = (x + kappa * (theta - xp) * dt
                      + math.sqrt(sigma2 * xp * h) * sq * normal(s, spare))
                if xn < 0.0:
                    xn = 0.0
            if wf and xn > upper:
                xn = upper
            if not math.isfinite(xn):
                st = NONFINITE
                break
            d_a = 0.5 * dt * a_scale * (x + xn)
            a += d_a
            if npairs > 0:
                _accumulate(out_lap[i], g, el, mu, d_a, dt)
            x = xn
            if x < wmin:
                wmin = x
            if (step + 1) % rec_every == 0:
                j += 1
                if j < rec_x.shape[1]:
                    rec_x[i, j] = x
                    rec_a[i, j] = a
                    rec_min[i, j] = wmin
                wmin = x
        out_x[i] = x
        out_a[i] = a
        status[i] = st


@njit(cache=True, nogil=True)
def reflected_bm_paths(seeds, x0, stationary, n, beta, dt, nsteps, rec_every, lam, mu,
                       out_x, out_a, out_lap, rec_x, rec_a, rec_min, status):
    """Reflected Brownian motion with generator ``n f'' - n beta f'``; ``A = beta int X``.

    Exact on the grid: with free increment ``W`` and its running minimum ``m``
    over the step (sampled from the Brownian-bridge law),
    ``X' = max(X + W, W - m)``. A reflection inside the step is recorded as a
    visit to 0.
    """
    npaths = seeds.shape[0]
    npairs = lam.size
    drift = -n * beta * dt
    var = 2.0 * n * dt
    sd = math.sqrt(var)
    el = np.empty(npairs)
    for p in range(npairs):
        el[p] = math.exp(-lam[p] * dt)
    g = np.empty(npairs)
    spare = np.zeros(2)
    s = np.empty(4, dtype=np.uint64)
    for i in range(npaths):
        for k in range(4):
            s[k] = seeds[i, k]
        spare[0] = 0.0
        if stationary:
            x = -math.log(uniform(s)) / beta
        else:
            x = x0[i]
        a = 0.0
        for p in range(npairs):
            g[p] = 1.0
            out_lap[i, p] = 0.0
        rec_x[i, 0] = x
        rec_a[i, 0] = 0.0
        rec_min[i, 0] = x
        wmin = x
        j = 0
        st = OK
        for step in range(nsteps):
            w = drift + sd * normal(s, spare)
            m = 0.5 * (w - math.sqrt(w * w - 2.0 * var * math.log(uniform(s))))
            free = x + w
            if x + m <= 0.0:
                xn = w - m
                wmin = 0.0
            else:
                xn = free
            if not math.isfinite(xn):
                st = NONFINITE
                break
            d_a = 0.5 * dt * beta * (x + xn)
            a += d_a
            if npairs > 0:
                _accumulate(out_lap[i], g, el, mu, d_a, dt)
            x = xn
            if x < wmin:
                wmin = x
            if (step + 1) % rec_every == 0:
                j += 1
                if j < rec_x.shape[1]:
                    rec_x[i, j] = x
                    rec_a[i, j] = a
                    rec_min[i, j] = wmin
                wmin = x
        out_x[i] = x
        out_a[i] = a
        status[i] = st


@njit(cache=True)
def fill_uniform(seed_words, out):
    """Test hook: raw draws of one stream."""
    s = seed_words.copy()
    for i in range(out.size):
        out[i] = uniform(s)


@njit(cache=True)
def fill_normal(seed_words, out):
    s = seed_words.copy()
    spare = np.zeros(2)
    for i in range(out.size):
        out[i] = normal(s, spare)


@njit(cache=True)
def fill_gamma(seed_words, a, out):
    s = seed_words.copy()
    spare = np.zeros(2)
    for i in range(out.size):
        out[i] = log_gamma_variate(s, spare, a)


@njit(cache=True)
def fill_poisson(seed_words, m, out):
    s = seed_words.copy()
    for i in range(out.size):
        out[i] = poisson(s, m)


@njit(cache=True)
def fill_cir(seed_words, x, e, cc, half_df, out):
    s = seed_words.copy()
    spare = np.zeros(2)
    for i in range(out.size):
        out[i] = _cir_step(s, spare, x, e, cc, half_df)
