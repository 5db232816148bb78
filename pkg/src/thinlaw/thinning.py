"""Binomial thinning, conditioning, and the transform T_{p,m}.

For output points n <= upto, thinning needs the input law only up to a
*horizon* L with P(Bin(L, p) <= upto) negligible. Stored mass past the
horizon goes straight to the output tail. An analytic input tail is
materialized up to the horizon (capped at ``max_materialize`` points); if the
horizon lies beyond the cap, the rest of the continuation is integrated by
Gauss-Legendre quadrature with an Euler-Maclaurin end correction.

Stored sums run either as a direct binomial matrix product (small problems)
or as a divide-and-conquer Horner composition of sum_l w_l (q + p s)^l with
FFT convolutions (large problems, O(L log L) instead of O(L * upto)).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import fft, signal, stats

from ._special import binomial_logpmf_rows
from ._validation import CONDITIONING_FLOOR, check_int, check_probability
from .dist import DiscreteDist, tail, tv_distance
from .exceptions import DegenerateConditioning, InvalidParams

__all__ = [
    "MAX_MATERIALIZE",
    "TransformParams",
    "condition_at_least",
    "input_horizon",
    "russo_residual",
    "thin",
    "transform",
    "verify_semigroup",
]

MAX_MATERIALIZE = 1 << 21
HORIZON_EPS = 1e-20
HORIZON_CAP = 1 << 62
_DIRECT_OPS = 4_000_000
_FAR_TAIL_OPS = 200_000_000
_LEAF = 64
_GL_X, _GL_W = leggauss(16)


@dataclass(frozen=True)
class TransformParams:
    """Retention probability ``p`` and conditioning threshold ``m`` of T_{p,m}."""

    p: float
    m: int

    def __post_init__(self):
        object.__setattr__(self, "p", check_probability(self.p, "p"))
        object.__setattr__(self, "m", check_int(self.m, "m", min_value=1))


def input_horizon(upto, p, eps=HORIZON_EPS):
    """Smallest L with P(Bin(L, p) <= upto) < eps, capped at 2^62."""
    lo = upto
    hi = min(HORIZON_CAP, max(upto + 1, int(np.ceil((upto + 1) / p))))
    while hi < HORIZON_CAP and stats.binom.cdf(upto, float(hi), p) >= eps:
        lo, hi = hi, min(2 * hi, HORIZON_CAP)
    if hi == HORIZON_CAP:
        return hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if stats.binom.cdf(upto, float(mid), p) >= eps:
            lo = mid
        else:
            hi = mid
    return hi


def _thin_direct(dist, p, upto):
    n = np.arange(upto + 1)
    out = np.zeros(upto + 1)
    # chunk over input points to bound the matrix size
    step = max(1, _DIRECT_OPS // (upto + 1))
    for i in range(0, dist.probs.size, step):
        l = dist.offset + np.arange(i, min(i + step, dist.probs.size))
        out += stats.binom.pmf(n[:, None], l[None, :], p) @ dist.probs[i : i + step]
    return out


def _compose(w, p, upto, leaf=_LEAF):
    """Coefficients 0..upto of sum_l w[l] (1 - p + p s)^l."""
    nb = -(-w.size // leaf)
    padded = np.zeros(nb * leaf)
    padded[: w.size] = w
    ncol = min(leaf, upto + 1)
    base = stats.binom.pmf(np.arange(ncol)[None, :], np.arange(leaf)[:, None], p)
    rows = padded.reshape(nb, leaf) @ base
    size = leaf
    # block i holds poly_i(s); merge pairs as even + (q + p s)^size * odd
    while rows.shape[0] > 1:
        if rows.shape[0] % 2:
            rows = np.vstack([rows, np.zeros((1, rows.shape[1]))])
        even, odd = rows[0::2], rows[1::2]
        power = stats.binom.pmf(np.arange(min(size, upto) + 1), size, p)
        width = min(2 * size, upto + 1)
        nfft = fft.next_fast_len(odd.shape[1] + power.size - 1, real=True)
        merged = fft.irfft(
            fft.rfft(odd, nfft, axis=1) * fft.rfft(power, nfft)[None, :], nfft, axis=1
        )[:, :width]
        merged[:, : even.shape[1]] += even
        rows, size = merged, 2 * size
    out = np.zeros(upto + 1)
    top = min(rows.shape[1], upto + 1)
    out[:top] = rows[0, :top]
    return out


def _thin_fft(dist, p, upto):
    out = _compose(dist.probs, p, upto)
    if dist.offset:
        shift = stats.binom.pmf(np.arange(min(dist.offset, upto) + 1), dist.offset, p)
        out = signal.fftconvolve(out, shift)[: upto + 1]
    return out


def _thin_stored(dist, p, upto):
    if dist.probs.size == 0:
        return np.zeros(upto + 1)
    if (upto + 1) * dist.probs.size <= _DIRECT_OPS:
        return _thin_direct(dist, p, upto)
    return _thin_fft(dist, p, upto)


def _panels(start, stop, p):
    edges = [float(start)]
    while edges[-1] < stop:
        x = edges[-1]
        edges.append(x + min(1 / p, max(x / 4, 1.0)))
    return np.asarray(edges)


def _far_tail(dist, p, upto, start):
    """sum_{l >= start} cont(l) P(Bin(l, p) = n) for n = 0..upto, or None if too costly."""
    stop = (upto + 12 * np.sqrt(upto + 1) + 80) / p
    if start >= stop:
        return np.zeros(upto + 1)
    edges = _panels(start, stop, p)
    half = np.diff(edges)[:, None] / 2
    nodes = ((edges[:-1, None] + edges[1:, None]) / 2 + half * _GL_X[None, :]).ravel()
    weights = (half * _GL_W[None, :]).ravel()
    x = np.concatenate([nodes, [start - 0.5, start, start + 0.5]])
    if (upto + 1) * x.size > _FAR_TAIL_OPS or start - 0.5 <= upto:
        return None
    logshape = dist.log_anchor + dist.tail.logshape(x)
    out = np.empty(upto + 1)
    k = nodes.size
    for n, logb in binomial_logpmf_rows(x, upto, p):
        logf = logshape + logb
        f = np.exp(logf)
        # Euler-Maclaurin: sum_{l>=a} f(l) = int_a^inf f + f(a)/2 - f'(a)/12 + ...
        fprime = f[k + 1] * (logf[k + 2] - logf[k])
        out[n] = f[:k] @ weights + f[k + 1] / 2 - fprime / 12
    return out


def thin(dist, p, upto=None, *, max_materialize=MAX_MATERIALIZE):
    """Law of S_D = Bin(D, p), stored on {0, ..., upto}.

    ``upto`` defaults to the input's stored end. Mass the computation does
    not resolve (input mass with no analytic continuation, and everything
    thinned above ``upto``) becomes the output ``tail_mass``.
    """
    p = check_probability(p, "p")
    upto = max(dist.end, 0) if upto is None else check_int(upto, "upto", min_value=0)
    if dist.probs.size == 0:
        return DiscreteDist(0, [], 1.0)
    horizon = input_horizon(upto, p)
    work, far_from = dist, None
    if dist.tail.analytic and dist.end < horizon:
        target = min(horizon, max(dist.end, max_materialize))
        work = dist.extended(target)
        if target < horizon and work.tail.analytic:
            far_from = work.end + 1
    elif dist.end > horizon:
        work = dist.truncated(horizon)

    body = _thin_stored(work, p, upto)
    far = None
    if far_from is not None:
        far = _far_tail(work, p, upto, far_from)
        if far is None:
            work = dist.extended(horizon)
            body = _thin_stored(work, p, upto)
    # mass thinned above upto, summed directly rather than as 1 - sum(body),
    # which would cancel when P(S >= m) is tiny
    overflow = _overflow(work, p, upto)
    if far is None:
        overflow += work.tail_mass
    else:
        body = body + far
        overflow += max(0.0, work.tail_mass - far.sum())
    body = np.clip(body, 0.0, None)
    return DiscreteDist(0, body, overflow)


def _overflow(dist, p, upto):
    """sum_l P(D = l) P(Bin(l, p) > upto) over the stored block."""
    lo = max(dist.offset, upto + 1)
    if lo > dist.end:
        return 0.0
    l = np.arange(lo, dist.end + 1, dtype=float)
    return float(stats.binom.sf(upto, l, p) @ dist.probs[lo - dist.offset :])


def condition_at_least(dist, m):
    """Law of (D | D >= m)."""
    m = check_int(m, "m", min_value=0)
    mass = tail(dist, m)
    if not mass > CONDITIONING_FLOOR:
        raise DegenerateConditioning(
            f"P(D >= {m}) = {mass:.3e} is at or below {CONDITIONING_FLOOR:g}", m=m, mass=mass
        )
    cut = max(0, m - dist.offset)
    return DiscreteDist(
        max(dist.offset, m), dist.probs[cut:] / mass, dist.tail_mass / mass, dist.tail
    )


def transform(dist, params, upto=None):
    """T_{p,m}: thin with retention ``params.p``, then condition on S >= ``params.m``."""
    thinned = thin(dist, params.p, upto)
    try:
        return condition_at_least(thinned, params.m)
    except DegenerateConditioning as exc:
        raise DegenerateConditioning(
            f"{exc} after thinning with p = {params.p!r}", m=params.m, mass=exc.mass, p=params.p
        ) from exc


def verify_semigroup(dist, p, q, m, upto=None):
    """TV between T_q(T_p(dist)) and T_{pq}(dist)."""
    p, q = check_probability(p, "p"), check_probability(q, "q")
    chained = transform(transform(dist, TransformParams(p, m), upto), TransformParams(q, m), upto)
    direct = transform(dist, TransformParams(p * q, m), upto)
    return tv_distance(chained, direct)


def russo_residual(dist, p, k, h=None, relative=False):
    """|d/dp P(S_D >= k) - (k / p) P(S_D = k)| with a central difference in p."""
    p = check_probability(p, "p")
    k = check_int(k, "k", min_value=1)
    if h is None:
        h = max(1e-6, 1e-4 * p)
    if not 0 < h < p < 1 - h:
        raise InvalidParams(f"need 0 < h < p < 1 - h, got h={h!r}, p={p!r}")

    def upper(q):
        return 1.0 - thin(dist, q, k).dense(0, k - 1).sum()

    slope = (upper(p + h) - upper(p - h)) / (2 * h)
    rhs = k / p * thin(dist, p, k).pmf(k)
    res = abs(slope - rhs)
    return res / abs(rhs) if relative else res
