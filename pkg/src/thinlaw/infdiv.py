"""Renewal and log-series decompositions of shifted laws X = D - m.

With u(n) = P(X = n) / P(X = 0) and U(s) = sum u(n) s^n:

* the renewal sequence f solves U = 1 / (1 - F);
* the log-series coefficients lambda solve U = exp(sum lambda(n) s^n).

Nonnegative lambda makes X compound Poisson, X = sum n Z_n with
Z_n ~ Poisson(lambda(n)), which :func:`compound_poisson_rebuild` realizes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from ._validation import check_int, check_probability
from .dist import DiscreteDist, tv_distance
from .exceptions import InvalidParams, InvalidSequence
from .tails import RatioRecursive

__all__ = [
    "InfDivDecomposition",
    "KaluzaResult",
    "compound_poisson_rebuild",
    "decompose",
    "kaluza_check",
    "log_series",
    "renewal_sequence",
]

NEG_SLACK = 1e-12
_POISSON_CUT = 1e-18


def _as_u(u):
    u = np.asarray(u, dtype=float).ravel()
    if u.size == 0 or u[0] != 1.0:
        raise InvalidSequence("u must start with u(0) = 1")
    if not np.all(np.isfinite(u)) or np.any(u <= 0):
        bad = int(np.flatnonzero(~(u > 0))[0]) if np.any(~(u > 0)) else -1
        raise InvalidSequence(f"u must be finite and positive (u({bad}) = {u[bad]!r})")
    return u


class KaluzaResult(NamedTuple):
    holds: bool
    first_violation: int | None
    min_ratio: float

    def __bool__(self):
        return self.holds


def kaluza_check(u, rtol=NEG_SLACK):
    """Log-convexity u(n-1) u(n+1) >= u(n)^2 on the stored range.

    ``min_ratio`` is the smallest observed u(n)/u(n+1); the limit-infimum
    condition can only be checked on this finite range, so it holds iff that
    minimum is positive.
    """
    u = _as_u(u)
    min_ratio = float(np.min(u[:-1] / u[1:])) if u.size > 1 else math.inf
    if u.size < 3:
        return KaluzaResult(min_ratio > 0, None, min_ratio)
    lhs, rhs = u[:-2] * u[2:], u[1:-1] ** 2
    bad = np.flatnonzero(lhs < rhs * (1 - rtol))
    first = int(bad[0]) + 1 if bad.size else None
    return KaluzaResult(first is None and min_ratio > 0, first, min_ratio)


def _dot(a, b, compensated):
    return math.fsum(a * b) if compensated else float(np.dot(a, b))


def renewal_sequence(u, compensated=False):
    """f(1..N) with u(n) = sum_{k=1}^n f(k) u(n-k); returned with f[0] = 0."""
    u = _as_u(u)
    f = np.zeros(u.size)
    for n in range(1, u.size):
        f[n] = u[n] - _dot(f[1:n], u[n - 1 : 0 : -1], compensated)
    return f


def log_series(u, compensated=False):
    """lambda(1..N) with log U(s) = sum lambda(n) s^n; returned with lambda[0] = 0."""
    u = _as_u(u)
    lam = np.zeros(u.size)
    klam = np.zeros(u.size)  # k * lambda(k)
    for n in range(1, u.size):
        klam[n] = n * u[n] - _dot(klam[1:n], u[n - 1 : 0 : -1], compensated)
    lam[1:] = klam[1:] / np.arange(1, u.size)
    return lam


def compound_poisson_rebuild(lam, p0, support_size):
    """Law of sum_n n Z_n, Z_n ~ Poisson(lam[n]), rescaled so P(0) = p0.

    ``lam[0]`` is ignored. Factors are convolved in ascending n directly on
    the sparse lattice of multiples of n, so every term is nonnegative and
    small probabilities keep full relative accuracy.
    """
    lam = np.asarray(lam, dtype=float).ravel()
    p0 = check_probability(p0, "p0", open_interval=False)
    if p0 == 0:
        raise InvalidParams("p0 must be positive")
    size = check_int(support_size, "support_size", min_value=1)
    if np.any(lam[1:] < -NEG_SLACK):
        n = int(np.flatnonzero(lam[1:] < -NEG_SLACK)[0]) + 1
        raise InvalidParams(f"lambda({n}) = {lam[n]!r} is negative")
    acc = np.zeros(size)
    acc[0] = 1.0
    for n in range(1, min(lam.size, size)):
        rate = max(lam[n], 0.0)
        if rate == 0.0:
            continue
        jmax = (size - 1) // n
        j = np.arange(min(jmax, int(rate + 40 * np.sqrt(rate) + 60)) + 1)
        # keep factor terms until the Poisson tail drops below the cut
        below = np.flatnonzero(stats.poisson.sf(j, rate) < _POISSON_CUT)
        weights = stats.poisson.pmf(j[: below[0] + 1] if below.size else j, rate)
        new = weights[0] * acc
        for j in range(1, weights.size):
            new[j * n :] += weights[j] * acc[: size - j * n]
        acc = new
    acc *= p0 / acc[0]
    total = acc.sum()
    return DiscreteDist(0, acc, max(0.0, 1.0 - total))


@dataclass
class InfDivDecomposition:
    m: int
    p0: float
    u: np.ndarray
    f: np.ndarray
    lam: np.ndarray
    reconstruction_tv: float
    kaluza: KaluzaResult
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "m": self.m,
            "p0": self.p0,
            "u": self.u.tolist(),
            "f": self.f[1:].tolist(),
            "lambda": self.lam[1:].tolist(),
            "reconstruction_tv": self.reconstruction_tv,
            "kaluza": {
                "holds": self.kaluza.holds,
                "first_violation": self.kaluza.first_violation,
                "min_ratio": self.kaluza.min_ratio if math.isfinite(self.kaluza.min_ratio) else None,
            },
            "min_f": float(self.f[1:].min()) if self.f.size > 1 else None,
            "min_lambda": float(self.lam[1:].min()) if self.lam.size > 1 else None,
            **self.extra,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "u", "f", "lambda"])
        for n in range(self.u.size):
            f = "" if n == 0 else repr(float(self.f[n]))
            lam = "" if n == 0 else repr(float(self.lam[n]))
            writer.writerow([n, repr(float(self.u[n])), f, lam])
        return buf.getvalue()


def _u_from(dist, m, size):
    spec = dist.tail
    if isinstance(spec, RatioRecursive) and size > 1:
        # fixed-point ratio law u(n)/u(n-1) = (m + n - beta)/(m + n)
        n = np.arange(1, size, dtype=float)
        ratios = (m + n - spec.beta) / (m + n)
        stored = dist.probs[1:size] / dist.probs[: size - 1]
        if np.allclose(stored, ratios, rtol=1e-12, atol=0):
            return np.concatenate([[1.0], np.cumprod(ratios)])
    return dist.probs[:size] / dist.probs[0]


def decompose(dist, m, n_max=None, *, support_size=None, compensated=False):
    """Shift to X = D - m and run the renewal, log-series and rebuild chain.

    ``n_max`` bounds the u, f, lambda sequences (default: the stored range);
    ``support_size`` is the truncation of the compound-Poisson rebuild
    (default: n_max + 1).
    """
    m = check_int(m, "m", min_value=0)
    if dist.probs.size == 0 or dist.offset != m:
        raise InvalidParams(f"need support in {{m, m+1, ...}} with P(D = m) > 0 for m = {m}")
    stored = dist.probs.size
    n_max = stored - 1 if n_max is None else min(check_int(n_max, "n_max", min_value=0), stored - 1)
    size = n_max + 1
    u = _u_from(dist, m, size)
    p0 = float(dist.probs[0])
    f = renewal_sequence(u, compensated)
    lam = log_series(u, compensated)
    rebuild_size = size if support_size is None else min(check_int(support_size, "support_size", min_value=1), size)
    rebuild = compound_poisson_rebuild(lam[:rebuild_size], p0, rebuild_size)
    shifted = DiscreteDist(0, dist.probs, dist.tail_mass).truncated(rebuild_size - 1)
    return InfDivDecomposition(
        m=m,
        p0=p0,
        u=u,
        f=f,
        lam=lam,
        reconstruction_tv=tv_distance(shifted, rebuild),
        kaluza=kaluza_check(u),
    )
