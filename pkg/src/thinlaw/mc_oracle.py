"""Monte-Carlo cross-checks of the exact transform.

Samples D by inversion (stored block) or by inverting the analytic survival
function (tail), thins each draw with an exact binomial variate, and
conditions by rejection. Draws are generated in fixed-size chunks, each with
its own Philox stream spawned from the user's 64-bit seed, so results do not
depend on how chunks are scheduled.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_int, check_probability
from .dist import DiscreteDist, tv_distance
from .exceptions import AcceptanceTooLow, InvalidParams, TailUnsampleable
from .thinning import TransformParams, transform

__all__ = ["SampleReport", "mc_transform", "sample_dist", "MC_WINDOW", "SATURATION"]

MC_WINDOW = 100
SATURATION = 1 << 62
MIN_ACCEPTED = 100
_OPAQUE_TAIL_LIMIT = 1e-6
_CHUNK = 1 << 20
#: marker for draws that landed in an opaque (non-analytic) tail lump
FLAGGED = -1


def _check_seed(seed):
    seed = check_int(seed, "seed", min_value=0)
    if seed >= 1 << 64:
        raise InvalidParams("seed must fit in 64 bits")
    return seed


def _generators(seed, n):
    chunks = -(-n // _CHUNK)
    children = np.random.SeedSequence(seed).spawn(chunks)
    for i, child in enumerate(children):
        yield np.random.Generator(np.random.Philox(child)), min(_CHUNK, n - i * _CHUNK)


def _sample_tail(dist, v):
    """Inverse survival past the stored block: smallest k with P(D > k | D > end) < v."""
    spec, first = dist.tail, dist.end + 1
    base = spec.logsurv(float(first))
    target = np.log(v)

    def log_surv(k):
        # log P(D >= k | D >= first)
        return spec.logsurv(k.astype(float)) - base

    lo = np.full(v.shape, first, dtype=np.int64)  # log_surv(lo) >= target
    hi = np.full(v.shape, first + 1, dtype=np.int64)
    active = log_surv(hi) >= target
    while np.any(active) and np.any(hi[active] < SATURATION):
        lo[active] = hi[active]
        hi[active] = np.minimum(2 * hi[active], SATURATION)
        active &= log_surv(hi) >= target
    saturated = active
    # invariant: log_surv(lo) >= target > log_surv(hi)
    while True:
        gap = (hi - lo > 1) & ~saturated
        if not np.any(gap):
            break
        mid = lo + (hi - lo) // 2
        ok = log_surv(mid) >= target
        lo = np.where(gap & ok, mid, lo)
        hi = np.where(gap & ~ok, mid, hi)
    return np.where(saturated, SATURATION, lo)


def _draw(dist, rng, n):
    u = rng.random(n)
    stored = dist.probs.sum()
    out = np.empty(n, dtype=np.int64)
    body = u < stored
    cdf = np.cumsum(dist.probs)
    idx = np.minimum(np.searchsorted(cdf, u[body], side="right"), dist.probs.size - 1)
    out[body] = dist.offset + idx
    if np.any(~body):
        if dist.tail.analytic:
            # survival level conditional on landing past the block, in (0, 1]
            v = np.clip((1.0 - u[~body]) / (1.0 - stored), np.finfo(float).tiny, 1.0)
            out[~body] = _sample_tail(dist, v)
        else:
            out[~body] = FLAGGED
    return out


def sample_dist(dist, n, seed):
    """n draws of D; draws in an opaque tail lump (<= 1e-6 mass) come back as -1."""
    n = check_int(n, "n", min_value=1)
    seed = _check_seed(seed)
    if dist.tail_mass > _OPAQUE_TAIL_LIMIT and not dist.tail.analytic:
        raise TailUnsampleable(
            f"tail mass {dist.tail_mass:.3e} has no analytic continuation to sample from"
        )
    if dist.probs.size == 0:
        raise TailUnsampleable("distribution stores no probabilities")
    return np.concatenate([_draw(dist, rng, k) for rng, k in _generators(seed, n)])


@dataclass
class SampleReport:
    n_samples: int
    n_accepted: int
    n_flagged: int
    empirical: DiscreteDist
    exact: DiscreteDist
    tv_vs_exact: float
    bound: float
    seed: int
    p: float
    m: int
    window: int
    samples: np.ndarray | None = field(default=None, repr=False)

    @property
    def within_bound(self):
        return self.tv_vs_exact <= self.bound

    def to_dict(self):
        return {
            "n_samples": self.n_samples,
            "n_accepted": self.n_accepted,
            "n_flagged": self.n_flagged,
            "seed": self.seed,
            "p": self.p,
            "m": self.m,
            "window": self.window,
            "tv_vs_exact": self.tv_vs_exact,
            "bound": self.bound,
            "within_bound": self.within_bound,
            "empirical": self.empirical.to_dict(include_tail=False),
            "exact": self.exact.to_dict(include_tail=False),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def raw_lines(self):
        """Accepted thinned values, one integer per line."""
        if self.samples is None:
            raise InvalidParams("samples were not kept; rerun with keep_samples=True")
        return "".join(f"{int(x)}\n" for x in self.samples)


def _lumped(values, m, window, total):
    counts = np.bincount(values - m, minlength=window + 1)
    body = counts[:window]
    over = counts[window:].sum()
    return DiscreteDist(m, body / total, over / total)


def mc_transform(dist, p, m, n, seed, *, window=MC_WINDOW, keep_samples=False):
    """Simulate T_{p,m} and compare with the exact law on {m, ..., m + window - 1} plus an overflow bin.

    The acceptance bound is 2 sqrt(window / n_accepted).
    """
    params = TransformParams(check_probability(p, "p"), m)
    n = check_int(n, "n", min_value=1)
    seed = _check_seed(seed)
    window = check_int(window, "window", min_value=1)
    draws = sample_dist(dist, n, seed)
    flagged = int(np.count_nonzero(draws == FLAGGED))
    draws = draws[draws != FLAGGED]
    # independent stream for the coins, derived from the same seed
    coin_rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 1])))
    thinned = coin_rng.binomial(draws, params.p)
    accepted = thinned[thinned >= params.m]
    n_acc = int(accepted.size)
    if n_acc < MIN_ACCEPTED:
        raise AcceptanceTooLow(f"only {n_acc} of {n} samples survived conditioning on S >= {params.m}")
    clipped = np.minimum(accepted, params.m + window)
    empirical = _lumped(clipped, params.m, window, n_acc)
    exact = transform(dist, params, params.m + window - 1)
    return SampleReport(
        n_samples=n,
        n_accepted=n_acc,
        n_flagged=flagged,
        empirical=empirical,
        exact=exact,
        tv_vs_exact=tv_distance(empirical, exact),
        bound=2 * math.sqrt(window / n_acc),
        seed=seed,
        p=params.p,
        m=params.m,
        window=window,
        samples=accepted if keep_samples else None,
    )
