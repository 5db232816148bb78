"""Truncated pmfs on the nonnegative integers with tracked residual mass.

:class:`DiscreteDist` is the value type passed between every module: a
contiguous block of stored probabilities starting at ``offset``, the mass
``tail_mass`` that lies beyond the block, and optionally a
:class:`~thinlaw.tails.TailSpec` describing the shape of that mass.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import integrate, stats
from scipy.special import gammaln

from ._validation import NORM_TOL, RENORM_TOL, check_int, check_real
from .exceptions import InvalidDistribution, InvalidParams
from .tails import TRUNCATED, GeometricTail, TailSpec, tail_from_dict

__all__ = [
    "DiscreteDist",
    "MomentBounds",
    "binomial_moment",
    "from_pmf",
    "geometric",
    "moment",
    "pgf",
    "pgf_error_bound",
    "point_mass",
    "poisson",
    "tail",
    "tv_distance",
]


@dataclass(frozen=True, eq=False)
class DiscreteDist:
    """Law of a nonnegative integer D, stored as P(D = offset + i) = probs[i].

    Invariants enforced at construction: nonnegative entries, canonical
    trimming (no leading or trailing zeros in ``probs``), and
    ``sum(probs) + tail_mass`` within 1e-12 of one. Drift up to 1e-9 is
    renormalized away; anything larger raises :class:`InvalidDistribution`.
    """

    offset: int
    probs: np.ndarray
    tail_mass: float = 0.0
    tail: TailSpec = field(default=TRUNCATED)

    def __post_init__(self):
        offset = check_int(self.offset, "offset", min_value=0)
        probs = np.array(self.probs, dtype=np.float64).ravel()
        tail_mass = float(self.tail_mass)
        tail_spec = self.tail if self.tail is not None else TRUNCATED
        if not np.all(np.isfinite(probs)) or not np.isfinite(tail_mass):
            raise InvalidDistribution("probabilities must be finite")
        if probs.size and probs.min() < 0:
            raise InvalidDistribution(f"negative probability {probs.min():.3e}")
        if tail_mass < 0:
            raise InvalidDistribution(f"negative tail mass {tail_mass:.3e}")

        nz = np.flatnonzero(probs)
        if nz.size == 0:
            if probs.size:
                tail_spec = TRUNCATED
            probs = probs[:0]
        else:
            if nz[-1] != probs.size - 1:
                # anchor moved, continuation no longer describes the tail
                tail_spec = TRUNCATED
            offset += int(nz[0])
            probs = probs[nz[0] : nz[-1] + 1]
        if tail_mass == 0.0 or probs.size == 0:
            tail_spec = TRUNCATED

        total = probs.sum() + tail_mass
        drift = abs(total - 1.0)
        if drift > RENORM_TOL:
            raise InvalidDistribution(
                f"total mass {total!r} differs from 1 by {drift:.3e} (> {RENORM_TOL})"
            )
        if drift > NORM_TOL:
            probs = probs / total
            tail_mass = tail_mass / total
        if tail_spec.analytic:
            tail_spec.check_anchor(offset + probs.size - 1)

        probs.flags.writeable = False
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "tail_mass", tail_mass)
        object.__setattr__(self, "tail", tail_spec)

    # -- basic accessors ---------------------------------------------------
    @property
    def end(self):
        """Largest stored support point (``offset - 1`` when nothing is stored)."""
        return self.offset + self.probs.size - 1

    @property
    def support(self):
        return np.arange(self.offset, self.end + 1)

    def __len__(self):
        return self.probs.size

    def __repr__(self):
        return (
            f"DiscreteDist(offset={self.offset}, n_stored={self.probs.size}, "
            f"tail_mass={self.tail_mass:.3e}, tail={self.tail!r})"
        )

    @cached_property
    def _upper_sums(self):
        # _upper_sums[i] = sum(probs[i:]) + tail_mass
        out = np.empty(self.probs.size + 1)
        out[-1] = self.tail_mass
        out[:-1] = np.cumsum(self.probs[::-1])[::-1] + self.tail_mass
        return out

    def pmf(self, k):
        """Stored point probabilities; zero outside the stored block."""
        k = np.asarray(k)
        idx = k - self.offset
        inside = (idx >= 0) & (idx < self.probs.size)
        out = np.zeros(k.shape, dtype=float)
        out[inside] = self.probs[idx[inside]]
        return out if out.ndim else float(out)

    def dense(self, lo, hi):
        """Stored pmf on the integer range [lo, hi] as a plain array."""
        out = np.zeros(hi - lo + 1)
        a, b = max(lo, self.offset), min(hi, self.end)
        if a <= b:
            out[a - lo : b - lo + 1] = self.probs[a - self.offset : b - self.offset + 1]
        return out

    # -- tail continuation -------------------------------------------------
    @property
    def log_anchor(self):
        """log scale tying ``tail.logshape`` to the stored probabilities."""
        return float(np.log(self.probs[-1]) - self.tail.logshape(self.end))

    def continuation(self, k):
        """Analytic pmf for points past ``end`` (requires an analytic tail)."""
        if not self.tail.analytic:
            raise InvalidParams("distribution has no analytic tail continuation")
        return np.exp(self.log_anchor + self.tail.logshape(k))

    def extended(self, upto):
        """Materialize the analytic tail on (end, upto]; returns ``self`` if impossible."""
        upto = int(upto)
        if not self.tail.analytic or upto <= self.end:
            return self
        k = np.arange(self.end + 1, upto + 1, dtype=float)
        spec = self.tail
        # ratio recursion from the anchor; avoids cancellation in logshape
        ext = self.probs[-1] * np.exp(np.cumsum(spec.log_step(k)))
        surv = spec.logsurv
        remaining = self.tail_mass * float(np.exp(surv(upto + 1.0) - surv(self.end + 1.0)))
        return DiscreteDist(self.offset, np.concatenate([self.probs, ext]), remaining, spec)

    def truncated(self, upto, keep_tail=False):
        """Fold stored mass above ``upto`` into ``tail_mass``."""
        if upto >= self.end:
            return self
        if upto < self.offset:
            return DiscreteDist(0, [], 1.0)
        keep = self.probs[: upto - self.offset + 1]
        folded = self.tail_mass + self.probs[upto - self.offset + 1 :].sum()
        return DiscreteDist(self.offset, keep, folded, self.tail if keep_tail else TRUNCATED)

    # -- serialization -----------------------------------------------------
    def to_dict(self, include_tail=True):
        out = {
            "offset": int(self.offset),
            "probs": [float(x) for x in self.probs],
            "tail_mass": float(self.tail_mass),
        }
        if include_tail and self.tail.analytic:
            out["tail"] = self.tail.to_dict()
        return out

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                int(data["offset"]),
                np.asarray(data["probs"], dtype=float),
                float(data.get("tail_mass", 0.0)),
                tail_from_dict(data.get("tail")),
            )
        except KeyError as exc:
            raise InvalidDistribution(f"missing key {exc} in distribution record") from exc

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_csv(self):
        """CSV with columns k, pmf, cdf_tail where cdf_tail = P(D >= k)."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "pmf", "cdf_tail"])
        for i, k in enumerate(range(self.offset, self.end + 1)):
            writer.writerow([k, repr(float(self.probs[i])), repr(float(self._upper_sums[i]))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, tail_mass=None):
        lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
        rows = list(csv.DictReader(lines))
        if not rows:
            return cls(0, [], 1.0)
        ks = [int(r["k"]) for r in rows]
        if ks != list(range(ks[0], ks[0] + len(ks))):
            raise InvalidDistribution("CSV support must be contiguous")
        probs = [float(r["pmf"]) for r in rows]
        if tail_mass is None:
            tail_mass = float(rows[-1]["cdf_tail"]) - probs[-1]
        return cls(ks[0], probs, max(tail_mass, 0.0))


def from_pmf(probs, offset=0, tail_mass=None):
    """Build a law from raw probabilities; missing mass becomes ``tail_mass``."""
    probs = np.asarray(probs, dtype=float)
    if tail_mass is None:
        tail_mass = max(0.0, 1.0 - probs.sum())
    return DiscreteDist(offset, probs, tail_mass)


def point_mass(m):
    """delta_m."""
    return DiscreteDist(check_int(m, "m", min_value=0), [1.0], 0.0)


def poisson(lam, support_size=None):
    lam = check_real(lam, "lam", gt=0)
    if support_size is None:
        support_size = int(np.ceil(lam + 12 * np.sqrt(lam) + 40))
    support_size = check_int(support_size, "support_size", min_value=1)
    k = np.arange(support_size)
    return DiscreteDist(0, stats.poisson.pmf(k, lam), float(stats.poisson.sf(support_size - 1, lam)))


def geometric(ratio, support_size=None):
    """P(D = k) = (1 - ratio) ratio^k on {0, 1, ...}; mean ratio / (1 - ratio)."""
    ratio = check_real(ratio, "ratio", gt=0, lt=1)
    if support_size is None:
        support_size = int(np.ceil(np.log(1e-18) / np.log(ratio))) + 1
    support_size = check_int(support_size, "support_size", min_value=1)
    k = np.arange(support_size)
    probs = (1 - ratio) * np.power(ratio, k)
    return DiscreteDist(0, probs, ratio**support_size, GeometricTail(ratio))


# -- functionals -------------------------------------------------------------
def pgf(dist, s):
    """E s^D restricted to the stored support.

    The omitted tail contributes at most :func:`pgf_error_bound`.
    """
    s = np.asarray(s, dtype=float)
    if np.any((s < 0) | (s > 1)):
        raise InvalidParams("pgf argument must lie in [0, 1]")
    k = dist.support
    vals = np.power.outer(s, k) @ dist.probs if k.size else np.zeros(s.shape)
    return vals if np.ndim(vals) else float(vals)


def pgf_error_bound(dist, s):
    s = np.asarray(s, dtype=float)
    out = dist.tail_mass * np.power(s, dist.end + 1)
    return out if out.ndim else float(out)


def tail(dist, k):
    """P(D >= k), stored mass plus ``tail_mass``."""
    k = np.asarray(k)
    idx = np.clip(k - dist.offset, 0, dist.probs.size)
    out = dist._upper_sums[idx]
    return out if np.ndim(out) else float(out)


def tv_distance(a, b):
    """Half the l1 distance over the union of stored supports, plus half the tail gap."""
    if a.probs.size == 0 and b.probs.size == 0:
        return 0.5 * abs(a.tail_mass - b.tail_mass)
    lo = min(x.offset for x in (a, b) if x.probs.size)
    hi = max(x.end for x in (a, b) if x.probs.size)
    diff = np.abs(a.dense(lo, hi) - b.dense(lo, hi)).sum()
    return float(0.5 * diff + 0.5 * abs(a.tail_mass - b.tail_mass))


class MomentBounds(NamedTuple):
    lower: float
    upper: float


def moment(dist, r):
    """Bounds on E D^r.

    ``lower`` is the stored-support sum. ``upper`` equals it when nothing is
    truncated, is infinite for an opaque tail or a power tail too heavy for
    the moment to exist, and otherwise adds the analytic tail contribution.
    """
    r = check_int(r, "r", min_value=1)
    k = dist.support.astype(float)
    lower = float(np.dot(np.power(k, r), dist.probs))
    if dist.tail_mass == 0.0:
        return MomentBounds(lower, lower)
    spec = dist.tail
    if not spec.analytic or spec.decay_exponent <= r + 1:
        return MomentBounds(lower, float("inf"))
    return MomentBounds(lower, lower + _tail_moment(dist, r))


def _tail_moment(dist, r):
    # sum_{k > end} k^r pmf(k): explicit block, then midpoint-rule integral in log k
    cut = dist.end + (1 << 16)
    k = np.arange(dist.end + 1, cut + 1, dtype=float)
    head = float(np.dot(np.power(k, r), dist.continuation(k)))
    anchor, logshape = dist.log_anchor, dist.tail.logshape

    def integrand(t):
        return np.exp((r + 1) * t + anchor + logshape(np.exp(t)))

    rest, _ = integrate.quad(integrand, np.log(cut + 0.5), np.inf, limit=200)
    return head + rest


def binomial_moment(dist, r):
    """Stored-support value of E C(D, r) (a lower bound when mass is truncated)."""
    r = check_int(r, "r", min_value=0)
    k = dist.support.astype(float)
    ok = k >= r
    logc = gammaln(k[ok] + 1) - gammaln(r + 1) - gammaln(k[ok] - r + 1)
    return float(np.dot(np.exp(logc), dist.probs[ok]))
