"""Iterates of T along geometric schedules and their convergence diagnostics."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._validation import check_int, check_probability
from .dist import binomial_moment, point_mass, tail, tv_distance
from .exceptions import InvalidParams, RatioUndefined
from .fixed_points import FixedPointParams, fixed_point
from .thinning import TransformParams, thin, transform

__all__ = [
    "ConvergenceReport",
    "DEFAULT_UPTO",
    "chained_iterates",
    "iterate_schedule",
    "ratio_diagnostic",
    "run_convergence",
    "small_p_equivalent_ratio",
    "tail_ratio_diagnostic",
    "thread_count",
    "tightness_limit",
    "trivial_regime_diagnostic",
]

#: default largest stored point of each iterate
DEFAULT_UPTO = 512


def thread_count():
    """Worker cap from ``THINLAW_THREADS`` (default 1)."""
    raw = os.environ.get("THINLAW_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise InvalidParams(f"THINLAW_THREADS must be an integer, got {raw!r}") from exc


def _map(fn, items, threads):
    threads = thread_count() if threads is None else max(1, int(threads))
    if threads == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def iterate_schedule(start, q, m, steps, upto=None, threads=None):
    """[T_{q^j, m}(start) for j = 1..steps], each a one-shot transform of ``start``."""
    q = check_probability(q, "q")
    m = check_int(m, "m", min_value=1)
    steps = check_int(steps, "steps", min_value=1)
    return _map(lambda j: transform(start, TransformParams(q**j, m), upto), range(1, steps + 1), threads)


def chained_iterates(start, q, m, steps, upto=None):
    """Iterates built by re-applying T_{q,m} to the previous conditioned law."""
    out, cur = [], start
    for _ in range(check_int(steps, "steps", min_value=1)):
        cur = transform(cur, TransformParams(q, m), upto)
        out.append(cur)
    return out


def _check_window(beta, k_lo, k_hi):
    k_lo, k_hi = check_int(k_lo, "k_lo", min_value=1), check_int(k_hi, "k_hi", min_value=1)
    if k_lo < math.ceil(beta) or k_hi < k_lo:
        raise InvalidParams(f"need ceil(beta)={math.ceil(beta)} <= k_lo <= k_hi, got [{k_lo}, {k_hi}]")
    return np.arange(k_lo, k_hi + 1)


def ratio_diagnostic(dist_thinned, beta, k_lo, k_hi):
    """max_k |P(S=k)/P(S=k-1) - (k - beta)/k| over [k_lo, k_hi]."""
    k = _check_window(beta, k_lo, k_hi)
    num, den = dist_thinned.pmf(k), dist_thinned.pmf(k - 1)
    if np.any(den == 0):
        raise RatioUndefined(f"P(S = {int(k[np.argmax(den == 0)] - 1)}) is zero")
    return float(np.max(np.abs(num / den - (k - beta) / k)))


def tail_ratio_diagnostic(dist_thinned, beta, k_lo, k_hi):
    """max_k |P(S>=k)/P(S>=k-1) - (k - beta)/(k - 1)| over [k_lo, k_hi]."""
    k = _check_window(beta, k_lo, k_hi)
    if k[0] < 2:
        raise InvalidParams("tail ratios need k_lo >= 2")
    num, den = tail(dist_thinned, k), tail(dist_thinned, k - 1)
    if np.any(den == 0):
        raise RatioUndefined(f"P(S >= {int(k[np.argmax(den == 0)] - 1)}) is zero")
    return float(np.max(np.abs(num / den - (k - beta) / (k - 1))))


def tightness_limit(m, beta, k_tight):
    """prod_{j=1}^{K-m} (m + j - beta)/(m + j - 1), the limiting P(S >= K | S >= m)."""
    j = np.arange(1, k_tight - m + 1)
    return float(np.prod((m + j - beta) / (m + j - 1)))


def trivial_regime_diagnostic(start, m, p_schedule, threads=None):
    """P(S = m | S >= m) for each p in the schedule."""
    m = check_int(m, "m", min_value=1)
    ps = [check_probability(p, "p") for p in p_schedule]
    return _map(lambda p: float(transform(start, TransformParams(p, m), m).pmf(m)), ps, threads)


def small_p_equivalent_ratio(start, p, k):
    """P(S = k-1) / (p^(k-1) E C(D, k-1)), which tends to 1 as p -> 0 when E D^(k-1) < inf."""
    k = check_int(k, "k", min_value=1)
    exact = thin(start, p, k - 1).pmf(k - 1)
    return float(exact / (p ** (k - 1) * binomial_moment(start, k - 1)))


@dataclass
class ConvergenceReport:
    m: int
    q: float
    beta: float
    window: tuple
    k_tight: int
    upto: int
    schedule: list = field(default_factory=list)
    ratio_errors: list = field(default_factory=list)
    tail_ratio_errors: list = field(default_factory=list)
    tv_to_limit: list = field(default_factory=list)
    tightness_proxy: list = field(default_factory=list)
    mass_at_m: list = field(default_factory=list)
    tightness_target: float = float("nan")
    extra: dict = field(default_factory=dict)

    METRICS = ("ratio_errors", "tail_ratio_errors", "tv_to_limit", "tightness_proxy", "mass_at_m")

    def to_dict(self):
        out = asdict(self)
        out["window"] = list(self.window)
        return out

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "p", "metric", "value"])
        for metric in self.METRICS:
            for step, (p, value) in enumerate(zip(self.schedule, getattr(self, metric)), start=1):
                writer.writerow([step, repr(p), metric, "" if value is None else repr(value)])
        return buf.getvalue()


def run_convergence(
    start,
    q,
    m,
    steps,
    beta_hint=None,
    limit=None,
    *,
    upto=DEFAULT_UPTO,
    window=None,
    k_tight=None,
    threads=None,
):
    """All per-step diagnostics for the schedule p = q^j, j = 1..steps.

    ``beta_hint`` defaults to the power-law exponent of the start's tail spec,
    or m + 1 for light-tailed starts. The limit law defaults to the fixed
    point with alpha = beta - 1 when beta < m + 1 and to delta_m otherwise.
    Diagnostics use min(beta, m + 1) as the target exponent.
    """
    m = check_int(m, "m", min_value=1)
    if beta_hint is None:
        beta_hint = start.tail.decay_exponent if start.tail_mass > 0 else math.inf
    beta = min(float(beta_hint), m + 1.0)
    if not beta > 1:
        raise InvalidParams(f"beta must exceed 1, got {beta_hint!r}")
    k_lo, k_hi = window if window is not None else (m + 1, m + 20)
    k_tight = m + 30 if k_tight is None else check_int(k_tight, "k_tight", min_value=m + 1)
    upto = check_int(upto, "upto", min_value=max(k_hi, k_tight))
    if limit is None:
        if beta < m + 1:
            limit = fixed_point(FixedPointParams(m, beta - 1), upto - m + 1)
        else:
            limit = point_mass(m)

    iterates = iterate_schedule(start, q, m, steps, upto, threads)
    report = ConvergenceReport(
        m=m, q=float(q), beta=beta, window=(int(k_lo), int(k_hi)), k_tight=k_tight, upto=upto,
        tightness_target=tightness_limit(m, beta, k_tight),
    )
    for j, it in enumerate(iterates, start=1):
        report.schedule.append(float(q) ** j)
        report.ratio_errors.append(_safe(ratio_diagnostic, it, beta, k_lo, k_hi))
        report.tail_ratio_errors.append(_safe(tail_ratio_diagnostic, it, beta, k_lo, k_hi))
        report.tv_to_limit.append(tv_distance(it, limit))
        report.tightness_proxy.append(float(tail(it, k_tight)))
        report.mass_at_m.append(float(it.pmf(m)))
    return report


def _safe(fn, *args):
    # a vanishing denominator (finite-support starts) leaves the ratio undefined: None
    try:
        return fn(*args)
    except RatioUndefined:
        return None
