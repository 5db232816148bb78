"""Analytic continuations of a pmf beyond its stored support.

A tail spec describes the *shape* of P(D = k) for k past the last stored
point. Every spec exposes two log-shape functions on a shared scale:

* ``logshape(k)``  - log of an unnormalized pmf,
* ``logsurv(k)``   - log of the matching unnormalized survival sum_{j>=k}.

A distribution anchors the shape to its last stored probability, so the
continuation is pmf(k) = pmf(end) * exp(logshape(k) - logshape(end)).
Both functions accept real ``k`` (vectorized), which the far-tail
quadrature in :mod:`thinlaw.thinning` relies on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._special import log_gamma_ratio
from .exceptions import InvalidParams


class TailSpec:
    analytic = False
    #: exponent beta with pmf(k) ~ k^-beta; ``inf`` for lighter tails
    decay_exponent = float("inf")

    def logshape(self, k):
        raise NotImplementedError

    def logsurv(self, k):
        raise NotImplementedError

    def log_step(self, k):
        """log(pmf(k) / pmf(k - 1)) on integer ``k``."""
        k = np.asarray(k, dtype=float)
        return self.logshape(k) - self.logshape(k - 1)

    def check_anchor(self, end):
        """Raise if the continuation is not a valid pmf past ``end``."""

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Truncated(TailSpec):
    """No continuation: tail mass is an opaque lump."""

    def to_dict(self):
        return {"kind": "truncated"}


TRUNCATED = Truncated()


@dataclass(frozen=True)
class RatioRecursive(TailSpec):
    """pmf(k) / pmf(k-1) = (k - beta) / k past the stored support.

    This is the ratio law of the scale-free fixed points, so shape(k) is
    proportional to Gamma(k + 1 - beta) / Gamma(k + 1) and the survival
    telescopes to sum_{j>=k} shape(j) = k * shape(k) / (beta - 1).
    """

    beta: float
    analytic = True

    def __post_init__(self):
        if not self.beta > 1:
            raise InvalidParams(f"RatioRecursive needs beta > 1, got {self.beta}")

    @property
    def decay_exponent(self):
        return self.beta

    def logshape(self, k):
        return log_gamma_ratio(k, 1 - self.beta, 1.0)

    def logsurv(self, k):
        k = np.asarray(k, dtype=float)
        return np.log(k) + self.logshape(k) - np.log(self.beta - 1)

    def log_step(self, k):
        return np.log1p(-self.beta / np.asarray(k, dtype=float))

    def check_anchor(self, end):
        # ratios (k - beta)/k for k > end must be nonnegative
        if self.beta > end + 1:
            raise InvalidParams(
                f"RatioRecursive(beta={self.beta}) needs beta <= stored end + 1 = {end + 1}"
            )

    def to_dict(self):
        return {"kind": "ratio_recursive", "beta": self.beta}


@dataclass(frozen=True)
class YuleSimonTail(TailSpec):
    """pmf(k) / pmf(k-1) = (k - 1) / (k - 1 + beta): shape(k) = Gamma(k) / Gamma(k + beta)."""

    beta: float
    analytic = True

    def __post_init__(self):
        if not self.beta > 1:
            raise InvalidParams(f"YuleSimonTail needs beta > 1, got {self.beta}")

    @property
    def decay_exponent(self):
        return self.beta

    def logshape(self, k):
        return log_gamma_ratio(k, 0.0, self.beta)

    def logsurv(self, k):
        return log_gamma_ratio(k, 0.0, self.beta - 1) - np.log(self.beta - 1)

    def log_step(self, k):
        return -np.log1p(self.beta / (np.asarray(k, dtype=float) - 1))

    def check_anchor(self, end):
        if end < 1:
            raise InvalidParams("YuleSimonTail needs a stored end >= 1")

    def to_dict(self):
        return {"kind": "yule_simon", "beta": self.beta}


def _log_regvar_surv(k, beta, gamma):
    return (1 - beta) * np.log(k) + gamma * np.log(np.log(np.e + k))


@dataclass(frozen=True)
class RegVarTail(TailSpec):
    """Survival proportional to k^(1-beta) * log(e + k)^gamma."""

    beta: float
    gamma: float = 0.0
    analytic = True

    def __post_init__(self):
        if not self.beta > 1:
            raise InvalidParams(f"RegVarTail needs beta > 1, got {self.beta}")

    @property
    def decay_exponent(self):
        return self.beta

    def logsurv(self, k):
        k = np.asarray(k, dtype=float)
        return _log_regvar_surv(k, self.beta, self.gamma)

    def logshape(self, k):
        # shape(k) = H(k) - H(k+1) = -H(k) * expm1(log H(k+1) - log H(k))
        k = np.asarray(k, dtype=float)
        step = (1 - self.beta) * np.log1p(1 / k)
        if self.gamma:
            ll = np.log(np.e + k)
            step = step + self.gamma * np.log1p(np.log1p(1 / (np.e + k)) / ll)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.logsurv(k) + np.log(-np.expm1(step))

    def check_anchor(self, end):
        if end < 1:
            raise InvalidParams("RegVarTail needs a stored end >= 1")

    def to_dict(self):
        return {"kind": "regvar", "beta": self.beta, "gamma": self.gamma}


@dataclass(frozen=True)
class GeometricTail(TailSpec):
    """pmf(k) / pmf(k-1) = ratio."""

    ratio: float
    analytic = True

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise InvalidParams(f"GeometricTail needs ratio in (0, 1), got {self.ratio}")

    def logshape(self, k):
        return np.asarray(k, dtype=float) * np.log(self.ratio)

    def logsurv(self, k):
        return self.logshape(k) - np.log1p(-self.ratio)

    def log_step(self, k):
        return np.full(np.shape(k), np.log(self.ratio))

    def to_dict(self):
        return {"kind": "geometric", "ratio": self.ratio}


_KINDS = {
    "truncated": lambda d: TRUNCATED,
    "ratio_recursive": lambda d: RatioRecursive(float(d["beta"])),
    "yule_simon": lambda d: YuleSimonTail(float(d["beta"])),
    "regvar": lambda d: RegVarTail(float(d["beta"]), float(d.get("gamma", 0.0))),
    "geometric": lambda d: GeometricTail(float(d["ratio"])),
}


def tail_from_dict(data):
    if data is None:
        return TRUNCATED
    try:
        return _KINDS[data["kind"]](data)
    except KeyError as exc:
        raise InvalidParams(f"unknown tail spec {data!r}") from exc
