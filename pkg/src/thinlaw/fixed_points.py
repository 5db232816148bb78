"""The scale-free fixed-point family and comparison laws.

Every constructor builds its pmf by ratio recursion from the first support
point and attaches an analytic tail spec, so thinning can continue the law
past the stored block.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import hyp2f1

from ._validation import check_int, check_real
from .dist import DiscreteDist, geometric, point_mass, poisson
from .exceptions import InvalidParams
from .tails import RatioRecursive, RegVarTail, YuleSimonTail

__all__ = [
    "FAMILIES",
    "FixedPointParams",
    "coeff_c",
    "coeff_c_array",
    "fixed_point",
    "fixed_point_pgf",
    "make_family",
    "pareto_invariance_residual",
    "regvar_family",
    "yule_simon",
]


def coeff_c_array(kmax, alpha):
    """c_0..c_kmax, the coefficients of 1 - (1 - s)^alpha."""
    kmax = check_int(kmax, "kmax", min_value=0)
    out = np.zeros(kmax + 1)
    if kmax >= 1:
        k = np.arange(1, kmax)
        out[1] = alpha
        out[2:] = alpha * np.cumprod((k - alpha) / (k + 1))
    return out


def coeff_c(k, alpha):
    k = check_int(k, "k", min_value=0)
    alpha = check_real(alpha, "alpha", gt=0)
    return float(coeff_c_array(k, alpha)[k])


@dataclass(frozen=True)
class FixedPointParams:
    """Threshold ``m`` and exponent ``alpha`` in (0, m]; alpha = m is delta_m."""

    m: int
    alpha: float

    def __post_init__(self):
        m = check_int(self.m, "m", min_value=1)
        alpha = float(self.alpha)
        if not 0 < alpha <= m:
            raise InvalidParams(f"alpha must lie in (0, m] = (0, {m}], got {alpha!r}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "alpha", alpha)

    @property
    def beta(self):
        return self.alpha + 1

    @property
    def trivial(self):
        return self.alpha == self.m


def fixed_point(params, support_size):
    """Fixed point with P(D=k+1)/P(D=k) = (k - alpha)/(k + 1) for k >= m.

    P(D = m) = c_m / (1 - sum_{k<m} c_k) telescopes to alpha / m, which is
    used directly since both sides of the quotient vanish for integer alpha < m.
    The tail beyond the stored block is P(end) (end - alpha) / alpha.
    """
    support_size = check_int(support_size, "support_size", min_value=1)
    m, alpha = params.m, params.alpha
    if params.trivial:
        return point_mass(m)
    head = alpha / m
    k = np.arange(m, m + support_size - 1, dtype=float)
    probs = np.empty(support_size)
    probs[0] = head
    probs[1:] = head * np.cumprod((k - alpha) / (k + 1))
    end = m + support_size - 1
    tail_mass = probs[-1] * (end - alpha) / alpha
    return DiscreteDist(m, probs, tail_mass, RatioRecursive(params.beta))


def fixed_point_pgf(params, s):
    """Closed-form pgf (alpha / m) s^m 2F1(1, m - alpha; m + 1; s).

    For non-integer alpha this equals
    (1 - (1-s)^alpha - sum_{k<m} c_k s^k) / (1 - sum_{k<m} c_k).
    """
    s = np.asarray(s, dtype=float)
    m, alpha = params.m, params.alpha
    out = alpha / m * s**m * hyp2f1(1.0, m - alpha, m + 1.0, s)
    return out if out.ndim else float(out)


def yule_simon(beta, support_size):
    """Yule-Simon law on {1, 2, ...}: pmf(k)/pmf(k-1) = (k-1)/(k-1+beta)."""
    beta = check_real(beta, "beta", gt=1)
    support_size = check_int(support_size, "support_size", min_value=1)
    k = np.arange(2, support_size + 1, dtype=float)
    probs = np.empty(support_size)
    probs[0] = (beta - 1) / beta
    probs[1:] = probs[0] * np.cumprod((k - 1) / (k - 1 + beta))
    spec = YuleSimonTail(beta)
    # survival S(k) = Gamma(k) Gamma(beta) / Gamma(k + beta - 1) at k = end + 1
    n = support_size + 1
    tail_mass = probs[-1] * np.exp(spec.logsurv(n) - spec.logshape(n - 1))
    return DiscreteDist(1, probs, float(tail_mass), spec)


def regvar_family(beta, gamma, support_size):
    """Law on {1, 2, ...} with P(D >= n) proportional to n^(1-beta) log(e + n)^gamma."""
    beta = check_real(beta, "beta", gt=1)
    gamma = float(gamma)
    support_size = check_int(support_size, "support_size", min_value=1)
    spec = RegVarTail(beta, gamma)
    k = np.arange(1, support_size + 1, dtype=float)
    log_h1 = spec.logsurv(1.0)
    probs = np.exp(spec.logshape(k) - log_h1)
    if not np.all(probs > 0):
        raise InvalidParams(
            f"beta={beta}, gamma={gamma} gives a nonincreasing survival (negative pmf)"
        )
    tail_mass = float(np.exp(spec.logsurv(support_size + 1.0) - log_h1))
    return DiscreteDist(1, probs, tail_mass, spec)


def pareto_invariance_residual(alpha, c, x_grid):
    """max_x |P(cX >= x | cX >= 1) - x^-alpha| for X ~ Pareto(alpha) on [1, inf)."""
    alpha = check_real(alpha, "alpha", gt=0)
    c = check_real(c, "c", gt=0, lt=1)
    x = np.asarray(x_grid, dtype=float)
    if np.any(x < 1):
        raise InvalidParams("x_grid points must be >= 1")

    def surv(t):
        return np.where(t <= 1, 1.0, np.power(np.maximum(t, 1.0), -alpha))

    conditioned = surv(x / c) / surv(np.asarray(1 / c))
    return float(np.max(np.abs(conditioned - x**-alpha))) if x.size else 0.0


def _fixed(support_size, m=1, alpha=0.5):
    return fixed_point(FixedPointParams(int(m), alpha), support_size)


FAMILIES = {
    "fixed": (_fixed, {"m": 1, "alpha": 0.5}),
    "yule": (lambda n, beta=1.5: yule_simon(beta, n), {"beta": 1.5}),
    "regvar": (lambda n, beta=1.5, gamma=0.0: regvar_family(beta, gamma, n), {"beta": 1.5, "gamma": 0.0}),
    "point": (lambda n, m=1: point_mass(int(m)), {"m": 1}),
    "poisson": (lambda n, lam=1.0: poisson(lam), {"lam": 1.0}),
    "geometric": (lambda n, ratio=0.5: geometric(ratio), {"ratio": 0.5}),
}


def make_family(name, support_size, **params):
    """Instantiate a named family; unknown names or parameter keys raise InvalidParams."""
    try:
        factory, defaults = FAMILIES[name]
    except KeyError as exc:
        raise InvalidParams(f"unknown family {name!r}; choose from {sorted(FAMILIES)}") from exc
    unknown = set(params) - set(defaults)
    if unknown:
        raise InvalidParams(f"family {name!r} has no parameters {sorted(unknown)}")
    return factory(support_size, **{k: float(v) for k, v in params.items()})
