import numpy as np
import pytest
from scipy import stats

from thinlaw._special import binomial_logpmf_rows, log_gamma_ratio
from thinlaw.exceptions import InvalidParams
from thinlaw.tails import (
    TRUNCATED,
    GeometricTail,
    RatioRecursive,
    RegVarTail,
    YuleSimonTail,
    tail_from_dict,
)


def test_log_gamma_ratio_matches_high_precision(oracles):
    for x, a, b, ref in oracles["log_gamma_ratio"]:
        assert log_gamma_ratio(x, a, b) == pytest.approx(ref, rel=1e-13)


def test_log_gamma_ratio_vectorized():
    x = np.array([5.0, 50.0, 5e3, 5e6])
    out = log_gamma_ratio(x, -0.5, 1.0)
    assert out.shape == x.shape
    assert isinstance(log_gamma_ratio(5.0, -0.5, 1.0), float)


@pytest.mark.parametrize("l", [3, 40, 1000])
@pytest.mark.parametrize("p", [0.01, 0.3, 0.9])
def test_binomial_rows_match_scipy(l, p):
    n_max = min(l, 30)
    for n, logb in binomial_logpmf_rows(np.array([float(l)]), n_max, p):
        assert np.exp(logb[0]) == pytest.approx(stats.binom.pmf(n, l, p), rel=1e-11, abs=1e-300)


def test_binomial_rows_below_n_are_zero():
    rows = dict(binomial_logpmf_rows(np.array([2.0]), 4, 0.5))
    assert np.isneginf(rows[3][0]) and np.isneginf(rows[4][0])


SPECS = [RatioRecursive(1.5), YuleSimonTail(1.7), RegVarTail(1.5, 1.0), RegVarTail(2.5, 0.0), GeometricTail(0.6)]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.to_dict()["kind"])
def test_survival_telescopes_to_shape(spec):
    k = np.arange(5.0, 400.0)
    shape = np.exp(spec.logshape(k))
    surv = np.exp(spec.logsurv(k))
    next_surv = np.exp(spec.logsurv(k + 1))
    np.testing.assert_allclose(surv - next_surv, shape, rtol=1e-9)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.to_dict()["kind"])
def test_log_step_consistent(spec):
    k = np.arange(10.0, 2000.0)
    np.testing.assert_allclose(spec.log_step(k), spec.logshape(k) - spec.logshape(k - 1), atol=1e-12)


@pytest.mark.parametrize("spec", SPECS + [TRUNCATED], ids=lambda s: s.to_dict()["kind"])
def test_dict_round_trip(spec):
    assert tail_from_dict(spec.to_dict()) == spec


def test_ratio_recursive_bounds():
    with pytest.raises(InvalidParams):
        RatioRecursive(1.0)
    with pytest.raises(InvalidParams):
        RatioRecursive(3.0).check_anchor(1)
    RatioRecursive(2.0).check_anchor(1)


def test_unknown_kind():
    with pytest.raises(InvalidParams):
        tail_from_dict({"kind": "lognormal"})
