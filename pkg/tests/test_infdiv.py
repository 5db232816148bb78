import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from thinlaw.dist import pgf, point_mass, tv_distance
from thinlaw.exceptions import InvalidParams, InvalidSequence
from thinlaw.fixed_points import FixedPointParams, fixed_point
from thinlaw.infdiv import compound_poisson_rebuild, decompose, kaluza_check, log_series, renewal_sequence

GRID = [(m, f * m) for m in (1, 2, 3) for f in (0.25, 0.5, 0.75)]


def _series_mul(a, b):
    return np.convolve(a, b)[: a.size]


class TestKaluza:
    def test_constant(self):
        assert kaluza_check(np.ones(50)).holds

    def test_fixed_point(self):
        d = fixed_point(FixedPointParams(1, 0.5), 1000)
        assert kaluza_check(d.probs / d.probs[0])

    def test_violation(self):
        res = kaluza_check([1, 0.5, 0.5, 0.05])
        assert not res.holds and res.first_violation == 2

    @pytest.mark.parametrize("u", [[1, 0.5, 0.0], [1, -0.1], [0.5, 0.2], []])
    def test_invalid(self, u):
        with pytest.raises(InvalidSequence):
            kaluza_check(u)


class TestRenewal:
    def test_constant(self):
        f = renewal_sequence(np.ones(20))
        np.testing.assert_allclose(f[1:], np.r_[1.0, np.zeros(18)], atol=1e-15)

    @pytest.mark.parametrize("r", [0.3, 0.9, 1.5])
    def test_geometric(self, r):
        f = renewal_sequence(r ** np.arange(20.0))
        np.testing.assert_allclose(f[1:], np.r_[r, np.zeros(18)], atol=1e-12)

    def test_fixed_point_nonnegative(self):
        d = fixed_point(FixedPointParams(1, 0.5), 10**4 + 1)
        f = renewal_sequence(d.probs / d.probs[0])
        assert f[1:].min() >= 0 and f.sum() <= 1

    @given(st.lists(st.floats(0.05, 2.0), min_size=2, max_size=40))
    def test_round_trip(self, ratios):
        u = np.concatenate([[1.0], np.cumprod(ratios)])
        f = renewal_sequence(u)
        # U = 1 / (1 - F)  <=>  U (1 - F) = 1
        one = _series_mul(u, np.r_[1.0, -f[1:]])
        scale = np.maximum(1.0, np.cumsum(np.abs(u)) * np.max(np.abs(f)))
        assert np.all(np.abs(one - np.r_[1.0, np.zeros(u.size - 1)]) <= 1e-10 * scale)


class TestLogSeries:
    def test_constant(self):
        lam = log_series(np.ones(30))
        np.testing.assert_allclose(lam[1:], 1 / np.arange(1, 30), rtol=1e-13)

    @pytest.mark.parametrize("r", [0.2, 0.8])
    def test_geometric(self, r):
        n = np.arange(1, 30)
        np.testing.assert_allclose(log_series(r ** np.arange(30.0))[1:], r**n / n, rtol=1e-11)

    def test_matches_renewal_expansion(self):
        d = fixed_point(FixedPointParams(2, 1.5), 60)
        u = d.probs / d.probs[0]
        f = renewal_sequence(u)
        F = np.r_[0.0, f[1:]]
        expected, power = np.zeros(u.size), np.r_[1.0, np.zeros(u.size - 1)]
        for n in range(1, u.size):
            power = _series_mul(power, F)
            expected += power / n
        np.testing.assert_allclose(log_series(u)[1:], expected[1:], atol=1e-10)

    @given(st.floats(0.05, 0.8), st.floats(0.05, 2.0))
    def test_exp_series_inverse(self, decay, scale):
        n = 40
        lam = np.r_[0.0, scale * decay ** np.arange(1, n)]
        # u = exp(sum lam s^k) via the same recurrence solved forward
        u = np.zeros(n)
        u[0] = 1.0
        k = np.arange(n)
        for j in range(1, n):
            u[j] = np.dot(k[1 : j + 1] * lam[1 : j + 1], u[j - 1 :: -1][:j]) / j
        assert np.max(np.abs(log_series(u)[1:] - lam[1:])) <= 1e-11 * np.max(lam)

    def test_compensated_agrees(self):
        d = fixed_point(FixedPointParams(3, 1.7), 500)
        u = d.probs / d.probs[0]
        np.testing.assert_allclose(log_series(u, compensated=True), log_series(u), rtol=1e-10, atol=1e-16)


class TestRebuild:
    def test_single_component(self):
        out = compound_poisson_rebuild([0, 1.3], np.exp(-1.3), 60)
        np.testing.assert_allclose(out.dense(0, 59), stats.poisson.pmf(np.arange(60), 1.3), rtol=1e-12, atol=1e-18)  # factors cut at tail 1e-18

    def test_even_lattice(self):
        out = compound_poisson_rebuild([0, 0, 0.7], np.exp(-0.7), 40)
        dense = out.dense(0, 39)
        assert np.all(dense[1::2] == 0)
        np.testing.assert_allclose(dense[::2], stats.poisson.pmf(np.arange(20), 0.7), rtol=1e-12, atol=1e-18)  # factors cut at tail 1e-18

    @given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8))
    def test_pgf(self, rates):
        lam = np.r_[0.0, rates]
        p0 = float(np.exp(-lam.sum()))
        out = compound_poisson_rebuild(lam, p0, 400)
        s = np.linspace(0, 1, 11)
        ref = p0 * np.exp(np.polynomial.polynomial.polyval(s, lam))
        np.testing.assert_allclose(pgf(out, s), ref, atol=1e-10)

    def test_negative_rate(self):
        with pytest.raises(InvalidParams):
            compound_poisson_rebuild([0, 0.5, -1e-6], 0.5, 10)


class TestDecompose:
    @pytest.mark.parametrize("m,alpha", [(1, 0.5), (3, 1.7)])
    def test_examples(self, m, alpha):
        dec = decompose(fixed_point(FixedPointParams(m, alpha), 2001), m)
        assert dec.lam[1:].min() >= 0 and dec.f[1:].min() >= 0
        assert dec.reconstruction_tv <= 1e-10
        assert dec.kaluza.holds

    def test_point_mass(self):
        dec = decompose(point_mass(2), 2)
        np.testing.assert_array_equal(dec.u, [1.0])
        assert dec.lam[1:].size == 0 and dec.reconstruction_tv == 0

    @pytest.mark.parametrize("m,alpha", GRID)
    def test_u_ratio_identity(self, m, alpha):
        dec = decompose(fixed_point(FixedPointParams(m, alpha), 3000), m)
        n = np.arange(dec.u.size - 1)
        np.testing.assert_allclose(dec.u[:-1] / dec.u[1:], (m + n + 1) / (m + n - alpha), rtol=1e-13)

    @pytest.mark.parametrize("m,alpha", GRID)
    def test_grid_positivity(self, m, alpha):
        dec = decompose(fixed_point(FixedPointParams(m, alpha), 10**4 + 1), m, support_size=2000)
        assert dec.f[1:].min() >= -1e-12 and dec.lam[1:].min() >= -1e-12
        assert dec.reconstruction_tv <= 1e-10

    def test_wrong_offset(self):
        with pytest.raises(InvalidParams):
            decompose(fixed_point(FixedPointParams(2, 1.0), 10), 1)

    def test_serialization(self):
        dec = decompose(fixed_point(FixedPointParams(1, 0.5), 11), 1)
        data = json.loads(dec.to_json())
        assert len(data["lambda"]) == 10 and data["kaluza"]["holds"]
        lines = dec.to_csv().splitlines()
        assert lines[0] == "n,u,f,lambda" and len(lines) == 12

    def test_rebuild_matches_original(self):
        d = fixed_point(FixedPointParams(2, 0.5), 401)
        dec = decompose(d, 2)
        rebuilt = compound_poisson_rebuild(dec.lam, dec.p0, 401)
        shifted = np.asarray(d.probs)
        assert np.max(np.abs(rebuilt.probs - shifted)) <= 1e-12
        assert tv_distance(rebuilt, rebuilt) == 0
