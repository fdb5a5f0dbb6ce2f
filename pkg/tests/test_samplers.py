"""Stream discipline, grids and the stable increment sampler."""

import numpy as np
import pytest

from lksim.levy_model import StableParams, stable_char_exponent
from lksim.samplers import (GridSpec, RngStream, gaussian_increment,
                            stable_increment)


class TestRngStream:
    def test_deterministic(self):
        a = RngStream(123, 5).generator().random(8)
        b = RngStream(123, 5).generator().random(8)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(123, 5).generator().random(8)
        b = RngStream(123, 6).generator().random(8)
        assert not np.array_equal(a, b)

    def test_shifted(self):
        s = RngStream(123, 5)
        assert s.shifted(3) == RngStream(123, 8)

    def test_frozen(self):
        with pytest.raises(AttributeError):
            RngStream(1, 2).stream = 7


class TestGridSpec:
    def test_points_cover_horizon(self):
        g = GridSpec(0.3, 1.0)
        t = g.times()
        assert t[0] == 0.0
        assert t[-1] >= 1.0
        assert g.n_points == t.size

    def test_validation(self):
        with pytest.raises(ValueError):
            GridSpec(0.0, 1.0)
        with pytest.raises(ValueError):
            GridSpec(0.1, -1.0)


class TestStableIncrement:
    @pytest.mark.parametrize("p", [StableParams.symmetric(1.5),
                                   StableParams(1.2, 1.0, 0.4),
                                   StableParams.symmetric(0.7)])
    def test_char_function_agreement(self, p):
        # E[cos(lam X_t) ], E[sin(lam X_t)] against exp(t psi(lam)): the
        # sampler and the analytic exponent are implemented independently
        rng = np.random.default_rng(42)
        t = 0.7
        x = stable_increment(p, t, rng, 200_000)
        for lam in (0.5, 1.5):
            want = np.exp(t * stable_char_exponent(p, lam))
            got_re = float(np.mean(np.cos(lam * x)))
            got_im = float(np.mean(np.sin(lam * x)))
            se = 1.0 / np.sqrt(x.size)  # |e^{i lam x}| <= 1
            assert abs(got_re - want.real) < 5 * se
            assert abs(got_im - want.imag) < 5 * se

    def test_scaling_in_t(self):
        # strictly stable: X_t =d t^{1/alpha} X_1
        p = StableParams.symmetric(1.5)
        rng = np.random.default_rng(1)
        a = stable_increment(p, 2.0, rng, 50_000)
        b = 2.0 ** (1 / 1.5) * stable_increment(p, 1.0, rng, 50_000)
        qa = np.quantile(a, [0.1, 0.25, 0.5, 0.75, 0.9])
        qb = np.quantile(b, [0.1, 0.25, 0.5, 0.75, 0.9])
        np.testing.assert_allclose(qa, qb, atol=0.05)

    def test_alpha_two_refused(self):
        with pytest.raises(ValueError):
            stable_increment(StableParams(2.0, 0.0, 0.0), 1.0,
                             np.random.default_rng(2), 10)

    def test_gaussian_increment_moments(self):
        rng = np.random.default_rng(2)
        x = gaussian_increment(-0.5, 0.25, rng, 100_000)
        assert float(np.mean(x)) == pytest.approx(-0.125, abs=0.01)
        assert float(np.var(x)) == pytest.approx(0.25, rel=0.03)

    def test_skew_pushes_median(self):
        pos = StableParams(0.7, 1.0, 0.1)
        rng = np.random.default_rng(3)
        x = stable_increment(pos, 1.0, rng, 50_000)
        assert np.median(x) > 0.0
