"""Stable parameter handling, segment measures and closed-form functions."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from lksim.levy_model import (
    LampertiStableCond,
    LampertiStableZero,
    LogParetoCond,
    LogParetoZero,
    Regime,
    StableParams,
    classify_regime,
    conditioned_stable_characteristics,
    h_function,
    killed_stable_characteristics,
    levy_density,
    segment_char_exponent,
)

SYM = StableParams.symmetric(1.5)


class TestStableParams:
    def test_symmetric_helper(self):
        assert SYM.c_plus == SYM.c_minus and SYM.alpha == 1.5
        assert SYM.skewness == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            StableParams(2.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            StableParams(1.5, -1.0, 1.0)
        with pytest.raises(ValueError):
            StableParams(1.5, 0.0, 0.0)

    def test_skewness_range(self):
        p = StableParams(1.5, 2.0, 1.0)
        assert -1.0 <= p.skewness <= 1.0
        assert p.skewness == pytest.approx((2.0 - 1.0) / 3.0)


class TestKilledCharacteristics:
    def test_killing_rate_closed_form(self):
        # rate of crossings from the + side is the mass of the ratio measure
        # below -1, which integrates to c_minus / alpha
        spec, law = killed_stable_characteristics(SYM, 1)
        assert spec.killing == pytest.approx(SYM.c_minus / SYM.alpha, rel=1e-12)
        # frozen quadrature pin for the symmetric alpha = 3/2 model
        assert spec.killing == pytest.approx(0.19947114020071635, rel=1e-12)

    def test_sides_swap_under_asymmetry(self):
        p = StableParams(1.5, 1.0, 0.5)
        plus, _ = killed_stable_characteristics(p, 1)
        minus, _ = killed_stable_characteristics(p, -1)
        assert plus.killing == pytest.approx(0.5 / 1.5)
        assert minus.killing == pytest.approx(1.0 / 1.5)

    def test_measure_matches_ratio_form(self):
        # segment jump density at y is e^y nu(sgn (e^y - 1)) of the stable
        # density of relative jumps
        spec, _ = killed_stable_characteristics(SYM, 1)
        y = np.array([-0.5, 0.3, 1.0])
        got = levy_density(spec.measure, y)
        w = np.expm1(y)
        want = np.exp(y) * np.where(w > 0, SYM.c_plus * np.abs(w) ** -2.5,
                                    SYM.c_minus * np.abs(w) ** -2.5)
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_flip_law_density_normalized(self):
        law = LogParetoZero(1.5)
        total = sum(quad(lambda u: float(law.density(u)), a, b,
                         epsabs=1e-12, epsrel=1e-12, limit=200)[0]
                    for a, b in ((-np.inf, 0.0), (0.0, np.inf)))
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_flip_law_cdf_quantile_roundtrip(self):
        law = LogParetoZero(1.5)
        qs = np.array([0.05, 0.3, 0.5, 0.9, 0.99])
        np.testing.assert_allclose(law.cdf(law.quantile(qs)), qs, rtol=1e-10)

    def test_flip_law_sampling_follows_cdf(self):
        law = LogParetoZero(1.5)
        rng = np.random.default_rng(17)
        x = law.sample(rng, 4000)
        # quantile-quantile check at a few fixed probabilities
        for q in (0.1, 0.5, 0.9):
            emp = np.quantile(x, q)
            assert abs(float(law.cdf(emp)) - q) < 0.03


class TestConditionedModel:
    def test_tilt_relation(self):
        p = StableParams.symmetric(1.5)
        y = np.linspace(-4.0, 4.0, 41)
        y = y[y != 0.0]
        killed = LampertiStableZero(p, 1).density(y)
        cond = LampertiStableCond(p, 1).density(y)
        np.testing.assert_allclose(cond, np.exp(0.5 * y) * killed, rtol=1e-10)

    def test_conditioned_flip_rate(self):
        # segments of the conditioned process still end at flips, at the
        # same-side rate c_same / alpha (the tilt swaps which cone counts)
        spec, _ = conditioned_stable_characteristics(SYM, 1)
        assert spec.killing == pytest.approx(SYM.c_plus / SYM.alpha, rel=1e-12)

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            conditioned_stable_characteristics(StableParams.symmetric(0.8), 1)

    def test_cond_flip_law_normalized(self):
        law = LogParetoCond(1.5)
        total = sum(quad(lambda u: float(law.density(u)), a, b,
                         epsabs=1e-12, epsrel=1e-12, limit=200)[0]
                    for a, b in ((-np.inf, 0.0), (0.0, np.inf)))
        assert total == pytest.approx(1.0, abs=1e-9)


class TestRegime:
    def test_classification(self):
        assert classify_regime(0.7, 0.0) is Regime.C1
        assert classify_regime(0.0, 0.7) is Regime.C2
        assert classify_regime(0.0, 0.0) is Regime.C3
        assert classify_regime(0.3, 0.7) is Regime.C4

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            classify_regime(-0.1, 0.0)


class TestHFunction:
    def test_symmetric_value_at_one(self):
        # K(3/2) for the symmetric unit-rate model evaluates to sqrt(2/pi)
        assert h_function(SYM, 1.0) == pytest.approx(math.sqrt(2.0 / math.pi),
                                                     rel=1e-12)

    def test_zero_and_shape(self):
        x = np.array([-2.0, 0.0, 2.0])
        out = h_function(SYM, x)
        assert out[1] == 0.0
        assert out[0] == out[2]  # symmetric model

    def test_skew_tilts_sides(self):
        p = StableParams(1.5, 1.0, 0.5)
        assert h_function(p, -1.0) > h_function(p, 1.0)  # beta > 0 favours -

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            h_function(StableParams.symmetric(0.9), 1.0)


class TestCharExponent:
    def test_conjugate_symmetry(self):
        spec, _ = killed_stable_characteristics(SYM, 1)
        psi = segment_char_exponent(spec, 2.0)
        psi_neg = segment_char_exponent(spec, -2.0)
        assert psi_neg == pytest.approx(np.conj(psi))

    def test_gaussian_only(self):
        from lksim.levy_model import LevySpec
        spec = LevySpec(linear=-0.5, gaussian=1.0, measure=None, killing=0.0)
        psi = segment_char_exponent(spec, 3.0)
        assert psi == pytest.approx(-0.5j * 3.0 - 4.5)

    def test_real_part_negative(self):
        spec, _ = killed_stable_characteristics(SYM, 1)
        for lam in (0.5, 1.0, 4.0):
            assert segment_char_exponent(spec, lam).real < 0.0
