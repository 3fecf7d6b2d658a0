import math

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate, stats

from nlarch.distributions import (
    SkewT,
    StudentT,
    UnitNormal,
    density,
    innovation_from_dict,
    log_density,
    sample,
    skewt_log_density_raw,
    skewt_standardize,
    spawn_generators,
)
from nlarch.errors import ConfigError, DivergentMomentError
from nlarch.stability import moment_mu_bar

C_HAT, D_HAT = 3.551, 2.138
# mean and standard deviation of the raw law at (C_HAT, D_HAT), from
# scipy.stats.jf_skew_t(...).stats("mv"), frozen
M_HAT, S_HAT = 0.8465286907023395, 1.4383499751762607


def mp_log_density(x, c, d):
    mp.mp.dps = 50
    x, c, d = mp.mpf(x), mp.mpf(c), mp.mpf(d)
    r = mp.sqrt(c + d + x * x)
    val = (1 + x / r) ** (c + mp.mpf(1) / 2) * (1 - x / r) ** (d + mp.mpf(1) / 2)
    return float(mp.log(val / (2 ** (c + d - 1) * mp.beta(c, d) * mp.sqrt(c + d))))


def integral(f, lo=-np.inf, hi=np.inf, split=0.0, rel=1e-12):
    opts = dict(epsabs=0.0, epsrel=rel, limit=400)
    return (integrate.quad(f, lo, split, **opts)[0]
            + integrate.quad(f, split, hi, **opts)[0])


class TestRawDensity:
    def test_c1_d1_at_zero(self):
        # C_{1,1} = 2 B(1,1) sqrt(2) = 2 sqrt(2)
        assert skewt_log_density_raw(0.0, 1.0, 1.0) == pytest.approx(-math.log(2 * math.sqrt(2)),
                                                                     abs=1e-14)

    def test_matches_scipy_in_the_body(self):
        x = np.linspace(-30, 30, 121)
        want = stats.jf_skew_t(C_HAT, D_HAT).logpdf(x)
        np.testing.assert_allclose(skewt_log_density_raw(x, C_HAT, D_HAT), want, rtol=1e-12)

    @pytest.mark.parametrize("x", [-1e8, -1e5, -1e3, 1e3, 1e5, 1e8])
    def test_tail_matches_high_precision(self, x):
        assert skewt_log_density_raw(x, C_HAT, D_HAT) == pytest.approx(
            mp_log_density(x, C_HAT, D_HAT), rel=1e-12)

    def test_symmetric(self):
        x = np.linspace(-50, 50, 1000)
        np.testing.assert_array_equal(skewt_log_density_raw(x, 2.7, 2.7),
                                      skewt_log_density_raw(-x, 2.7, 2.7))

    def test_normalized(self):
        total = integral(lambda x: math.exp(skewt_log_density_raw(x, C_HAT, D_HAT)))
        assert abs(total - 1) < 1e-8


class TestStandardize:
    def test_scipy_oracle(self):
        m, s = skewt_standardize(C_HAT, D_HAT)
        assert m == pytest.approx(M_HAT, rel=1e-9)
        assert s == pytest.approx(S_HAT, rel=1e-9)
        assert m > 0  # c > d skews to the right

    def test_methods_agree(self):
        for c, d in [(1.3, 4.0), (C_HAT, D_HAT), (8.0, 1.6)]:
            np.testing.assert_allclose(skewt_standardize(c, d, "jacobi"),
                                       skewt_standardize(c, d, "quad"), rtol=1e-10)

    def test_symmetric_mean_zero(self):
        assert skewt_standardize(3.0, 3.0)[0] == pytest.approx(0.0, abs=1e-12)

    def test_requires_c_d_above_one(self):
        with pytest.raises(ConfigError):
            skewt_standardize(1.0, 2.0)


ALL_LAWS = [UnitNormal(), StudentT(5.0), SkewT(C_HAT, D_HAT), SkewT(1.5, 6.0)]


@pytest.mark.parametrize("law", ALL_LAWS, ids=repr)
class TestStandardizedLaws:
    def test_normalized(self, law):
        assert abs(integral(lambda x: float(law.density(x))) - 1) < 1e-8

    def test_mean_zero(self, law):
        assert abs(integral(lambda x: x * float(law.density(x)))) < 1e-7

    def test_unit_variance(self, law):
        assert abs(integral(lambda x: x * x * float(law.density(x))) - 1) < 1e-6

    def test_cdf_ppf_inverse(self, law):
        u = np.linspace(0.001, 0.999, 201)
        np.testing.assert_allclose(law.cdf(law.ppf(u)), u, atol=1e-9)

    def test_cdf_matches_density_integral(self, law):
        for x in (-2.0, 0.0, 0.7, 3.0):
            want = integrate.quad(lambda z: float(law.density(z)), -np.inf, x,
                                  epsabs=0, epsrel=1e-11, limit=400)[0]
            assert float(law.cdf(x)) == pytest.approx(want, abs=1e-9)

    def test_sampler_ks(self, law):
        draws = law.sample(100_000, 11)
        assert stats.kstest(draws, law.cdf).statistic < 0.006


class TestSampling:
    def test_normal_clt(self):
        x = sample(UnitNormal(), 1_000_000, 1)
        assert abs(x.mean()) < 0.004 and abs(x.var() - 1) < 0.01

    def test_skewt_variance_and_skew(self):
        x = sample(SkewT(C_HAT, D_HAT), 1_000_000, 2)
        assert abs(x.var() - 1) < 0.01
        assert stats.skew(x) > 0

    def test_same_seed_same_draws(self):
        for law in ALL_LAWS:
            np.testing.assert_array_equal(law.sample(1000, 5), law.sample(1000, 5))

    def test_spawned_streams_differ(self):
        a, b = spawn_generators(9, 2)
        assert not np.array_equal(a.random(5), b.random(5))

    def test_n_must_be_positive(self):
        with pytest.raises(ConfigError):
            UnitNormal().sample(0)


class TestPointValues:
    def test_normal_at_zero(self):
        assert float(density(UnitNormal(), 0.0)) == pytest.approx(1 / math.sqrt(2 * math.pi),
                                                                   rel=1e-15)

    def test_skewt_symmetric_case(self):
        law = SkewT(2.0, 2.0)
        x = np.linspace(-10, 10, 1000)
        np.testing.assert_array_equal(law.density(x), law.density(-x))

    def test_log_density_consistent(self):
        law = SkewT(C_HAT, D_HAT)
        x = np.linspace(-5, 5, 11)
        np.testing.assert_allclose(np.exp(log_density(law, x)), density(law, x), rtol=1e-14)

    def test_studentt_scipy_oracle(self):
        sc = math.sqrt(3 / 5)
        x = np.linspace(-6, 6, 25)
        np.testing.assert_allclose(StudentT(5.0).density(x), stats.t.pdf(x / sc, 5) / sc,
                                   rtol=1e-13)


class TestMoments:
    def test_normal_fourth_moment(self):
        # E eps^4 = 3
        assert moment_mu_bar(UnitNormal(), 4.0) == pytest.approx(math.sqrt(3), rel=1e-9)

    def test_normal_second(self):
        assert moment_mu_bar(UnitNormal(), 2.0) == 1.0

    def test_skewt_divergent(self):
        with pytest.raises(DivergentMomentError):
            SkewT(C_HAT, D_HAT).abs_moment(2 * D_HAT)
        with pytest.raises(DivergentMomentError):
            moment_mu_bar(SkewT(3.0, 1.9), 4.0)

    def test_studentt_divergent(self):
        with pytest.raises(DivergentMomentError):
            StudentT(4.0).abs_moment(4.0)

    def test_skewt_abs_moment_oracle(self):
        law = SkewT(C_HAT, D_HAT)
        m, s = M_HAT, S_HAT
        want = integral(lambda x: abs((x - m) / s) ** 3
                        * float(stats.jf_skew_t(C_HAT, D_HAT).pdf(x)), split=m, rel=1e-10)
        assert law.abs_moment(3.0) == pytest.approx(want, rel=1e-8)


class TestConstruction:
    @pytest.mark.parametrize("spec", [{"kind": "skewt", "c": 1.0, "d": 3.0},
                                      {"kind": "studentt", "df": 2.0},
                                      {"kind": "cauchy"}])
    def test_invalid(self, spec):
        with pytest.raises(ConfigError):
            innovation_from_dict(spec)

    def test_round_trip(self):
        for law in ALL_LAWS:
            assert innovation_from_dict(law.to_dict()) == law
