import json
import math

import numpy as np
import pytest
from scipy import stats

from nlarch.distributions import SkewT, UnitNormal
from nlarch.errors import ConfigError, DataError, InsufficientDataError
from nlarch.estimation import (
    LOGLIK_SENTINEL,
    _pull_inside,
    FitSpec,
    conditional_loglik,
    default_init,
    fit,
    from_unconstrained,
    loglik_contributions,
    loglik_gradient,
    model_from_params,
    model_loglik,
    numerical_hessian,
    param_names,
    residual_diagnostics,
    to_unconstrained,
)
from nlarch.model import (
    REFERENCE_ESTIMATES,
    ARCHSpec,
    ARCoefficients,
    LinearMean,
    ModelSpec,
    empirical_model,
)
from nlarch.simulation import simulate

TRUTH = dict(REFERENCE_ESTIMATES)


@pytest.fixture(scope="module")
def sample():
    return simulate(empirical_model(), 2719, seed=2024).y


@pytest.fixture(scope="module")
def fitted(sample):
    return fit(sample)


def scalar_loglik(y, par):
    """Scalar-loop oracle for p = 1, q = 1, shared gate, skew-t innovations."""
    nu, gam, a, om, a1, c, d = (par[k] for k in ("nu", "gamma", "a", "omega", "alpha_1",
                                                 "c", "d"))
    raw = stats.jf_skew_t(c, d)
    m = raw.mean()
    s = raw.std()

    def L(x):
        return 1.0 / (1.0 + math.exp(-gam * (x - a)))

    def g(x):
        return x - nu * L(x) + nu * (1 - L(x))

    total = 0.0
    for t in range(2, len(y)):
        e_prev = y[t - 1] - g(y[t - 2])
        e_t = y[t] - g(y[t - 1])
        sig = math.sqrt(L(y[t - 1]) * (om + a1 * e_prev ** 2))
        z = e_t / sig
        total += math.log(s * raw.pdf(s * z + m)) - math.log(sig)
    return total


class TestLikelihood:
    def test_five_point_oracle(self):
        y = [24.0, 25.5, 23.8, 26.1, 27.0]
        spec = FitSpec(p=1, q=1)
        par = dict(nu=0.3, gamma=0.2, a=25.0, omega=2.0, alpha_1=0.4, c=3.5, d=2.2)
        assert conditional_loglik(par, y, spec) == pytest.approx(scalar_loglik(y, par),
                                                                 rel=1e-12)

    def test_gaussian_iid_closed_form(self):
        y = np.random.default_rng(1).normal(size=200)
        model = ModelSpec(ARCoefficients(), LinearMean(0.0), ARCHSpec(1.0, (0.0,)),
                          UnitNormal())
        want = np.sum(-0.5 * math.log(2 * math.pi) - 0.5 * y[2:] ** 2)
        assert model_loglik(model, y) == pytest.approx(want, rel=1e-13)

    @pytest.mark.parametrize("spec", [FitSpec(), FitSpec(p=3, q=2, gate="separate",
                                                         innovation="studentt"),
                                      FitSpec(p=2, q=1, gate="none", innovation="normal")])
    def test_template_matches_generic_model(self, spec, sample):
        par = default_init(sample, spec)
        par.update({k: v for k, v in {"pi_1": 0.2, "pi_2": -0.1}.items() if k in par})
        assert conditional_loglik(par, sample, spec) == pytest.approx(
            model_loglik(model_from_params(par, spec), sample), rel=1e-12)

    @pytest.mark.parametrize("bad", [dict(alpha_1=0.5, alpha_2=0.3, alpha_3=0.2),
                                     dict(c=1.0), dict(omega=-1.0), dict(nu=0.0)])
    def test_sentinel(self, bad, sample):
        par = dict(TRUTH, **bad)
        assert conditional_loglik(par, sample, FitSpec()) == LOGLIK_SENTINEL

    def test_contributions_sum(self, sample):
        c = loglik_contributions(TRUTH, sample, FitSpec())
        assert c.shape == (2715,)
        assert c.sum() == pytest.approx(conditional_loglik(TRUTH, sample, FitSpec()))

    def test_vector_forms(self, sample):
        spec = FitSpec(fixed={"gamma": 0.171})
        full = [TRUTH[n] for n in param_names(spec)]
        free = [TRUTH[n] for n in spec.free]
        assert conditional_loglik(full, sample, spec) == conditional_loglik(free, sample, spec)

    def test_non_finite_data(self):
        with pytest.raises(DataError):
            conditional_loglik(TRUTH, [1.0, np.nan, 2.0, 3.0, 4.0, 5.0], FitSpec())

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            conditional_loglik(TRUTH, [1.0, 2.0, 3.0, 4.0], FitSpec())


class TestTransforms:
    def test_round_trip(self, sample):
        spec = FitSpec()
        theta = to_unconstrained(TRUTH, spec)
        back = from_unconstrained(theta, spec)
        for k in TRUTH:
            assert back[k] == pytest.approx(TRUTH[k], rel=1e-12)
        assert conditional_loglik(back, sample, spec) == pytest.approx(
            conditional_loglik(TRUTH, sample, spec), abs=1e-10)

    def test_fixed_alpha_uses_log(self):
        spec = FitSpec(fixed={"alpha_2": 0.3})
        par = from_unconstrained(to_unconstrained(TRUTH, spec), spec)
        assert par["alpha_2"] == 0.3 and par["alpha_1"] == pytest.approx(0.406)

    def test_softmax_keeps_sum_below_one(self):
        spec = FitSpec()
        theta = to_unconstrained(TRUTH, spec)
        theta[4:7] = [30.0, 30.0, 30.0]
        par = from_unconstrained(theta, spec)
        assert sum(par[f"alpha_{i}"] for i in (1, 2, 3)) < 1


class TestGradient:
    def test_richardson_consistency(self, sample):
        spec = FitSpec()
        g1 = loglik_gradient(TRUTH, sample, spec, rel_step=1e-4)
        g2 = loglik_gradient(TRUTH, sample, spec, rel_step=5e-5)
        np.testing.assert_allclose(g1, g2, rtol=1e-5, atol=1e-5 * np.abs(g1).max())

    def test_hessian_quadratic(self):
        A = np.array([[2.0, 0.5], [0.5, 1.0]])
        H = numerical_hessian(lambda x: 0.5 * x @ A @ x, np.array([0.3, -0.2]))
        np.testing.assert_allclose(H, A, atol=1e-6)


class TestFitSpec:
    def test_names(self):
        assert param_names(FitSpec()) == ["nu", "gamma", "a", "omega", "alpha_1", "alpha_2",
                                          "alpha_3", "c", "d"]
        assert param_names(FitSpec(p=2, q=1, gate="separate", innovation="studentt")) == [
            "pi_1", "nu", "gamma", "a", "gamma_v", "a_v", "omega", "alpha_1", "df"]

    @pytest.mark.parametrize("kw", [dict(p=0), dict(gate="other"), dict(innovation="ged"),
                                    dict(fixed={"zeta": 1.0}), dict(bounds={"nu": (1, 0)}),
                                    dict(max_iter=0)])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            FitSpec(**kw)


class TestFit:
    def test_recovers_truth(self, fitted):
        assert fitted.converged and fitted.hessian_ok
        for k, v in TRUTH.items():
            assert abs(fitted.estimates[k] - v) < 3 * fitted.standard_errors[k], k
        assert fitted.n_obs == 2715

    def test_standard_errors_positive(self, fitted):
        assert all(se > 0 for se in fitted.standard_errors.values())

    def test_sigma_positive(self, fitted):
        assert fitted.sigma.min() > 0 and fitted.residuals.shape == fitted.sigma.shape

    def test_restart_at_optimum(self, fitted, sample):
        again = fit(sample, FitSpec(init=fitted.estimates))
        assert again.converged
        assert again.loglik >= fitted.loglik - 1e-6
        for k, v in fitted.estimates.items():
            assert again.estimates[k] == pytest.approx(v, rel=1e-3, abs=1e-4)

    def test_escapes_collapsed_intercept(self):
        # the first pass on this sample stalls at nu ~ 5e-8, loglik -6164.59;
        # starting from the truth reaches -6157.387
        from nlarch.simulation import simulate_many
        y = simulate_many(empirical_model(), 2715, 20, seed=606)[19].y
        res = fit(y)
        assert res.converged and res.hessian_ok
        assert res.loglik == pytest.approx(-6157.387276, abs=1e-3)
        assert res.estimates["nu"] == pytest.approx(0.17332, abs=1e-3)

    def test_pull_inside(self):
        spec = FitSpec()
        init = default_init(np.linspace(10, 20, 50), spec)
        par = dict(TRUTH, nu=1e-9)
        start = from_unconstrained(_pull_inside(to_unconstrained(par, spec), spec, init), spec)
        assert start["nu"] == pytest.approx(init["nu"]) and start["a"] == pytest.approx(TRUTH["a"])
        par = dict(TRUTH, alpha_1=0.5, alpha_2=0.3, alpha_3=0.195)
        start = from_unconstrained(_pull_inside(to_unconstrained(par, spec), spec, init), spec)
        assert sum(start[f"alpha_{i}"] for i in (1, 2, 3)) == pytest.approx(0.9)
        assert _pull_inside(to_unconstrained(TRUTH, spec), spec, init) is None

    def test_iteration_cap(self, sample):
        res = fit(sample[:600], FitSpec(max_iter=1))
        assert not res.converged
        assert res.convergence["status"] == "failed"
        assert set(res.estimates) == set(TRUTH)

    def test_fixed_parameter(self, sample):
        res = fit(sample[:1500], FitSpec(fixed={"c": 3.551, "d": 2.138}))
        assert res.estimates["c"] == 3.551 and math.isnan(res.standard_errors["c"])

    def test_serialization(self, fitted, tmp_path):
        doc = json.loads(fitted.to_json(tmp_path / "fit.json"))
        assert doc["n_obs"] == 2715 and doc["settings"]["q"] == 3
        fitted.write_series(tmp_path / "s.csv")
        lines = (tmp_path / "s.csv").read_text().splitlines()
        assert lines[0] == "t,residual,sigma" and len(lines) == 2716
        assert lines[1].startswith("5,")


class TestDiagnostics:
    def test_band(self, fitted):
        d = residual_diagnostics(fitted, None)
        assert d.band == pytest.approx(0.0376, abs=5e-5)
        assert d.acf_eps.shape == (100,)
        assert d.n_outside <= 10

    def test_qq_near_diagonal(self):
        law = SkewT(3.551, 2.138)
        d = residual_diagnostics(law.sample(100_000, 3), law)
        n = d.qq_theoretical.size
        core = slice(int(0.01 * n), int(0.99 * n))
        assert np.max(np.abs(d.qq_theoretical[core] - d.qq_empirical[core])) < 0.15

    def test_histogram_integrates(self):
        law = UnitNormal()
        d = residual_diagnostics(law.sample(5000, 4), law)
        assert np.sum(d.hist_density * np.diff(d.hist_edges)) == pytest.approx(1.0)

    def test_csvs(self, fitted, tmp_path):
        files = residual_diagnostics(fitted, None).write_csvs(tmp_path)
        assert sorted(f.name for f in files) == ["acf.csv", "density_curve.csv",
                                                  "histogram.csv", "qq.csv"]
