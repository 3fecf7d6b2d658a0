"""
Acceptance suite: one test per criterion, each at its stated tolerance.

Every test records a ``[PASS]``/``[FAIL]`` line that pytest prints in the
"acceptance criteria" section of the terminal summary. Run alone with::

    pytest tests/test_acceptance.py -v

Set ``NLARCH_FRED_CSV`` to a downloaded VXXLECLS series to enable the
soft reproduction check of the reference estimates.
"""

import math
import os
import time

import numpy as np
import pytest
from scipy import integrate, stats

from conftest import record
from nlarch.cli import main
from nlarch.distributions import SkewT, UnitNormal
from nlarch.estimation import FitSpec, conditional_loglik, fit, loglik_gradient, residual_diagnostics
from nlarch.io import ingest_csv
from nlarch.model import (
    REFERENCE_ESTIMATES,
    REFERENCE_STANDARD_ERRORS,
    ARCHSpec,
    ARCoefficients,
    BoundedShrink,
    LinearMean,
    ModelSpec,
    StateVector,
    _arch_companion,
    build_companion,
    empirical_model,
)
from nlarch.simulation import simulate, simulate_many
from nlarch.stability import (
    DriftParams,
    build_bullet_norm,
    check_lemma2,
    default_drift_grid,
    envelope_constants,
    ergodicity_report,
    induced_norm_mc,
    moment_mu_bar,
    verify_drift,
)

pytestmark = pytest.mark.slow

C_HAT, D_HAT = REFERENCE_ESTIMATES["c"], REFERENCE_ESTIMATES["d"]
DATA_MIN, DATA_MAX = 11.71, 130.61


def test_criterion_1_lemma2_contraction():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst, failures, n = -math.inf, 0, 0
    for q in (1, 2, 3):
        for bs0 in (1.0, 2.0):
            mu = moment_mu_bar(UnitNormal(), 2 * bs0)
            for _ in range(50):
                alpha = rng.dirichlet(np.ones(q)) * rng.uniform(0.0, 0.95) / mu
                assert check_lemma2(alpha, mu)[1] > 0.05
                est = induced_norm_mc(build_bullet_norm(_arch_companion(alpha * mu)), alpha,
                                      UnitNormal(), bs0, draws=100_000,
                                      seed=rng.integers(2 ** 63))
                bound = est.estimate + 2 * est.standard_error
                worst = max(worst, bound)
                failures += not bound < 1
                n += 1
    elapsed = time.perf_counter() - t0
    ok = record("1 ARCH contraction",
                failures == 0 and elapsed <= 120,
                f"{n - failures}/{n} cases with estimate + 2 SE < 1 (max {worst:.4f}), "
                f"{elapsed:.1f} s (limit 120 s)")
    assert ok


def _random_pi(rng, p):
    """AR coefficients whose reciprocal roots lie inside radius 0.98, some complex."""
    k = p - 1
    n_pairs = int(rng.integers(0, k // 2 + 1))
    radius, phase = rng.uniform(0, 0.98, n_pairs), rng.uniform(0, math.pi, n_pairs)
    pairs = radius * np.exp(1j * phase)
    roots = np.concatenate((pairs, pairs.conj(), rng.uniform(-0.98, 0.98, k - 2 * n_pairs)))
    return tuple(np.real(-np.poly(roots)[1:])) if k else ()


def test_criterion_2_companion_identity():
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        pi = _random_pi(rng, int(rng.integers(1, 6)))
        c = build_companion(ModelSpec(ARCoefficients(pi), LinearMean(0.0), ARCHSpec(1.0, (0.1,))))
        worst = max(worst, float(np.max(np.abs(c.Pi - c.A @ c.Phi @ np.linalg.inv(c.A)))))
    elapsed = time.perf_counter() - t0
    ok = record("2 companion identity", worst < 1e-12 and elapsed < 1,
                f"max |Pi - A Phi A^-1| = {worst:.2e} over 100 stable pi, {elapsed:.3f} s")
    assert ok


def test_criterion_3_homoskedastic_drift():
    mean = BoundedShrink(1.0, 1.0, 1.0)
    model = ModelSpec(ARCoefficients(), mean, ARCHSpec(1.0, (0.0,)))
    M0 = envelope_constants(mean)[2]
    mags = np.geomspace(10 * M0, 1e4 * M0, 16)
    grid = [StateVector([s * v, 0.0], [0.0]) for v in mags for s in (-1.0, 1.0)]
    t0 = time.perf_counter()
    rep = verify_drift(model, DriftParams(), grid=grid, draws=100_000, seed=303,
                       tune_weights=True)
    elapsed = time.perf_counter() - t0
    ok_points = int(np.sum(rep.margin <= 2 * rep.se))
    ok = record("3 homoskedastic drift", ok_points == len(grid) and elapsed <= 120,
                f"{ok_points}/{len(grid)} points with |x| >= 10 M0 = {10 * M0:g} have "
                f"margin <= 2 SE (max {rep.margin.max():.3g}), verdict {rep.verdict}, "
                f"s2={rep.params.s2:g}, {elapsed:.1f} s")
    assert ok


def test_criterion_4_arch_drift_certified():
    model = empirical_model()
    params = DriftParams(s0=1.0, b=1.0, rho=1.0)
    span = 10 * DATA_MAX / DATA_MIN * 1.01
    t0 = time.perf_counter()
    grid = default_drift_grid(model, M0=DATA_MIN, span=span, seed=404, params=params)
    rep = ergodicity_report(model, params, draws=100_000, seed=404, tune_weights=True,
                            grid=grid)
    elapsed = time.perf_counter() - t0
    z1 = np.array([abs(s.x[0]) for s in grid])
    ok = (rep.verdict == "certified" and rep.rate_exponent == 1 and rep.moment_order == 1
          and z1.min() <= DATA_MIN and z1.max() >= 10 * DATA_MAX and elapsed <= 300)
    d = rep.drift
    ok = record("4 ARCH drift certification", ok,
                f"verdict {rep.verdict}, rate exponent {rep.rate_exponent:g}, moment order "
                f"{rep.moment_order:g}, |z1| in [{z1.min():.2f}, {z1.max():.1f}], "
                f"{len(grid)} points, s1={d.params.s1:g} s2={d.params.s2:g}, "
                f"N={d.petite_bound:.4g}, {elapsed:.1f} s (limit 300 s)")
    assert ok


def test_criterion_5_skewt():
    law = SkewT(C_HAT, D_HAT)

    def moment(k):
        f = lambda x: x ** k * law.density(x)
        return sum(integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-13, limit=500)[0]
                   for a, b in ((-np.inf, -10), (-10, 0), (0, 10), (10, np.inf)))

    total, mean, var = moment(0), moment(1), moment(2) - moment(1) ** 2
    draws = law.sample(100_000, np.random.default_rng(505))
    ks = stats.kstest(draws, law.cdf).statistic
    x = np.linspace(-20, 20, 1000)
    sym = SkewT(2.5, 2.5)
    symmetric = bool(np.array_equal(sym.density(x), sym.density(-x)))
    ok = (abs(total - 1) < 1e-8 and abs(mean) < 1e-7 and abs(var - 1) < 1e-6
          and ks < 0.006 and symmetric)
    ok = record("5 skew-t correctness", ok,
                f"|int f - 1| = {abs(total - 1):.1e}, |m| = {abs(mean):.1e}, "
                f"|s^2 - 1| = {abs(var - 1):.1e}, KS = {ks:.4f}, symmetric {symmetric}")
    assert ok


@pytest.fixture(scope="module")
def recovery_fits():
    paths = simulate_many(empirical_model(), 2715, 20, seed=606)
    return [fit(p.y) for p in paths]


def test_criterion_6_parameter_recovery(recovery_fits):
    names = recovery_fits[0].spec.free
    hits = {k: 0 for k in names}
    all_hit = 0
    for res in recovery_fits:
        inside = {k: abs(res.estimates[k] - REFERENCE_ESTIMATES[k])
                  <= 3 * res.standard_errors[k] for k in names}
        for k, v in inside.items():
            hits[k] += bool(v)
        all_hit += all(inside.values())
    times = [r.elapsed for r in recovery_fits]
    worst = min(hits, key=hits.get)
    ok = min(hits.values()) >= 18 and float(np.median(times)) <= 60
    ok = record("6 parameter recovery", ok,
                f"each parameter within 3 SE in >= {hits[worst]}/20 replications "
                f"(lowest: {worst}); all jointly in {all_hit}/20; median fit "
                f"{np.median(times):.1f} s (limit 60 s)")
    # dispersion of estimates against the mean reported SE
    est = np.array([[r.estimates[k] for k in names] for r in recovery_fits])
    se = np.array([[r.standard_errors[k] for k in names] for r in recovery_fits])
    missing = int(np.sum(~np.all(np.isfinite(se), axis=1)))
    ratio = est.std(axis=0, ddof=1) / np.nanmean(se, axis=0)
    calibrated = bool(np.all((ratio > 0.5) & (ratio < 2)))
    record("6 SE calibration", calibrated,
           "sd(estimates) / mean(SE): " + ", ".join(f"{k} {r:.2f}"
                                                    for k, r in zip(names, ratio))
           + f"; fits without SEs: {missing}")
    assert ok and calibrated


def test_criterion_7_residual_acf():
    # conditioning on p + q = 4 observations leaves T = 2715 residuals
    paths = simulate_many(empirical_model(), 2719, 20, seed=707)
    counts, bands = [], []
    for path in paths:
        res = fit(path.y)
        diag = residual_diagnostics(res, None, max_lag=100)
        counts.append(diag.n_outside)
        bands.append((diag.n, diag.band))
    n, band = bands[0]
    med = float(np.median(counts))
    ok = (n == 2715 and abs(band - 1.96 / math.sqrt(2715)) < 1e-15
          and round(band, 3) == 0.038 and med <= 8)
    ok = record("7 residual ACF", ok,
                f"T = {n}, band = +-{band:.4f}, median {med:g} of 100 lags outside "
                f"(range {min(counts)}-{max(counts)})")
    assert ok


def test_criterion_8_property_suites(tmp_path):
    rng = np.random.default_rng(808)
    mono = tri = homog = 0
    for _ in range(1000):
        q = int(rng.integers(1, 6))
        alpha = rng.dirichlet(np.ones(q)) * rng.uniform(0, 0.95)
        norm = build_bullet_norm(_arch_companion(alpha))
        x, y, z = rng.normal(scale=10, size=(3, q))
        lo = np.minimum(np.abs(x), np.abs(y))
        mono += norm(lo) <= norm(np.maximum(np.abs(x), np.abs(y)))
        tri += norm(x + z) <= (norm(x) + norm(z)) * (1 + 1e-14)
        c = rng.normal(scale=100)
        homog += math.isclose(norm(c * x), abs(c) * norm(x), rel_tol=1e-13)

    sample = simulate(empirical_model(), 2719, seed=2024).y
    spec = FitSpec()
    grad_ok = 0
    worst = 0.0
    for _ in range(20):
        par = dict(REFERENCE_ESTIMATES)
        for k in par:
            par[k] *= rng.uniform(0.85, 1.15)
        assert math.isfinite(conditional_loglik(par, sample, spec))
        g1 = loglik_gradient(par, sample, spec, rel_step=1e-4)
        g2 = loglik_gradient(par, sample, spec, rel_step=5e-5)
        # relative to each component, floored at the largest component
        err = float(np.max(np.abs(g1 - g2) / (np.abs(g1) + np.abs(g1).max())))
        worst = max(worst, err)
        grad_ok += err <= 1e-5

    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["--command", "simulate", "--out", str(out), "--seed", "808", "-q"]) == 0
        runs.append((out / "path.csv").read_bytes())
    lib = [simulate(empirical_model(), 500, seed=808).y.tobytes() for _ in range(2)]
    same = runs[0] == runs[1] and lib[0] == lib[1]

    ok = mono == tri == homog == 1000 and grad_ok == 20 and same
    ok = record("8 property suites", ok,
                f"monotone {mono}/1000, triangle {tri}/1000, homogeneous {homog}/1000; "
                f"Richardson {grad_ok}/20 (max rel diff {worst:.1e}); "
                f"simulate byte-identical {same}")
    assert ok


@pytest.mark.skipif(not os.environ.get("NLARCH_FRED_CSV"),
                    reason="set NLARCH_FRED_CSV to a VXXLECLS download")
def test_reference_estimates_soft_check():
    series = ingest_csv(os.environ["NLARCH_FRED_CSV"])
    res = fit(series.values)
    off = [k for k, v in REFERENCE_ESTIMATES.items()
           if abs(res.estimates[k] - v) > 2 * REFERENCE_STANDARD_ERRORS[k]]
    record("6 soft: reference estimates", not off,
           f"{len(series)} observations; outside 2 SE: {', '.join(off) or 'none'}")
