"""Aggregate verdict over all assumption checks and the drift verification."""

from __future__ import annotations

from dataclasses import dataclass, field
import json
import math

from nlarch.errors import ConfigError, ConstructionError, DivergentMomentError
from nlarch.model import (
    LogisticIntercept,
    ModelSpec,
    TimeVaryingSlope,
)
from nlarch.stability.checks import (
    EnvelopeReport,
    check_arch_assumption,
    check_lemma2,
    check_mean_envelope,
    check_root_condition,
    envelope_constants,
    moment_mu_bar,
)
from nlarch.stability.drift import SCHEMA_VERSION, DriftParams, DriftReport, verify_drift
from nlarch.stability.norms import InducedNormEstimate, build_bullet_norm, induced_norm_mc

__all__ = ["ErgodicityReport", "ergodicity_report", "claimed_rates"]


def claimed_rates(model: ModelSpec, params: DriftParams) -> tuple[str, float, float]:
    """
    Model family, polynomial rate exponent ``delta - 1`` and moment order.

    The logistic-intercept family has ``rho = 1`` and ``delta = 2 s0``; the
    time-varying-slope family uses its own ``rho`` with ``delta = 2 s0 / rho``;
    anything else takes ``delta`` and ``rho`` from ``params``.
    """
    s0 = params.s0
    mean = model.mean
    if isinstance(mean, LogisticIntercept):
        return "logistic_intercept", 2 * s0 - 1, 2 * s0 - 1
    if isinstance(mean, TimeVaryingSlope):
        return "time_varying_slope", 2 * s0 / mean.rho - 1, 2 * s0 - mean.rho
    return "general", params.rate_exponent, params.moment_order


@dataclass
class ErgodicityReport:
    verdict: str
    family: str
    rate_exponent: float
    moment_order: float
    checks: dict = field(default_factory=dict)
    drift: DriftReport | None = None

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"

    def to_dict(self) -> dict:
        return {
            "version": SCHEMA_VERSION, "verdict": self.verdict, "family": self.family,
            "rate_exponent": self.rate_exponent, "moment_order": self.moment_order,
            "checks": self.checks,
            "drift": None if self.drift is None else {
                k: v for k, v in self.drift.to_dict().items() if k != "points"},
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, default=_jsonable)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if hasattr(v, "tolist"):
        return v.tolist()
    raise TypeError(type(v))


def ergodicity_report(model: ModelSpec, params: DriftParams,
                      envelope: EnvelopeReport | None = None,
                      induced: InducedNormEstimate | None = None,
                      drift: DriftReport | None = None,
                      run_drift: bool = True, draws: int = 100_000, seed=None,
                      tune_weights: bool = True, grid=None,
                      petite_bound: float | None = None,
                      workers: int = 1) -> ErgodicityReport:
    """
    Run (or collect) every check in order and stop at the first failure.

    Order: AR roots, mean envelope, ARCH parameters, moment and ARCH
    contraction, induced-norm contraction, drift. The verdict is
    ``"certified"``, ``"failed:<check>"`` or ``"inconclusive:<reason>"``.

    Parameters
    ----------
    envelope, induced, drift : optional
        Precomputed results; missing ones are computed here (the drift only
        when ``run_drift``).
    grid, petite_bound, workers, tune_weights :
        Passed to :func:`verify_drift` when the drift is computed here.
    """
    family, rate, order = claimed_rates(model, params)
    checks: dict = {}

    def done(verdict: str) -> ErgodicityReport:
        return ErgodicityReport(verdict, family, rate, order, checks, drift)

    ok, modulus = check_root_condition(model.ar)
    checks["root_condition"] = {"passed": ok, "min_root_modulus": _finite_or_none(modulus)}
    if not ok:
        return done("failed:Assumption2(i)")

    if envelope is None:
        try:
            r, rho, M0, K0 = envelope_constants(model.mean)
            envelope = check_mean_envelope(model.mean, r, rho, M0, K0)
        except ConfigError as exc:
            checks["envelope"] = {"passed": False, "reason": str(exc)}
            return done("failed:Assumption2(ii)")
    checks["envelope"] = envelope.to_dict()
    if not envelope.passed:
        return done("failed:Assumption2(ii)")

    ok, why = check_arch_assumption(model.arch)
    checks["arch"] = {"passed": ok, "reason": why}
    if not ok:
        return done("failed:Assumption3")

    try:
        mu = moment_mu_bar(model.innovation, 2 * params.bs0)
    except DivergentMomentError as exc:
        checks["lemma2"] = {"passed": False, "reason": str(exc)}
        return done("failed:Assumption4")
    ok, slack = check_lemma2(model.arch.alpha, mu)
    checks["lemma2"] = {"passed": ok, "slack": slack, "mu_bar": mu}
    if not ok:
        return done("failed:Assumption4")

    if induced is None:
        from nlarch.model import build_companion
        try:
            norm = build_bullet_norm(build_companion(model, mu).Lambda_bar)
        except ConstructionError as exc:
            checks["induced_norm"] = {"holds": False, "reason": str(exc)}
            return done("failed:Assumption4")
        induced = induced_norm_mc(norm, model.arch.alpha, model.innovation, params.bs0,
                                  draws=draws, seed=seed)
    checks["induced_norm"] = induced.to_dict()
    if not induced.holds:
        if induced.estimate >= 1:
            return done("failed:Assumption4")
        return done("inconclusive:induced norm within 2 MC standard errors of one")

    if drift is None:
        if not run_drift:
            return done("inconclusive:drift not verified")
        drift = verify_drift(model, params, grid=grid, draws=draws, seed=seed,
                             petite_bound=petite_bound, tune_weights=tune_weights,
                             workers=workers)
    checks["drift"] = {"verdict": drift.verdict, "petite_bound": drift.petite_bound,
                       "e_tilde": drift.e_tilde, "b_tilde": drift.b_tilde}
    if drift.verdict.startswith("failed"):
        return done("failed:ConditionD")
    return done(drift.verdict)


def _finite_or_none(v: float):
    return v if math.isfinite(v) else None
