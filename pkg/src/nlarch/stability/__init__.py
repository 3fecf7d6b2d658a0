"""Assumption checks, drift norms and Monte Carlo drift verification."""

from nlarch.stability.checks import (
    EnvelopeReport,
    check_arch_assumption,
    check_lemma2,
    check_mean_envelope,
    check_root_condition,
    envelope_constants,
    moment_mu_bar,
)
from nlarch.stability.drift import (
    DriftContext,
    DriftParams,
    DriftReport,
    default_drift_grid,
    drift_context,
    drift_V,
    verify_drift,
)
from nlarch.stability.report import ErgodicityReport, claimed_rates, ergodicity_report
from nlarch.stability.norms import (
    BulletNorm,
    InducedNormEstimate,
    StarNorm,
    build_bullet_norm,
    build_star_norm,
    induced_norm_mc,
    neumann_weights,
)

__all__ = [
    "EnvelopeReport", "check_arch_assumption", "check_lemma2", "check_mean_envelope",
    "check_root_condition", "envelope_constants", "moment_mu_bar",
    "DriftContext", "DriftParams", "DriftReport", "default_drift_grid",
    "drift_context", "drift_V", "verify_drift",
    "BulletNorm", "InducedNormEstimate", "StarNorm", "build_bullet_norm",
    "build_star_norm", "induced_norm_mc", "neumann_weights",
    "ErgodicityReport", "claimed_rates", "ergodicity_report",
]
