"""
JSON Schemas (draft 2020-12) of the emitted JSON documents.

Non-finite numbers are written as ``null``, so most numeric fields accept
``null`` as well.
"""

from __future__ import annotations

__all__ = [
    "DRIFT_REPORT", "ERGODICITY_REPORT", "FIT_RESULT", "DIAGNOSTICS", "METADATA",
    "SCHEMAS",
]

_NUM = {"type": ["number", "null"]}
_NUM_ARRAY = {"type": "array", "items": {"type": "number"}}
_DRAFT = "https://json-schema.org/draft/2020-12/schema"

_PARAMS = {
    "type": "object",
    "required": ["s0", "b", "rho", "alpha_exp", "s1", "s2", "delta"],
    "properties": {k: {"type": "number"} for k in
                   ("s0", "b", "rho", "alpha_exp", "s1", "s2", "delta")},
}

_POINT = {
    "type": "object",
    "required": ["index", "state", "V", "EV", "drift", "se", "margin", "level",
                 "inside", "overflow"],
    "properties": {
        "index": {"type": "integer", "minimum": 0},
        "state": {
            "type": "object",
            "required": ["x"],
            "properties": {"x": _NUM_ARRAY,
                           "e2_tail": {"anyOf": [_NUM_ARRAY, {"type": "null"}]}},
        },
        "V": _NUM, "EV": _NUM, "drift": _NUM, "se": _NUM, "margin": _NUM,
        "level": _NUM, "inside": {"type": "boolean"}, "overflow": {"type": "boolean"},
    },
}

_SENSITIVITY_ROW = {
    "type": "object",
    "required": ["s1", "s2", "verdict", "certified"],
    "properties": {"s1": {"type": "number"}, "s2": {"type": "number"},
                   "verdict": {"type": "string"}, "certified": {"type": "boolean"},
                   "petite_bound": _NUM, "e_tilde": _NUM, "b_tilde": _NUM,
                   "n_outside": {"type": "integer"}},
}

_VERDICT = {"type": "string", "pattern": "^(certified|failed:.+|inconclusive:.+)$"}

_DRIFT_SUMMARY = {
    "version": {"const": "1.0"},
    "model": {"type": "object", "required": ["p", "q"]},
    "params": _PARAMS,
    "verdict": _VERDICT,
    "certified": {"type": "boolean"},
    "rate_exponent": {"type": "number"},
    "moment_order": {"type": "number"},
    "mc_draws": {"type": "integer", "minimum": 1},
    "petite_bound": _NUM,
    "e_tilde": _NUM,
    "b_tilde": _NUM,
    "sensitivity": {"type": "array", "items": _SENSITIVITY_ROW},
    "notes": {"type": "array", "items": {"type": "string"}},
}

DRIFT_REPORT = {
    "$schema": _DRAFT,
    "title": "DriftReport",
    "type": "object",
    "required": list(_DRIFT_SUMMARY) + ["points"],
    "properties": dict(_DRIFT_SUMMARY, points={"type": "array", "items": _POINT}),
}

ERGODICITY_REPORT = {
    "$schema": _DRAFT,
    "title": "ErgodicityReport",
    "type": "object",
    "required": ["version", "verdict", "family", "rate_exponent", "moment_order",
                 "checks", "drift"],
    "properties": {
        "version": {"const": "1.0"},
        "verdict": _VERDICT,
        "family": {"enum": ["logistic_intercept", "time_varying_slope", "general"]},
        "rate_exponent": {"type": "number"},
        "moment_order": {"type": "number"},
        "checks": {
            "type": "object",
            "properties": {
                "root_condition": {"type": "object", "required": ["passed"]},
                "envelope": {"type": "object", "required": ["passed"]},
                "arch": {"type": "object", "required": ["passed"]},
                "lemma2": {"type": "object", "required": ["passed"]},
                "induced_norm": {"type": "object", "required": ["holds"]},
                "drift": {"type": "object", "required": ["verdict"]},
            },
        },
        "drift": {"anyOf": [{"type": "null"}, {
            "type": "object", "required": list(_DRIFT_SUMMARY),
            "properties": _DRIFT_SUMMARY}]},
    },
}

FIT_RESULT = {
    "$schema": _DRAFT,
    "title": "FitResult",
    "type": "object",
    "required": ["estimates", "standard_errors", "loglik", "n_obs", "converged",
                 "convergence", "hessian_ok", "elapsed_seconds", "settings"],
    "properties": {
        "estimates": {"type": "object", "additionalProperties": _NUM},
        "standard_errors": {"type": "object", "additionalProperties": _NUM},
        "loglik": _NUM,
        "n_obs": {"type": "integer", "minimum": 1},
        "converged": {"type": "boolean"},
        "convergence": {
            "type": "object",
            "required": ["status", "nelder_mead_iterations", "bfgs_iterations",
                         "function_evaluations", "message", "max_abs_gradient"],
            "properties": {"status": {"enum": ["converged", "failed"]},
                           "max_abs_gradient": _NUM},
        },
        "hessian_ok": {"type": "boolean"},
        "elapsed_seconds": {"type": "number", "minimum": 0},
        "settings": {
            "type": "object",
            "required": ["p", "q", "gate", "innovation", "max_iter"],
            "properties": {
                "p": {"type": "integer", "minimum": 1},
                "q": {"type": "integer", "minimum": 1},
                "gate": {"enum": ["shared", "separate", "none"]},
                "innovation": {"enum": ["skewt", "normal", "studentt"]},
            },
        },
    },
}

DIAGNOSTICS = {
    "$schema": _DRAFT,
    "title": "Diagnostics",
    "type": "object",
    "required": ["n", "band", "acf_outside", "acf_sq_outside", "max_lag", "bins"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "band": {"type": "number", "exclusiveMinimum": 0},
        "acf_outside": {"type": "integer", "minimum": 0},
        "acf_sq_outside": {"type": "integer", "minimum": 0},
        "max_lag": {"type": "integer", "minimum": 1},
        "bins": {"type": "integer", "minimum": 1},
        "innovation": {"type": "object", "required": ["kind"]},
    },
}

METADATA = {
    "$schema": _DRAFT,
    "title": "RunMetadata",
    "type": "object",
    "required": ["command", "seed", "config", "versions", "outputs", "exit_code"],
    "properties": {
        "command": {"enum": ["simulate", "fit", "check", "diagnose"]},
        "seed": {"type": "integer", "minimum": 0},
        "config": {"type": "object", "additionalProperties": {"type": "string"}},
        "config_file": {"type": ["string", "null"]},
        "input": {"anyOf": [{"type": ["string", "null"]}, {"type": "object"}]},
        "sources": {"type": "object"},
        "versions": {"type": "object", "required": ["nlarch", "python", "numpy", "scipy"]},
        "outputs": {"type": "array", "items": {"type": "string"}},
        "exit_code": {"enum": [0, 1, 10, 20, 30, 40]},
        "elapsed_seconds": {"type": "number"},
        "error": {"type": "object", "required": ["category", "message"]},
        "verdict": _VERDICT,
    },
}

SCHEMAS = {
    "drift.json": DRIFT_REPORT,
    "report.json": ERGODICITY_REPORT,
    "fit.json": FIT_RESULT,
    "diagnostics.json": DIAGNOSTICS,
    "metadata.json": METADATA,
}
