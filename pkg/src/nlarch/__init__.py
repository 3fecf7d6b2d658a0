"""
Nonlinear autoregressive models with gated ARCH errors.

Simulation, conditional maximum likelihood, residual diagnostics and
Monte Carlo verification of a Foster-Lyapunov drift condition.
"""

__version__ = "0.1.0"

from nlarch.errors import (  # noqa: E402
    ConfigError,
    DataError,
    NLArchError,
    NonConvergenceError,
    NumericError,
)
from nlarch.distributions import SkewT, StudentT, UnitNormal  # noqa: E402
from nlarch.model import (  # noqa: E402
    ARCHSpec,
    ARCoefficients,
    BoundedShrink,
    ConstantOne,
    LinearMean,
    Logistic,
    LogisticIntercept,
    ModelSpec,
    StateVector,
    TimeVaryingSlope,
    build_companion,
    empirical_model,
)
from nlarch.simulation import acf, simulate, simulate_many  # noqa: E402
from nlarch.estimation import FitResult, FitSpec, fit, residual_diagnostics  # noqa: E402
from nlarch.stability import DriftParams, ergodicity_report, verify_drift  # noqa: E402

__all__ = [
    "__version__",
    "NLArchError", "ConfigError", "DataError", "NumericError", "NonConvergenceError",
    "UnitNormal", "StudentT", "SkewT",
    "ARCoefficients", "LogisticIntercept", "TimeVaryingSlope", "BoundedShrink",
    "LinearMean", "ConstantOne", "Logistic", "ARCHSpec", "ModelSpec", "StateVector",
    "build_companion", "empirical_model",
    "simulate", "simulate_many", "acf",
    "FitSpec", "FitResult", "fit", "residual_diagnostics",
    "DriftParams", "verify_drift", "ergodicity_report",
]
