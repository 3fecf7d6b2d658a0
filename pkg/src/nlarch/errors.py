"""Exception hierarchy.

Every error carries a ``category`` used by the command line front end to map
failures onto exit codes.
"""

__all__ = [
    "NLArchError",
    "ConfigError",
    "DataError",
    "InsufficientDataError",
    "NumericError",
    "DivergentMomentError",
    "SimulationExplosionError",
    "ConstructionError",
    "NonConvergenceError",
]


class NLArchError(Exception):
    category = "numeric"


class ConfigError(NLArchError, ValueError):
    """Invalid model, parameter or run configuration."""

    category = "config"


class DataError(NLArchError, ValueError):
    """Unusable input data."""

    category = "data"

    def __init__(self, message: str, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InsufficientDataError(DataError):
    pass


class NumericError(NLArchError, ArithmeticError):
    category = "numeric"


class DivergentMomentError(NumericError):
    """Requested moment of the innovation law is infinite."""


class ConstructionError(NumericError):
    """A norm or matrix could not be built (e.g. spectral radius >= 1)."""


class SimulationExplosionError(NumericError):
    """Path left the representable range.

    Attributes
    ----------
    index : int
        First offending time index, counted from the start of the burn-in.
    replication : int
        Replication in which the explosion occurred.
    """

    def __init__(self, index: int, replication: int = 0) -> None:
        super().__init__(
            f"simulated path exploded at step {index} (replication {replication})"
        )
        self.index = index
        self.replication = replication


class NonConvergenceError(NLArchError):
    category = "convergence"
