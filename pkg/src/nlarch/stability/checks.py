"""Executable checks of the model assumptions."""

from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Sequence

import numpy as np

from nlarch.distributions import Innovation
from nlarch.errors import ConfigError, DivergentMomentError
from nlarch.model import (
    ARCHSpec,
    ARCoefficients,
    BoundedShrink,
    ConstantOne,
    LinearMean,
    Logistic,
    LogisticIntercept,
    MeanFunction,
    TimeVaryingSlope,
)

__all__ = [
    "check_root_condition",
    "EnvelopeReport",
    "check_mean_envelope",
    "envelope_constants",
    "moment_mu_bar",
    "check_lemma2",
    "check_arch_assumption",
]


def check_root_condition(ar: ARCoefficients) -> tuple[bool, float]:
    """
    Roots of ``1 - pi_1 z - ... - pi_{p-1} z^{p-1}`` outside the unit circle.

    Returns
    -------
    passed : bool
    min_root_modulus : float
        ``inf`` when the polynomial is constant (``p == 1`` or all ``pi = 0``).
    """
    # the roots are the reciprocals of the companion eigenvalues; this avoids
    # dividing by a tiny leading coefficient
    pi = ar.array
    n = pi.shape[0]
    if n == 0:
        return True, math.inf
    C = np.zeros((n, n))
    C[0] = pi
    C[1:, :-1] = np.eye(n - 1)
    lam = float(np.max(np.abs(np.linalg.eigvals(C))))
    mod = math.inf if lam == 0.0 else 1.0 / lam
    return bool(mod > 1.0), mod


@dataclass(frozen=True)
class EnvelopeReport:
    """Outcome of the mean-function envelope check.

    ``tail_slack`` is ``(1 - r|u|^-rho)|u| - |g(u)|`` on ``tail_grid``;
    ``core_slack`` is ``K0 - |g(u)|`` on ``core_grid``.
    """

    passed: bool
    tail_passed: bool
    core_passed: bool
    unbounded: bool
    tail_grid: np.ndarray
    tail_slack: np.ndarray
    core_grid: np.ndarray
    core_slack: np.ndarray
    r: float
    rho: float
    M0: float
    K0: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed, "tail_passed": self.tail_passed,
            "core_passed": self.core_passed, "unbounded": self.unbounded,
            "min_tail_slack": float(self.tail_slack.min()),
            "min_core_slack": float(self.core_slack.min()),
            "r": self.r, "rho": self.rho, "M0": self.M0, "K0": self.K0,
        }


def check_mean_envelope(mean: MeanFunction, r: float, rho: float, M0: float,
                        K0: float, grid: Sequence[float] | None = None,
                        u_max: float = 1e8, n_tail: int = 400,
                        n_core: int = 2001) -> EnvelopeReport:
    """
    Check ``|g(u)| <= (1 - r|u|^-rho)|u|`` for ``|u| >= M0`` and
    ``|g(u)| <= K0`` for ``|u| <= M0``.

    Parameters
    ----------
    grid : sequence of float, optional
        Positive tail magnitudes to use instead of the default log-spaced
        grid on ``[M0, u_max]``. Both signs are always checked.
    """
    if not (r > 0 and 0 < rho < 2 and M0 > 0):
        raise ConfigError("need r > 0, 0 < rho < 2 and M0 > 0")
    if not 0 < r * M0 ** (-rho) < 1:
        raise ConfigError("need r * M0^-rho in (0, 1)")
    mags = (np.geomspace(M0, u_max, n_tail) if grid is None
            else np.asarray(grid, dtype=float))
    mags = mags[mags >= M0]
    tail = np.concatenate((-mags[::-1], mags))
    au = np.abs(tail)
    env = (1.0 - r * au ** (-rho)) * au
    g_tail = np.abs(mean(tail))
    tail_slack = env - g_tail
    core = np.linspace(-M0, M0, n_core)
    core_slack = K0 - np.abs(mean(core))
    # equality holds exactly for the canonical bounded-shrink function;
    # allow a few ulps of relative rounding
    tail_ok = bool(np.all(tail_slack >= -1e-12 * au))
    core_ok = bool(np.all(core_slack >= -1e-12 * max(K0, 1.0)))
    top = au.max()
    ends = np.abs(mean(np.array([-top, top])))
    unbounded = bool(np.all(ends > 1e-2 * top))
    return EnvelopeReport(
        passed=tail_ok and core_ok and unbounded,
        tail_passed=tail_ok, core_passed=core_ok, unbounded=unbounded,
        tail_grid=tail, tail_slack=tail_slack, core_grid=core,
        core_slack=core_slack, r=float(r), rho=float(rho), M0=float(M0),
        K0=float(K0),
    )


def envelope_constants(mean: MeanFunction) -> tuple[float, float, float, float]:
    """
    Constants ``(r, rho, M0, K0)`` under which the envelope is expected to
    hold for the built-in mean functions.

    ``M0`` is found by a geometric scan; ``K0`` is the sup of ``|g|`` on
    ``[-M0, M0]`` with a small margin.
    """
    if isinstance(mean, BoundedShrink):
        r, rho = mean.r, mean.rho
        M0 = 2.0 * max(mean.threshold, r ** (1.0 / rho))
    elif isinstance(mean, LogisticIntercept):
        r, rho = 0.5 * min(-mean.nu1, mean.nu2), 1.0
        M0 = _scan_M0(mean, r, rho, start=max(abs(mean.a1), abs(mean.a2), r) + 1.0)
    elif isinstance(mean, TimeVaryingSlope):
        r, rho = 0.5 * mean.r0, mean.rho
        M0 = _scan_M0(mean, r, rho, start=abs(mean.a) + r ** (1.0 / rho) + 1.0)
    elif isinstance(mean, LinearMean) and abs(mean.slope) < 1:
        r, rho = 0.5 * (1.0 - abs(mean.slope)), 1.0
        M0 = 1.0
    else:
        raise ConfigError(f"no envelope constants for {type(mean).__name__}")
    core = np.linspace(-M0, M0, 2001)
    K0 = float(np.max(np.abs(mean(core)))) * (1 + 1e-9) + 1e-12
    return float(r), float(rho), float(M0), K0


def _scan_M0(mean: MeanFunction, r: float, rho: float, start: float) -> float:
    M = max(start, 1.1 * r ** (1.0 / rho))
    for _ in range(400):
        mags = np.geomspace(M, 1e8, 400)
        u = np.concatenate((-mags, mags))
        au = np.abs(u)
        if np.all(np.abs(mean(u)) <= (1.0 - r * au ** (-rho)) * au):
            return float(M)
        M *= 1.1
    raise ConfigError("envelope does not hold on any tail [M0, 1e8]")


def _tail_slope(innovation: Innovation, sign: float) -> float:
    x1, x2 = sign * 1e3, sign * 1e5
    l1 = float(innovation.log_density(x1))
    l2 = float(innovation.log_density(x2))
    if not math.isfinite(l2):
        return -math.inf
    return (l2 - l1) / math.log(1e2)


def moment_mu_bar(innovation: Innovation, order: float) -> float:
    """
    ``(E|eps|^order)^(2/order)``, i.e. ``mu_bar_{2 b s0}`` for ``order = 2 b s0``.

    Raises
    ------
    DivergentMomentError
        When the moment is infinite: either the order reaches the known tail
        index of the law, or the log-density decays too slowly between
        ``|x| = 1e3`` and ``1e5`` for ``|x|^order f(x)`` to be integrable.
    """
    if order < 2:
        raise ConfigError("order must be at least 2")
    for sign in (-1.0, 1.0):
        if order + _tail_slope(innovation, sign) >= -1.0:
            raise DivergentMomentError(
                f"tail of {innovation!r} too heavy for a moment of order {order}")
    if order == 2:
        return 1.0  # innovations are standardized to unit variance
    m = innovation.abs_moment(order)
    return m ** (2.0 / order)


def check_lemma2(alpha: Sequence[float], mu_bar: float) -> tuple[bool, float]:
    """``sum(alpha) * mu_bar < 1``; returns the pass flag and ``1 - sum(alpha) mu_bar``."""
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0):
        raise ConfigError("alpha entries must be non-negative")
    slack = 1.0 - float(alpha.sum()) * mu_bar
    return slack > 0, slack


def check_arch_assumption(arch: ARCHSpec) -> tuple[bool, str]:
    """Positivity and summability of the ARCH parameters, gates in (0, 1]."""
    if not arch.omega > 0:
        return False, "omega must be positive"
    if any(a < 0 for a in arch.alpha) or not sum(arch.alpha) < 1:
        return False, "alpha must be non-negative with sum below one"
    if not all(isinstance(g, (ConstantOne, Logistic)) for g in arch.gates):
        return False, "unsupported gate"
    return True, "ok"
