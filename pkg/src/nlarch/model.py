"""
Model specification, one-step recursions and companion-form matrices.

The observed series follows

    y_t = pi_1 y_{t-1} + ... + pi_{p-1} y_{t-p+1} + g(u_{t-1}) + sigma_t eps_t

with ``u_t = y_t - pi_1 y_{t-1} - ... - pi_{p-1} y_{t-p+1}`` and the gated
ARCH variance

    sigma_t^2 = zeta_0 omega + alpha_1 zeta_1 e_{t-1}^2 + ... + alpha_q zeta_q e_{t-q}^2

where ``e_t = u_t - g(u_{t-1})`` and every gate is a function of ``y_{t-1}``.
States are stored newest first: ``x = (y_{t-1}, ..., y_{t-p-q})``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Sequence

import numpy as np
from scipy.special import expit

from nlarch.distributions import Innovation, SkewT, UnitNormal
from nlarch.errors import ConfigError, NumericError

__all__ = [
    "ARCoefficients",
    "MeanFunction",
    "LogisticIntercept",
    "TimeVaryingSlope",
    "BoundedShrink",
    "LinearMean",
    "ConstantOne",
    "Logistic",
    "ARCHSpec",
    "ModelSpec",
    "CompanionSystem",
    "StateVector",
    "compute_u",
    "mean_g",
    "compute_e",
    "reconstruct_xi",
    "conditional_variance",
    "build_companion",
    "state_transforms",
    "logistic",
    "empirical_model",
    "REFERENCE_ESTIMATES",
    "REFERENCE_STANDARD_ERRORS",
]


def logistic(u, gamma: float, a: float):
    """``L(u; gamma, a) = 1 / (1 + exp(-gamma (u - a)))``."""
    return expit(gamma * (np.asarray(u, dtype=float) - a))


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class ARCoefficients:
    """Coefficients ``pi_1, ..., pi_{p-1}``; empty when ``p == 1``."""

    pi: tuple[float, ...] = ()

    def __post_init__(self):
        pi = tuple(float(v) for v in self.pi)
        if not _finite(*pi):
            raise ConfigError("AR coefficients must be finite")
        object.__setattr__(self, "pi", pi)

    @property
    def p(self) -> int:
        return len(self.pi) + 1

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.pi, dtype=float)


class MeanFunction:
    """Nonlinear function ``g`` of ``u_{t-1}``; vectorized over ``u``."""

    def __call__(self, u):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class LogisticIntercept(MeanFunction):
    """
    Unit-root mean with a logistic time-varying intercept,
    ``g(u) = u + nu1 L(u; gamma, a1) + nu2 (1 - L(u; gamma, a2))``.
    """

    nu1: float
    nu2: float
    gamma: float
    a1: float
    a2: float

    def __post_init__(self):
        if not _finite(self.nu1, self.nu2, self.gamma, self.a1, self.a2):
            raise ConfigError("LogisticIntercept parameters must be finite")
        if not self.gamma > 0:
            raise ConfigError("LogisticIntercept requires gamma > 0")
        if not self.a1 <= self.a2:
            raise ConfigError("LogisticIntercept requires a1 <= a2")
        if not self.nu1 < 0 < self.nu2:
            raise ConfigError("LogisticIntercept requires nu1 < 0 < nu2")

    @classmethod
    def symmetric(cls, nu: float, gamma: float, a: float) -> "LogisticIntercept":
        """The single-gate form ``-nu L(u) + nu (1 - L(u))``."""
        return cls(-nu, nu, gamma, a, a)

    def intercept(self, u):
        """The intercept ``g(u) - u``."""
        return (self.nu1 * logistic(u, self.gamma, self.a1)
                + self.nu2 * (1.0 - logistic(u, self.gamma, self.a2)))

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return u + self.intercept(u)

    def to_dict(self) -> dict:
        return {"kind": "logistic_intercept", "nu1": self.nu1, "nu2": self.nu2,
                "gamma": self.gamma, "a1": self.a1, "a2": self.a2}


@dataclass(frozen=True)
class TimeVaryingSlope(MeanFunction):
    """
    ``g(u) = S(u) u`` with ``S1 = 1 - r0 / h(u)`` or ``S2 = exp(-r0 / h(u))``.

    ``h`` is ``1 + |u - a|^rho`` (``h_kind="abs"``) or
    ``(1 + (u - a)^2)^(rho/2)`` (``h_kind="sqrt"``).
    """

    kind: str
    r0: float
    a: float
    rho: float
    h_kind: str = "abs"

    def __post_init__(self):
        if self.kind not in ("S1", "S2"):
            raise ConfigError("TimeVaryingSlope kind must be 'S1' or 'S2'")
        if self.h_kind not in ("abs", "sqrt"):
            raise ConfigError("h_kind must be 'abs' or 'sqrt'")
        if not _finite(self.r0, self.a, self.rho):
            raise ConfigError("TimeVaryingSlope parameters must be finite")
        if not self.r0 > 0:
            raise ConfigError("TimeVaryingSlope requires r0 > 0")
        if not 0 < self.rho < 2:
            raise ConfigError("TimeVaryingSlope requires 0 < rho < 2")

    def h(self, u):
        dev = np.asarray(u, dtype=float) - self.a
        if self.h_kind == "abs":
            return 1.0 + np.abs(dev) ** self.rho
        return (1.0 + dev * dev) ** (0.5 * self.rho)

    def slope(self, u):
        ratio = self.r0 / self.h(u)
        return 1.0 - ratio if self.kind == "S1" else np.exp(-ratio)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return self.slope(u) * u

    def to_dict(self) -> dict:
        return {"kind": "time_varying_slope", "slope": self.kind, "r0": self.r0,
                "a": self.a, "rho": self.rho, "h": self.h_kind}


@dataclass(frozen=True)
class BoundedShrink(MeanFunction):
    """``g(u) = (1 - r |u|^-rho) u`` for ``|u| > threshold`` and 0 otherwise."""

    r: float
    rho: float
    threshold: float

    def __post_init__(self):
        if not _finite(self.r, self.rho, self.threshold):
            raise ConfigError("BoundedShrink parameters must be finite")
        if not self.r > 0:
            raise ConfigError("BoundedShrink requires r > 0")
        if not 0 < self.rho < 2:
            raise ConfigError("BoundedShrink requires 0 < rho < 2")
        # equality is the canonical choice threshold = r^(1/rho)
        if self.threshold < self.r ** (1.0 / self.rho) * (1 - 1e-12):
            raise ConfigError("BoundedShrink requires threshold >= r^(1/rho)")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        au = np.abs(u)
        with np.errstate(divide="ignore", over="ignore"):
            shrunk = (1.0 - self.r * np.where(au > 0, au, 1.0) ** (-self.rho)) * u
        return np.where(au > self.threshold, shrunk, 0.0)

    def to_dict(self) -> dict:
        return {"kind": "bounded_shrink", "r": self.r, "rho": self.rho,
                "threshold": self.threshold}


@dataclass(frozen=True)
class LinearMean(MeanFunction):
    """``g(u) = slope * u``. ``slope = 0`` gives ``g = 0``; ``|slope| >= 1`` is non-ergodic."""

    slope: float = 0.0

    def __call__(self, u):
        return self.slope * np.asarray(u, dtype=float)

    def to_dict(self) -> dict:
        return {"kind": "linear", "slope": self.slope}


@dataclass(frozen=True)
class ConstantOne:
    """Gate that is identically one."""

    def __call__(self, y):
        return np.ones_like(np.asarray(y, dtype=float))

    def to_dict(self) -> dict:
        return {"kind": "one"}


@dataclass(frozen=True)
class Logistic:
    """Gate ``L(y_{t-1}; gamma, a)`` with values in (0, 1)."""

    gamma: float
    a: float

    def __post_init__(self):
        if not (_finite(self.gamma, self.a) and self.gamma > 0):
            raise ConfigError("Logistic gate requires finite gamma > 0 and finite a")

    def __call__(self, y):
        return logistic(y, self.gamma, self.a)

    def to_dict(self) -> dict:
        return {"kind": "logistic", "gamma": self.gamma, "a": self.a}


Gate = ConstantOne | Logistic


@dataclass(frozen=True)
class ARCHSpec:
    """
    Gated ARCH(q) variance.

    Parameters
    ----------
    omega : float
        Intercept, strictly positive.
    alpha : sequence of float
        ``alpha_1, ..., alpha_q``; non-negative with sum below one.
    zeta : gate or sequence of q + 1 gates
        A single gate is shared by every term.
    """

    omega: float
    alpha: tuple[float, ...]
    zeta: Gate | tuple[Gate, ...] = field(default_factory=ConstantOne)

    def __post_init__(self):
        alpha = tuple(float(a) for a in np.atleast_1d(self.alpha))
        object.__setattr__(self, "alpha", alpha)
        if len(alpha) < 1:
            raise ConfigError("ARCH order q must be at least 1")
        if not (_finite(self.omega, *alpha) and self.omega > 0):
            raise ConfigError("ARCH omega must be finite and positive")
        if any(a < 0 for a in alpha):
            raise ConfigError("ARCH coefficients must be non-negative")
        if not sum(alpha) < 1:
            raise ConfigError("ARCH coefficients must sum to less than one")
        if isinstance(self.zeta, (list, tuple)):
            zeta = tuple(self.zeta)
            if len(zeta) != len(alpha) + 1:
                raise ConfigError("need one gate per term: q + 1 gates")
            object.__setattr__(self, "zeta", zeta)

    @property
    def q(self) -> int:
        return len(self.alpha)

    @property
    def gates(self) -> tuple[Gate, ...]:
        if isinstance(self.zeta, tuple):
            return self.zeta
        return (self.zeta,) * (self.q + 1)

    @property
    def shared_gate(self) -> bool:
        return not isinstance(self.zeta, tuple)

    def to_dict(self) -> dict:
        zeta = ([g.to_dict() for g in self.zeta] if isinstance(self.zeta, tuple)
                else self.zeta.to_dict())
        return {"omega": self.omega, "alpha": list(self.alpha), "zeta": zeta}


@dataclass(frozen=True)
class ModelSpec:
    """AR mean, nonlinear function ``g``, gated ARCH variance and innovation law."""

    ar: ARCoefficients
    mean: MeanFunction
    arch: ARCHSpec
    innovation: Innovation = field(default_factory=UnitNormal)

    @property
    def p(self) -> int:
        return self.ar.p

    @property
    def q(self) -> int:
        return self.arch.q

    @property
    def dim(self) -> int:
        return self.p + self.q

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "pi": list(self.ar.pi),
                "mean": self.mean.to_dict(), "arch": self.arch.to_dict(),
                "innovation": self.innovation.to_dict()}


@dataclass(frozen=True)
class StateVector:
    """
    Lagged observations ``x = (y_{t-1}, ..., y_{t-p-q})``, newest first.

    When ``e2_tail`` is given it supplies the squared errors
    ``(e_{t-1}^2, ..., e_{t-q}^2)`` directly and the older block ``x_2`` is
    not used to reconstruct them.
    """

    x: np.ndarray
    e2_tail: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        if not np.all(np.isfinite(x)):
            raise ConfigError("state entries must be finite")
        object.__setattr__(self, "x", x)
        if self.e2_tail is not None:
            tail = np.asarray(self.e2_tail, dtype=float).ravel()
            if not np.all(np.isfinite(tail)) or np.any(tail < 0):
                raise ConfigError("e2_tail must be finite and non-negative")
            object.__setattr__(self, "e2_tail", tail)

    @classmethod
    def zeros(cls, model: ModelSpec) -> "StateVector":
        return cls(np.zeros(model.dim), np.zeros(model.q))

    def to_dict(self) -> dict:
        out = {"x": self.x.tolist()}
        if self.e2_tail is not None:
            out["e2_tail"] = self.e2_tail.tolist()
        return out


def compute_u(window, ar: ARCoefficients) -> float:
    """
    ``u_t = y_t - pi_1 y_{t-1} - ... - pi_{p-1} y_{t-p+1}``.

    ``window`` holds the ``p`` most recent observations, newest first.
    """
    w = np.asarray(window, dtype=float)
    if w.shape[-1] != ar.p:
        raise ConfigError(f"window must have length p={ar.p}")
    out = w[..., 0] - w[..., 1:] @ ar.array
    return out if np.ndim(out) else float(out)


def mean_g(u, mean: MeanFunction):
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ConfigError("u must be finite")
    out = mean(u)
    return out if np.ndim(out) else float(out)


def compute_e(u_t, u_prev, mean: MeanFunction):
    """``e_t = u_t - g(u_{t-1})``."""
    out = np.asarray(u_t, dtype=float) - mean(u_prev)
    return out if np.ndim(out) else float(out)


def _check_dim(x: np.ndarray, model: ModelSpec) -> None:
    if x.shape[-1] != model.dim:
        raise ConfigError(f"state must have length p+q={model.dim}")


def reconstruct_xi(state: StateVector, model: ModelSpec) -> np.ndarray:
    """
    Squared errors ``(e_{t-1}^2, ..., e_{t-q}^2)`` implied by a state.

    ``e_{t-i}`` needs ``u_{t-i}`` and ``u_{t-i-1}``, and the oldest of these
    reaches back to ``y_{t-p-q}``, so all ``q`` lags are available from the
    ``p + q`` stored observations.
    """
    if state.e2_tail is not None:
        if state.e2_tail.shape[0] != model.q:
            raise ConfigError(f"e2_tail must have length q={model.q}")
        return state.e2_tail.copy()
    x = state.x
    _check_dim(x, model)
    p, q = model.p, model.q
    windows = np.lib.stride_tricks.sliding_window_view(x, p)  # row j starts at y_{t-1-j}
    u = compute_u(windows, model.ar)
    e = u[:q] - model.mean(u[1:q + 1])
    return e * e


def _gate_values(arch: ARCHSpec, y_prev):
    return [g(y_prev) for g in arch.gates]


def conditional_variance(state: StateVector, model: ModelSpec) -> float:
    """``sigma_t^2`` given the lagged state."""
    _check_dim(state.x, model)
    xi = reconstruct_xi(state, model)
    arch = model.arch
    z = _gate_values(arch, state.x[0])
    s2 = float(z[0]) * arch.omega + sum(
        float(z[i + 1]) * a * xi[i] for i, a in enumerate(arch.alpha))
    if not (s2 > 0 and math.isfinite(s2)):
        raise NumericError(f"conditional variance is not positive and finite: {s2}")
    return s2


@dataclass(frozen=True)
class CompanionSystem:
    """
    Companion-form matrices.

    ``Phi`` is the p x p companion of the AR part, ``A`` the unit upper
    triangular transform with ``A y_{1,t} = (u_t, y_{t-1}, ...)``,
    ``Pi = A Phi A^-1`` and ``Pi1`` its lower-right (p-1) x (p-1) block.
    ``Lambda_bar`` is the ARCH companion with first row ``alpha * mu_bar``.
    """

    Phi: np.ndarray
    A: np.ndarray
    Pi: np.ndarray
    Pi1: np.ndarray
    Lambda: np.ndarray
    Lambda_bar: np.ndarray
    mu_bar: float

    @property
    def p(self) -> int:
        return self.Phi.shape[0]

    @property
    def q(self) -> int:
        return self.Lambda.shape[0]

    @property
    def iota_p(self) -> np.ndarray:
        return np.eye(self.p)[0]

    @property
    def iota_pq(self) -> np.ndarray:
        return np.eye(self.p + self.q)[0]


def _arch_companion(first_row: Sequence[float]) -> np.ndarray:
    q = len(first_row)
    out = np.zeros((q, q))
    out[0] = first_row
    out[1:, :-1] = np.eye(q - 1)
    return out


def build_companion(model: ModelSpec, bs0_moment: float = 1.0) -> CompanionSystem:
    """
    Companion matrices for ``model``.

    Parameters
    ----------
    bs0_moment : float
        ``mu_bar_{2 b s0} = (E|eps|^{2 b s0})^{1/(b s0)}``; one for ``b s0 = 1``.
    """
    if not (math.isfinite(bs0_moment) and bs0_moment > 0):
        raise ConfigError("bs0_moment must be finite and positive")
    p = model.p
    pi = model.ar.array
    Phi = np.zeros((p, p))
    Phi[0, : p - 1] = pi
    Phi[1:, :-1] = np.eye(p - 1)
    A = np.eye(p)
    A[0, 1:] = -pi
    Pi = np.zeros((p, p))
    if p > 1:
        Pi[1, 0] = 1.0
        Pi[1, 1:] = pi
        Pi[2:, 1:-1] = np.eye(p - 2)
    alpha = np.asarray(model.arch.alpha)
    return CompanionSystem(
        Phi=Phi, A=A, Pi=Pi, Pi1=Pi[1:, 1:].copy(),
        Lambda=_arch_companion(alpha),
        Lambda_bar=_arch_companion(alpha * bs0_moment),
        mu_bar=float(bs0_moment),
    )


def state_transforms(state: StateVector, model: ModelSpec):
    """
    ``(z1, z2, xi)`` for a state: ``z = A x_1`` and the squared error lags.

    Returns
    -------
    z1 : float
    z2 : ndarray, shape (p-1,)
    xi : ndarray, shape (q,)
    """
    x = state.x
    _check_dim(x, model)
    x1 = x[: model.p]
    return compute_u(x1, model.ar), x1[1:].copy(), reconstruct_xi(state, model)


# Reference estimates and standard errors for the daily CBOE
# energy sector volatility index (FRED series VXXLECLS).
REFERENCE_ESTIMATES = {
    "nu": 0.187, "gamma": 0.171, "a": 25.366, "omega": 3.259,
    "alpha_1": 0.406, "alpha_2": 0.310, "alpha_3": 0.149,
    "c": 3.551, "d": 2.138,
}
REFERENCE_STANDARD_ERRORS = {
    "nu": 0.040, "gamma": 0.018, "a": 1.434, "omega": 0.493,
    "alpha_1": 0.081, "alpha_2": 0.066, "alpha_3": 0.052,
    "c": 0.422, "d": 0.197,
}


def empirical_model(nu: float = 0.187, gamma: float = 0.171, a: float = 25.366,
                    omega: float = 3.259, alpha=(0.406, 0.310, 0.149),
                    c: float | None = 3.551, d: float | None = 2.138) -> ModelSpec:
    """
    Unit-root mean with logistic intercept and an ARCH(3) variance gated by
    the same logistic function of ``y_{t-1}``; defaults are the fitted
    estimates. ``c = d = None`` selects Gaussian innovations.
    """
    innovation = UnitNormal() if c is None else SkewT(c, d)
    return ModelSpec(
        ar=ARCoefficients(()),
        mean=LogisticIntercept.symmetric(nu, gamma, a),
        arch=ARCHSpec(omega, tuple(alpha), Logistic(gamma, a)),
        innovation=innovation,
    )
