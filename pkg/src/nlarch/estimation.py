"""
Conditional maximum likelihood for the logistic-intercept AR-ARCH model.

Because ``e_t = u_t - g(u_{t-1})`` is a function of the data alone, the
whole variance path follows from one vectorized pass: there is no
recursion in ``sigma_t``. The first ``p + q`` observations are held fixed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
import json
import math
from pathlib import Path
import time
from typing import Mapping, Sequence

import numpy as np
from scipy import optimize

from nlarch.distributions import (
    Innovation,
    SkewT,
    StudentT,
    UnitNormal,
    _skewt_moments_jacobi,
    skewt_log_density_raw,
)
from nlarch.errors import ConfigError, DataError, InsufficientDataError
from nlarch.model import (
    ARCHSpec,
    ARCoefficients,
    ConstantOne,
    Logistic,
    LogisticIntercept,
    ModelSpec,
    compute_u,
    logistic,
)
from nlarch.simulation import acf

__all__ = [
    "FitSpec",
    "FitResult",
    "Diagnostics",
    "LOGLIK_SENTINEL",
    "param_names",
    "default_init",
    "to_unconstrained",
    "from_unconstrained",
    "conditional_loglik",
    "loglik_contributions",
    "model_loglik",
    "loglik_gradient",
    "numerical_hessian",
    "fit",
    "model_from_params",
    "residual_diagnostics",
]

LOGLIK_SENTINEL = -1e300
_GRAD_ACCEPT = 1e-2   # max |d loglik / d theta| accepted as a stationary point
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class FitSpec:
    """
    Which model is fitted and how.

    Parameters
    ----------
    p, q : int
        AR order of ``y`` (``p - 1`` coefficients) and ARCH order.
    gate : {"shared", "separate", "none"}
        Variance gate: the mean's logistic function, its own logistic
        function (``gamma_v``, ``a_v``), or identically one.
    innovation : {"skewt", "normal", "studentt"}
    fixed : mapping
        Parameters held at the given values.
    bounds : mapping
        Extra box constraints ``name -> (low, high)``; either side may be None.
    init : mapping, optional
        Starting values; missing entries come from :func:`default_init`.
    nm_maxiter : int
        Nelder-Mead iterations before the quasi-Newton stage.
    gtol : float
        Gradient tolerance of the quasi-Newton stage.
    max_iter : int
        Iteration cap applied to both stages.
    """

    p: int = 1
    q: int = 3
    gate: str = "shared"
    innovation: str = "skewt"
    fixed: Mapping[str, float] = field(default_factory=dict)
    bounds: Mapping[str, tuple] = field(default_factory=dict)
    init: Mapping[str, float] | None = None
    nm_maxiter: int = 2000
    gtol: float = 1e-4
    max_iter: int = 2000

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ConfigError("need p >= 1 and q >= 1")
        if self.gate not in ("shared", "separate", "none"):
            raise ConfigError("gate must be 'shared', 'separate' or 'none'")
        if self.innovation not in ("skewt", "normal", "studentt"):
            raise ConfigError("innovation must be 'skewt', 'normal' or 'studentt'")
        names = set(param_names(self))
        for key in list(self.fixed) + list(self.bounds) + list(self.init or {}):
            if key not in names:
                raise ConfigError(f"unknown parameter {key!r}")
        for key, (lo, hi) in self.bounds.items():
            if lo is not None and hi is not None and not lo < hi:
                raise ConfigError(f"empty bounds for {key!r}")
        if self.max_iter < 1 or self.nm_maxiter < 0:
            raise ConfigError("iteration limits must be positive")

    @property
    def free(self) -> list[str]:
        return [n for n in param_names(self) if n not in self.fixed]

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "gate": self.gate, "innovation": self.innovation,
                "fixed": dict(self.fixed),
                "bounds": {k: list(v) for k, v in self.bounds.items()},
                "init": None if self.init is None else dict(self.init),
                "nm_maxiter": self.nm_maxiter, "gtol": self.gtol, "max_iter": self.max_iter}


def param_names(spec: FitSpec) -> list[str]:
    names = [f"pi_{i}" for i in range(1, spec.p)] + ["nu", "gamma", "a"]
    if spec.gate == "separate":
        names += ["gamma_v", "a_v"]
    names += ["omega"] + [f"alpha_{i}" for i in range(1, spec.q + 1)]
    if spec.innovation == "skewt":
        names += ["c", "d"]
    elif spec.innovation == "studentt":
        names += ["df"]
    return names


# log-transformed parameters and their lower limits
_LOG_SHIFT = {"nu": 0.0, "gamma": 0.0, "gamma_v": 0.0, "omega": 0.0,
              "c": 1.0, "d": 1.0, "df": 2.0}


def _alpha_names(spec: FitSpec) -> list[str]:
    return [f"alpha_{i}" for i in range(1, spec.q + 1)]


def _softmax_alpha(spec: FitSpec) -> bool:
    return not any(a in spec.fixed for a in _alpha_names(spec))


def to_unconstrained(params: Mapping[str, float], spec: FitSpec) -> np.ndarray:
    """Free parameters mapped to ``R^k``; alphas through a softmax with slack."""
    theta = []
    alphas = np.array([params[a] for a in _alpha_names(spec)])
    slack = 1.0 - alphas.sum()
    for name in spec.free:
        v = float(params[name])
        if name in _LOG_SHIFT:
            theta.append(math.log(v - _LOG_SHIFT[name]))
        elif name.startswith("alpha_"):
            theta.append(math.log(v / slack) if _softmax_alpha(spec) else math.log(v))
        else:
            theta.append(v)
    return np.array(theta)


def from_unconstrained(theta: Sequence[float], spec: FitSpec) -> dict:
    """Inverse of :func:`to_unconstrained`; fixed values are filled in."""
    out = dict(spec.fixed)
    free = spec.free
    soft = _softmax_alpha(spec)
    if soft:
        idx = [free.index(a) for a in _alpha_names(spec)]
        z = np.asarray([theta[i] for i in idx], dtype=float)
        top = max(0.0, float(z.max()))
        ez = np.exp(z - top)
        denom = math.exp(-top) + ez.sum()
        for a, v in zip(_alpha_names(spec), ez / denom):
            out[a] = float(v)
    for name, v in zip(free, theta):
        v = float(v)
        if name in _LOG_SHIFT:
            out[name] = _LOG_SHIFT[name] + math.exp(min(v, 700.0))
        elif name.startswith("alpha_"):
            if not soft:
                out[name] = math.exp(min(v, 700.0))
        else:
            out[name] = v
    return out


def _as_params(params, spec: FitSpec) -> dict:
    if isinstance(params, Mapping):
        out = dict(spec.fixed)
        out.update({k: float(v) for k, v in params.items()})
        missing = [n for n in param_names(spec) if n not in out]
        if missing:
            raise ConfigError(f"missing parameters: {missing}")
        return out
    arr = np.asarray(params, dtype=float).ravel()
    free = spec.free
    if arr.shape[0] == len(free):
        out = dict(spec.fixed)
        out.update(zip(free, arr.tolist()))
        return out
    names = param_names(spec)
    if arr.shape[0] == len(names):
        return dict(zip(names, arr.tolist()))
    raise ConfigError("parameter vector has the wrong length")


def _feasible(par: dict, spec: FitSpec) -> bool:
    if not all(math.isfinite(v) for v in par.values()):
        return False
    if not (par["nu"] > 0 and par["gamma"] > 0 and par["omega"] > 0):
        return False
    if spec.gate == "separate" and not par["gamma_v"] > 0:
        return False
    alphas = [par[a] for a in _alpha_names(spec)]
    if min(alphas) < 0 or not sum(alphas) < 1:
        return False
    if spec.innovation == "skewt" and not (par["c"] > 1 and par["d"] > 1):
        return False
    if spec.innovation == "studentt" and not par["df"] > 2:
        return False
    for name, (lo, hi) in spec.bounds.items():
        v = par[name]
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            return False
    return True


def _check_data(data) -> np.ndarray:
    y = np.asarray(data, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise DataError("data contain non-finite values")
    return y


def _paths(par: dict, y: np.ndarray, spec: FitSpec):
    """Residuals ``e_t`` and variances ``sigma_t^2`` for ``t = p+q, ..., n-1``."""
    p, q = spec.p, spec.q
    n = y.shape[0]
    pi = np.array([par[f"pi_{i}"] for i in range(1, p)])
    # u_t for t = p-1 .. n-1
    u = y[p - 1:].copy()
    for i in range(1, p):
        u -= pi[i - 1] * y[p - 1 - i:n - i]
    nu, gamma, a = par["nu"], par["gamma"], par["a"]
    L_prev = logistic(u[:-1], gamma, a)
    e = u[1:] - (u[:-1] + nu * (1.0 - 2.0 * L_prev))   # e_t for t = p .. n-1
    e2 = e * e
    alpha = np.array([par[x] for x in _alpha_names(spec)])
    m = e.shape[0] - q                                  # t = p+q .. n-1
    arch = np.full(m, par["omega"])
    for i in range(1, q + 1):
        arch += alpha[i - 1] * e2[q - i:q - i + m]
    y_prev = y[p + q - 1:n - 1]
    if spec.gate == "shared":
        arch *= logistic(y_prev, gamma, a)
    elif spec.gate == "separate":
        arch *= logistic(y_prev, par["gamma_v"], par["a_v"])
    return e[q:], arch


def _log_f(eps: np.ndarray, par: dict, spec: FitSpec) -> np.ndarray:
    if spec.innovation == "normal":
        return -_HALF_LOG_2PI - 0.5 * eps * eps
    if spec.innovation == "studentt":
        return StudentT(par["df"]).log_density(eps)
    c, d = par["c"], par["d"]
    m, s = _skewt_moments_jacobi(c, d)
    return math.log(s) + skewt_log_density_raw(s * eps + m, c, d)


def loglik_contributions(params, data, spec: FitSpec) -> np.ndarray:
    """Per-observation terms ``log f(eps_t) - log sigma_t`` for ``t > p + q``."""
    par = _as_params(params, spec)
    y = _check_data(data)
    if y.shape[0] <= spec.p + spec.q:
        raise InsufficientDataError("need more than p + q observations")
    e, s2 = _paths(par, y, spec)
    with np.errstate(divide="ignore", invalid="ignore"):
        sig = np.sqrt(s2)
        return _log_f(e / sig, par, spec) - np.log(sig)


def conditional_loglik(params, data, spec: FitSpec) -> float:
    """
    Log-likelihood conditional on the first ``p + q`` observations.

    Parameters
    ----------
    params : mapping or array
        Natural parameters: a dict by name, a vector over ``spec.free`` or a
        vector over all of :func:`param_names`.

    Returns
    -------
    float
        ``LOGLIK_SENTINEL`` when a constraint is violated or the value is
        not finite.

    Raises
    ------
    DataError
        For non-finite data.
    """
    par = _as_params(params, spec)
    y = _check_data(data)
    if y.shape[0] <= spec.p + spec.q:
        raise InsufficientDataError("need more than p + q observations")
    if not _feasible(par, spec):
        return LOGLIK_SENTINEL
    total = float(np.sum(loglik_contributions(par, y, spec)))
    return total if math.isfinite(total) else LOGLIK_SENTINEL


def model_loglik(model: ModelSpec, data) -> float:
    """
    Conditional log-likelihood of any :class:`ModelSpec`, conditioning on
    the first ``p + q`` observations.

    Evaluates the model's own mean function, gates and innovation density,
    so it also covers specifications outside the fitted template.
    """
    y = _check_data(data)
    p, q = model.p, model.q
    n = y.shape[0]
    if n <= p + q:
        raise InsufficientDataError("need more than p + q observations")
    windows = np.lib.stride_tricks.sliding_window_view(y, p)[:, ::-1]
    u = compute_u(windows, model.ar)                  # u_t for t = p-1 .. n-1
    e = u[1:] - model.mean(u[:-1])                    # e_t for t = p .. n-1
    e2 = e * e
    m = e.shape[0] - q
    y_prev = y[p + q - 1:n - 1]
    gates = model.arch.gates
    s2 = gates[0](y_prev) * model.arch.omega
    for i, a in enumerate(model.arch.alpha, start=1):
        s2 = s2 + gates[i](y_prev) * a * e2[q - i:q - i + m]
    sig = np.sqrt(s2)
    with np.errstate(divide="ignore", invalid="ignore"):
        total = float(np.sum(model.innovation.log_density(e[q:] / sig) - np.log(sig)))
    return total if math.isfinite(total) else LOGLIK_SENTINEL


def _steps(x: np.ndarray, rel: float) -> np.ndarray:
    return rel * np.maximum(np.abs(x), 1e-2)


def loglik_gradient(params, data, spec: FitSpec, rel_step: float = 1e-4,
                    richardson: bool = True) -> np.ndarray:
    """
    Central-difference gradient over ``spec.free`` in natural parameters.

    With ``richardson`` the estimates at ``h`` and ``h/2`` are combined as
    ``(4 D(h/2) - D(h)) / 3``, cancelling the ``h^2`` error term.
    """
    par = _as_params(params, spec)
    free = spec.free
    x = np.array([par[n] for n in free])
    h = _steps(x, rel_step)

    def central(hv):
        g = np.empty_like(x)
        for i in range(x.shape[0]):
            xp, xm = x.copy(), x.copy()
            xp[i] += hv[i]
            xm[i] -= hv[i]
            g[i] = (conditional_loglik(xp, data, spec)
                    - conditional_loglik(xm, data, spec)) / (2 * hv[i])
        return g

    d1 = central(h)
    if not richardson:
        return d1
    return (4.0 * central(h / 2) - d1) / 3.0


def numerical_hessian(fun, x: np.ndarray, step=1e-3) -> np.ndarray:
    """
    Central-difference Hessian of a scalar function.

    ``step`` is a scalar or per-coordinate array of absolute steps; the
    default suits the unconstrained coordinates, which are of order one.
    """
    x = np.asarray(x, dtype=float)
    k = x.shape[0]
    h = np.broadcast_to(np.asarray(step, dtype=float), (k,)) * np.maximum(1.0, np.abs(x))
    f0 = fun(x)
    H = np.empty((k, k))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        H[i, i] = (fun(x + ei) - 2 * f0 + fun(x - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (fun(x + ei + ej) - fun(x + ei - ej)
                                 - fun(x - ei + ej) + fun(x - ei - ej)) / (4 * h[i] * h[j])
    return H


def _transform_jacobian(theta: np.ndarray, spec: FitSpec, step: float = 1e-6) -> np.ndarray:
    """``d natural / d theta`` over the free parameters, by central differences."""
    free = spec.free
    k = theta.shape[0]
    J = np.empty((k, k))
    for j in range(k):
        tp, tm = theta.copy(), theta.copy()
        tp[j] += step
        tm[j] -= step
        up, dn = from_unconstrained(tp, spec), from_unconstrained(tm, spec)
        J[:, j] = [(up[n] - dn[n]) / (2 * step) for n in free]
    return J


def default_init(data, spec: FitSpec) -> dict:
    """Data-driven starting values."""
    y = _check_data(data)
    dy = np.diff(y)
    sd_y = float(np.std(y)) or 1.0
    v = float(np.var(dy)) or 1.0
    par = {f"pi_{i}": 0.0 for i in range(1, spec.p)}
    par.update(nu=0.05 * math.sqrt(v), gamma=2.0 / sd_y, a=float(np.median(y)))
    if spec.gate == "separate":
        par.update(gamma_v=2.0 / sd_y, a_v=float(np.median(y)))
    scale = 0.5 if spec.gate == "none" else 1.0
    par["omega"] = scale * 0.5 * v
    for i, name in enumerate(_alpha_names(spec)):
        par[name] = 0.5 / spec.q
    if spec.innovation == "skewt":
        par.update(c=4.0, d=4.0)
    elif spec.innovation == "studentt":
        par["df"] = 8.0
    par.update(spec.fixed)
    if spec.init:
        par.update(spec.init)
    return par


def model_from_params(params, spec: FitSpec) -> ModelSpec:
    """The :class:`ModelSpec` implied by a parameter set."""
    par = _as_params(params, spec)
    mean = LogisticIntercept.symmetric(par["nu"], par["gamma"], par["a"])
    if spec.gate == "shared":
        zeta = Logistic(par["gamma"], par["a"])
    elif spec.gate == "separate":
        zeta = Logistic(par["gamma_v"], par["a_v"])
    else:
        zeta = ConstantOne()
    alpha = tuple(par[a] for a in _alpha_names(spec))
    if spec.innovation == "skewt":
        innovation: Innovation = SkewT(par["c"], par["d"])
    elif spec.innovation == "studentt":
        innovation = StudentT(par["df"])
    else:
        innovation = UnitNormal()
    return ModelSpec(ARCoefficients(tuple(par[f"pi_{i}"] for i in range(1, spec.p))),
                     mean, ARCHSpec(par["omega"], alpha, zeta), innovation)


@dataclass(frozen=True)
class FitResult:
    """
    Estimates, standard errors and fitted series.

    ``standard_errors`` is NaN for fixed parameters and for every parameter
    when the Hessian is not positive definite (``hessian_ok`` is False).
    """

    spec: FitSpec
    estimates: dict
    standard_errors: dict
    loglik: float
    n_obs: int
    residuals: np.ndarray
    sigma: np.ndarray
    converged: bool
    convergence: dict
    hessian_ok: bool
    covariance: np.ndarray
    elapsed: float

    @property
    def model(self) -> ModelSpec:
        return model_from_params(self.estimates, self.spec)

    def to_dict(self) -> dict:
        def clean(v):
            v = float(v)
            return v if math.isfinite(v) else None

        return {
            "estimates": {k: clean(v) for k, v in self.estimates.items()},
            "standard_errors": {k: clean(v) for k, v in self.standard_errors.items()},
            "loglik": clean(self.loglik),
            "n_obs": self.n_obs,
            "converged": self.converged,
            "convergence": self.convergence,
            "hessian_ok": self.hessian_ok,
            "elapsed_seconds": self.elapsed,
            "settings": self.spec.to_dict(),
        }

    def to_json(self, path=None, indent: int = 2) -> str:
        text = json.dumps(self.to_dict(), indent=indent)
        if path is not None:
            Path(path).write_text(text)
        return text

    def write_series(self, path) -> None:
        """CSV of ``t, residual, sigma`` (t counts from the first conditioned-on observation)."""
        k = self.spec.p + self.spec.q
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "residual", "sigma"])
            for i, (r, s) in enumerate(zip(self.residuals, self.sigma)):
                w.writerow([k + i + 1, repr(float(r)), repr(float(s))])


_BOUNDARY_SLACK = 0.02
_LOG_FLOOR = -10.0    # log(value - lower limit) below this counts as collapsed


def _pull_inside(theta: np.ndarray, spec: FitSpec, init: Mapping[str, float]):
    """
    Restart point away from the transform boundaries, or None when the fit
    is not near one.

    ``sum(alpha)`` within ``_BOUNDARY_SLACK`` of one is shrunk to 0.9, and a
    log-transformed parameter collapsed onto its lower limit is reset to its
    starting value. In both regions the transform flattens the likelihood
    and the optimizers can stop at a point that only looks stationary.
    """
    par = from_unconstrained(theta, spec)
    moved = False
    for i, name in enumerate(spec.free):
        if name in _LOG_SHIFT and theta[i] < _LOG_FLOOR:
            par[name] = init[name]
            moved = True
    names = _alpha_names(spec)
    total = sum(par[a] for a in names)
    if _softmax_alpha(spec) and 0 < total and 1.0 - total < _BOUNDARY_SLACK:
        for a in names:
            par[a] *= 0.9 / total
        moved = True
    return to_unconstrained(par, spec) if moved else None


def fit(data, spec: FitSpec | None = None) -> FitResult:
    """
    Two-stage conditional maximum likelihood.

    Nelder-Mead on the unconstrained parameters, then BFGS with
    central-difference gradients, restarted once when the final gradient
    is not small. Standard errors come from the inverse numerical Hessian in
    the unconstrained coordinates, mapped to natural parameters by the
    delta method.

    When the optimizer stops without meeting its tolerance the result is
    still returned, with ``converged=False`` and the best point found.
    """
    spec = spec or FitSpec()
    y = _check_data(data)
    if y.shape[0] <= spec.p + spec.q + 1:
        raise InsufficientDataError(f"need more than p + q + 1 = {spec.p + spec.q + 1} observations")
    t0 = time.perf_counter()
    init = default_init(y, spec)
    if not _feasible(init, spec):
        raise ConfigError("initial values violate the parameter constraints")
    theta0 = to_unconstrained(init, spec)

    def nll(theta):
        par = from_unconstrained(theta, spec)
        v = conditional_loglik(par, y, spec)
        return -v if v > LOGLIK_SENTINEL else 1e300

    nm_iter = max(min(spec.nm_maxiter, spec.max_iter), 1)
    nm_opts = {"maxiter": nm_iter, "adaptive": True, "xatol": 1e-7, "fatol": 1e-9}
    bf_opts = {"gtol": spec.gtol, "maxiter": spec.max_iter}
    nm = optimize.minimize(nll, theta0, method="Nelder-Mead", options=nm_opts)
    bf = optimize.minimize(nll, nm.x, method="BFGS", jac="3-point", options=bf_opts)
    nit = [int(nm.nit), int(bf.nit)]
    nfev = int(nm.nfev + bf.nfev)

    def gradient_norm(th):
        g = optimize.approx_fprime(th, nll, 1e-6)
        return float(np.max(np.abs(g))) if g.size else 0.0

    best = bf if bf.fun <= nm.fun else nm
    gnorm = gradient_norm(best.x)
    start = _pull_inside(best.x, spec, init)
    if (gnorm >= _GRAD_ACCEPT or start is not None) and spec.max_iter > 1:
        # one restart, from a point pulled back into the interior when the
        # first pass stalled on a transform boundary
        start = best.x if start is None else start
        nm = optimize.minimize(nll, start, method="Nelder-Mead", options=nm_opts)
        bf = optimize.minimize(nll, nm.x, method="BFGS", jac="3-point", options=bf_opts)
        nit = [nit[0] + int(nm.nit), nit[1] + int(bf.nit)]
        nfev += int(nm.nfev + bf.nfev)
        for cand in (nm, bf):
            if cand.fun < best.fun:
                best = cand
        gnorm = gradient_norm(best.x)
    theta = best.x
    estimates = from_unconstrained(theta, spec)
    # BFGS with finite differences often ends on "precision loss" at the
    # optimum; accept when the gradient is small in absolute terms
    converged = bool((bf.success or gnorm < _GRAD_ACCEPT) and bf.nit < spec.max_iter
                     and gnorm < 10 * _GRAD_ACCEPT)
    free = spec.free
    # Hessian in the unconstrained coordinates, mapped to natural parameters
    # by the delta method. At an interior optimum this equals the inverse of
    # the natural-parameter Hessian; near a constraint boundary it stays
    # finite where natural-scale steps would cross the boundary.
    H = numerical_hessian(nll, theta)
    hess_ok = False
    cov = np.full((len(free), len(free)), np.nan)
    if np.all(np.isfinite(H)):
        try:
            np.linalg.cholesky(0.5 * (H + H.T))
            J = _transform_jacobian(theta, spec)
            cov = J @ np.linalg.inv(0.5 * (H + H.T)) @ J.T
            hess_ok = bool(np.all(np.diag(cov) > 0))
        except np.linalg.LinAlgError:
            hess_ok = False
    ses = {n: math.nan for n in param_names(spec)}
    if hess_ok:
        ses.update({n: float(math.sqrt(cov[i, i])) for i, n in enumerate(free)})
    contrib = loglik_contributions(estimates, y, spec)
    e, s2 = _paths(estimates, y, spec)
    sig = np.sqrt(s2)
    ordered = {n: float(estimates[n]) for n in param_names(spec)}
    return FitResult(
        spec=spec, estimates=ordered, standard_errors=ses,
        loglik=float(contrib.sum()), n_obs=int(e.shape[0]),
        residuals=e / sig, sigma=sig, converged=converged,
        convergence={
            "status": "converged" if converged else "failed",
            "nelder_mead_iterations": nit[0], "bfgs_iterations": nit[1],
            "function_evaluations": nfev,
            "message": str(bf.message), "max_abs_gradient": gnorm,
        },
        hessian_ok=hess_ok, covariance=cov, elapsed=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class Diagnostics:
    """Residual ACFs, histogram with fitted density, and Q-Q pairs."""

    acf_eps: np.ndarray
    acf_eps2: np.ndarray
    band: float
    n: int
    hist_edges: np.ndarray
    hist_density: np.ndarray
    hist_fitted: np.ndarray
    curve_x: np.ndarray
    curve_density: np.ndarray
    qq_theoretical: np.ndarray
    qq_empirical: np.ndarray

    @property
    def n_outside(self) -> int:
        return int(np.sum(np.abs(self.acf_eps) > self.band))

    @property
    def n_outside_sq(self) -> int:
        return int(np.sum(np.abs(self.acf_eps2) > self.band))

    def summary(self) -> dict:
        return {"n": self.n, "band": self.band, "acf_outside": self.n_outside,
                "acf_sq_outside": self.n_outside_sq, "max_lag": int(self.acf_eps.size),
                "bins": int(self.hist_density.size)}

    def write_csvs(self, outdir) -> list[Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        files = []

        def dump(name, header, rows):
            path = outdir / name
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                w.writerows(rows)
            files.append(path)

        lags = range(1, self.acf_eps.size + 1)
        dump("acf.csv", ["lag", "acf_eps", "acf_eps2", "band_low", "band_high"],
             [[k, float(a), float(b), -self.band, self.band]
              for k, a, b in zip(lags, self.acf_eps, self.acf_eps2)])
        dump("histogram.csv", ["left", "right", "density", "fitted_density"],
             [[float(lo), float(hi), float(d), float(f)] for lo, hi, d, f in
              zip(self.hist_edges[:-1], self.hist_edges[1:], self.hist_density,
                  self.hist_fitted)])
        dump("density_curve.csv", ["x", "density"],
             [[float(a), float(b)] for a, b in zip(self.curve_x, self.curve_density)])
        dump("qq.csv", ["theoretical", "empirical"],
             [[float(a), float(b)] for a, b in zip(self.qq_theoretical, self.qq_empirical)])
        return files


def residual_diagnostics(residuals, innovation: Innovation, max_lag: int = 100,
                         n_curve: int = 401) -> Diagnostics:
    """
    Diagnostics for standardized residuals against the fitted law.

    Parameters
    ----------
    residuals : array or FitResult
        A :class:`FitResult` contributes its residuals; ``innovation`` may
        then be None to use the fitted law.
    """
    if isinstance(residuals, FitResult):
        if innovation is None:
            innovation = residuals.model.innovation
        residuals = residuals.residuals
    r = np.asarray(residuals, dtype=float)
    n = r.shape[0]
    lag = min(max_lag, n - 1)
    a1 = acf(r, lag)
    a2 = acf(r * r, lag)
    edges = np.histogram_bin_edges(r, bins="fd")
    counts, edges = np.histogram(r, bins=edges, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    fitted = innovation.density(centers)
    cx = np.linspace(edges[0], edges[-1], n_curve)
    theo = innovation.ppf((np.arange(1, n + 1) - 0.5) / n)
    return Diagnostics(a1.values, a2.values, a1.band, n, edges, counts, fitted,
                       cx, innovation.density(cx), theo, np.sort(r))
