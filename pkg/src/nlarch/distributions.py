"""
Innovation distributions with zero mean and unit variance.

Three laws are available: :class:`UnitNormal`, :class:`StudentT` rescaled to
unit variance and :class:`SkewT`, the two-parameter skew-t of Jones and Faddy
centred and rescaled by its own mean and standard deviation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
from numpy.random import Generator, SeedSequence, default_rng
from scipy import integrate, stats
from scipy.interpolate import PchipInterpolator
from scipy.special import betaln, roots_jacobi

from nlarch.errors import ConfigError, DivergentMomentError

__all__ = [
    "Innovation",
    "UnitNormal",
    "StudentT",
    "SkewT",
    "skewt_log_density_raw",
    "skewt_standardize",
    "density",
    "log_density",
    "sample",
    "as_generator",
    "innovation_from_dict",
]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Gauss-Legendre rule reused by the tabulated skew-t CDF
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def as_generator(seed) -> Generator:
    """Return a NumPy Generator from an int, SeedSequence, Generator or None."""
    if isinstance(seed, Generator):
        return seed
    return default_rng(seed)


def _skewt_log_norm(c: float, d: float) -> float:
    # log C_{c,d} = (c+d-1) log 2 + log B(c,d) + log(c+d)/2
    return (c + d - 1.0) * math.log(2.0) + betaln(c, d) + 0.5 * math.log(c + d)


def skewt_log_density_raw(x, c: float, d: float):
    """
    Log density of the raw (not standardized) Jones-Faddy skew-t.

    Parameters
    ----------
    x : float or ndarray
        Evaluation points.
    c, d : float
        Positive shape parameters. ``c`` controls the left tail and ``d`` the
        right tail; ``c > d`` gives right skew.

    Returns
    -------
    float or ndarray
        ``log f(x; c, d)``.

    Notes
    -----
    Both factors are evaluated in log space. The factor that tends to zero in
    a tail is rewritten as ``(c+d) / (r (r + |x|))`` with ``r = sqrt(c+d+x^2)``
    so that no cancellation occurs for large ``|x|``.
    """
    if c <= 0 or d <= 0:
        raise ConfigError("skew-t parameters c and d must be positive")
    x = np.asarray(x, dtype=float)
    cd = c + d
    r = np.sqrt(cd + x * x)
    ax = np.abs(x)
    log_r = np.log(r)
    log_big = np.log(r + ax) - log_r
    log_small = math.log(cd) - log_r - np.log(r + ax)
    pos = x >= 0
    log_plus = np.where(pos, log_big, log_small)
    log_minus = np.where(pos, log_small, log_big)
    out = (c + 0.5) * log_plus + (d + 0.5) * log_minus - _skewt_log_norm(c, d)
    return out if out.ndim else float(out)


def _skewt_moments_jacobi(c: float, d: float) -> tuple[float, float]:
    # Substituting t = x / sqrt(c+d+x^2) turns the density into a Jacobi weight
    # on (-1, 1); the first two moments become polynomial integrands that an
    # 8-node Gauss-Jacobi rule integrates exactly. Smooth in (c, d).
    cd = c + d
    log_norm = (cd - 1.0) * math.log(2.0) + betaln(c, d)
    t1, w1 = roots_jacobi(8, d - 1.5, c - 1.5)
    t2, w2 = roots_jacobi(8, d - 2.0, c - 2.0)
    m = math.sqrt(cd) * float(np.dot(w1, t1)) * math.exp(-log_norm)
    if c == d:
        m = 0.0  # exact by symmetry; rounding would break f(x) = f(-x)
    ex2 = cd * float(np.dot(w2, t2 * t2)) * math.exp(-log_norm)
    return m, math.sqrt(ex2 - m * m)


def skewt_standardize(c: float, d: float, method: str = "quad") -> tuple[float, float]:
    """
    Mean and standard deviation of the raw skew-t density.

    Parameters
    ----------
    c, d : float
        Shape parameters, both strictly greater than one.
    method : {"quad", "jacobi"}
        ``"quad"`` integrates ``x f(x)`` and ``(x-m)^2 f(x)`` over the real
        line with adaptive Gauss-Kronrod quadrature. ``"jacobi"`` uses the
        substitution ``t = x / sqrt(c+d+x^2)`` followed by Gauss-Jacobi
        quadrature, which is exact up to rounding and smooth in ``(c, d)``.

    Returns
    -------
    m, s : float
    """
    if c <= 1 or d <= 1:
        raise ConfigError("standardization requires c > 1 and d > 1")
    if method == "jacobi":
        return _skewt_moments_jacobi(c, d)
    if method != "quad":
        raise ConfigError(f"unknown method {method!r}")

    def f(x):
        return math.exp(skewt_log_density_raw(x, c, d))

    opts = dict(epsabs=0.0, epsrel=1e-12, limit=400)
    m = sum(integrate.quad(lambda x: x * f(x), lo, hi, **opts)[0]
            for lo, hi in ((-np.inf, 0.0), (0.0, np.inf)))
    if c == d:
        m = 0.0
    var = sum(integrate.quad(lambda x: (x - m) ** 2 * f(x), lo, hi, **opts)[0]
              for lo, hi in ((-np.inf, m), (m, np.inf)))
    return m, math.sqrt(var)


class Innovation:
    """
    Base class for standardized innovation laws.

    Subclasses provide ``log_density``, ``cdf``, ``ppf`` and
    ``max_moment_order``. Everything else is shared.
    """

    name = "innovation"

    def log_density(self, x):
        raise NotImplementedError

    def density(self, x):
        return np.exp(self.log_density(x))

    def cdf(self, x):
        raise NotImplementedError

    def ppf(self, u):
        raise NotImplementedError

    @property
    def max_moment_order(self) -> float:
        """Supremum of ``k`` such that ``E|eps|^k`` is finite."""
        raise NotImplementedError

    def sample(self, n: int, seed=None) -> np.ndarray:
        """Draw ``n`` IID variates by inversion of the CDF."""
        if n < 1:
            raise ConfigError("n must be at least 1")
        rng = as_generator(seed)
        return self.ppf(rng.random(n))

    def abs_moment(self, k: float) -> float:
        """
        ``E|eps|^k`` by adaptive quadrature against the density.

        Raises
        ------
        DivergentMomentError
            If ``k`` is at or beyond the tail index of the law.
        """
        if k < 0:
            raise ConfigError("moment order must be non-negative")
        if k >= self.max_moment_order:
            raise DivergentMomentError(
                f"moment of order {k} is infinite for {self!r} "
                f"(finite only below {self.max_moment_order})"
            )
        if k == 0:
            return 1.0
        total = 0.0
        for lo, hi in ((-np.inf, 0.0), (0.0, np.inf)):
            val, err = integrate.quad(
                lambda z: abs(z) ** k * math.exp(self.log_density(z)),
                lo, hi, epsabs=0.0, epsrel=1e-11, limit=400,
            )
            total += val
        return total

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class UnitNormal(Innovation):
    name = "normal"

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        out = -_HALF_LOG_2PI - 0.5 * x * x
        return out if out.ndim else float(out)

    def cdf(self, x):
        return stats.norm.cdf(x)

    def ppf(self, u):
        return stats.norm.ppf(u)

    def sample(self, n: int, seed=None) -> np.ndarray:
        if n < 1:
            raise ConfigError("n must be at least 1")
        return as_generator(seed).standard_normal(n)

    @property
    def max_moment_order(self) -> float:
        return math.inf

    def abs_moment(self, k: float) -> float:
        if k < 0:
            raise ConfigError("moment order must be non-negative")
        # E|Z|^k = 2^{k/2} Gamma((k+1)/2) / sqrt(pi)
        return math.exp(0.5 * k * math.log(2.0) + math.lgamma(0.5 * (k + 1))
                        - 0.5 * math.log(math.pi))

    def to_dict(self) -> dict:
        return {"kind": "normal"}


@dataclass(frozen=True)
class StudentT(Innovation):
    """Student's t with ``df > 2`` degrees of freedom, rescaled to unit variance."""

    df: float
    name = "studentt"

    def __post_init__(self):
        if not self.df > 2:
            raise ConfigError("StudentT requires df > 2")

    @property
    def _scale(self) -> float:
        return math.sqrt((self.df - 2.0) / self.df)

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        out = stats.t.logpdf(x / self._scale, self.df) - math.log(self._scale)
        return out if np.ndim(out) else float(out)

    def cdf(self, x):
        return stats.t.cdf(np.asarray(x) / self._scale, self.df)

    def ppf(self, u):
        return stats.t.ppf(u, self.df) * self._scale

    def sample(self, n: int, seed=None) -> np.ndarray:
        if n < 1:
            raise ConfigError("n must be at least 1")
        return as_generator(seed).standard_t(self.df, size=n) * self._scale

    @property
    def max_moment_order(self) -> float:
        return float(self.df)

    def to_dict(self) -> dict:
        return {"kind": "studentt", "df": self.df}


@dataclass(frozen=True)
class _TabulatedCDF:
    """
    CDF of the raw skew-t tabulated on the angle ``phi`` with
    ``x = sqrt(c+d) tan(phi)``.

    Panel integrals use a 16-point Gauss-Legendre rule; arbitrary points are
    handled by integrating the partial panel with the same rule.
    """

    c: float
    d: float
    n_panels: int = 2048
    edges: np.ndarray = field(init=False, repr=False)
    left: np.ndarray = field(init=False, repr=False)
    right: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        edges = np.linspace(-math.pi / 2, math.pi / 2, self.n_panels + 1)
        lo, hi = edges[:-1], edges[1:]
        half = 0.5 * (hi - lo)
        nodes = (0.5 * (hi + lo))[:, None] + half[:, None] * _GL_NODES[None, :]
        panel = half * (np.exp(self._log_h(nodes)) @ _GL_WEIGHTS)
        # cumulative mass from the left and survival mass from the right,
        # each accumulated from its own tail to keep relative precision
        left = np.concatenate(([0.0], np.cumsum(panel)))
        right = np.concatenate((np.cumsum(panel[::-1])[::-1], [0.0]))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @property
    def scale(self) -> float:
        return math.sqrt(self.c + self.d)

    @property
    def total(self) -> float:
        return float(self.left[-1])

    def _log_h(self, phi):
        # integrand in phi: f(k tan phi) * k sec^2(phi)
        k = self.scale
        return (skewt_log_density_raw(k * np.tan(phi), self.c, self.d)
                + math.log(k) - 2.0 * np.log(np.cos(phi)))

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        phi = np.arctan(x / self.scale)
        width = self.edges[1] - self.edges[0]
        j = np.clip(((phi + math.pi / 2) // width).astype(int), 0, self.n_panels - 1)
        lo = self.edges[j]
        half = 0.5 * (phi - lo)
        nodes = (lo + half)[..., None] + half[..., None] * _GL_NODES
        part = half * (np.exp(self._log_h(nodes)) @ _GL_WEIGHTS)
        out = np.where(phi <= 0.0, self.left[j] + part,
                       1.0 - (self.right[j] - part))
        return np.clip(out, 0.0, 1.0)

    @cached_property
    def _lower(self):
        keep = (self.left > 0) & (self.left <= 0.6)
        return (PchipInterpolator(np.log(self.left[keep]), self.edges[keep]),
                float(self.left[keep][0]), float(self.edges[keep][0]))

    @cached_property
    def _upper(self):
        keep = (self.right > 0) & (self.right <= 0.6)
        sl = np.log(self.right[keep])[::-1]
        return (PchipInterpolator(sl, self.edges[keep][::-1]),
                float(self.right[keep][-1]), float(self.edges[keep][-1]))

    def ppf(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        k = self.scale
        out = np.empty_like(u)
        low = u <= 0.5
        interp, f1, phi1 = self._lower
        ul = u[low]
        x = k * np.tan(interp(np.log(np.maximum(ul, 1e-300))))
        # beyond the outermost knot: F(x) ~ F1 (|x|/|x1|)^(-2c)
        x1 = k * math.tan(phi1)
        tail = ul < f1
        x[tail] = x1 * (ul[tail] / f1) ** (-1.0 / (2.0 * self.c))
        out[low] = x
        interp, s1, phi1 = self._upper
        su = 1.0 - u[~low]
        x = k * np.tan(interp(np.log(np.maximum(su, 1e-300))))
        x1 = k * math.tan(phi1)
        tail = su < s1
        x[tail] = x1 * (su[tail] / s1) ** (-1.0 / (2.0 * self.d))
        out[~low] = x
        return out


@dataclass(frozen=True)
class SkewT(Innovation):
    """
    Jones-Faddy skew-t centred to mean zero and scaled to unit variance.

    The standardized density is ``s f(s x + m; c, d)`` where ``m`` and ``s``
    are the mean and standard deviation of the raw law. Moments of order
    ``k`` exist only for ``k < 2 min(c, d)``.
    """

    c: float
    d: float
    name = "skewt"

    def __post_init__(self):
        if not (self.c > 1 and self.d > 1):
            raise ConfigError("SkewT requires c > 1 and d > 1")

    @cached_property
    def loc_scale(self) -> tuple[float, float]:
        return _skewt_moments_jacobi(self.c, self.d)

    @cached_property
    def _table(self) -> _TabulatedCDF:
        return _TabulatedCDF(self.c, self.d)

    def log_density(self, x):
        m, s = self.loc_scale
        out = math.log(s) + skewt_log_density_raw(
            s * np.asarray(x, dtype=float) + m, self.c, self.d)
        return out

    def cdf(self, x):
        m, s = self.loc_scale
        return self._table.cdf(s * np.asarray(x, dtype=float) + m)

    def ppf(self, u):
        m, s = self.loc_scale
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0) | (u >= 1)):
            raise ConfigError("ppf requires 0 < u < 1")
        return (self._table.ppf(u) - m) / s

    def sample(self, n: int, seed=None) -> np.ndarray:
        """
        Exact draws through the beta representation: for ``B ~ Beta(c, d)``,
        ``sqrt(c + d) (2B - 1) / (2 sqrt(B (1 - B)))`` has the raw law.
        """
        if n < 1:
            raise ConfigError("n must be at least 1")
        rng = as_generator(seed)
        m, s = self.loc_scale
        b = np.clip(rng.beta(self.c, self.d, n), 1e-300, 1.0 - 2.0 ** -53)
        with np.errstate(divide="ignore"):
            raw = math.sqrt(self.c + self.d) * (2.0 * b - 1.0) / (2.0 * np.sqrt(b * (1.0 - b)))
        return (raw - m) / s

    @property
    def max_moment_order(self) -> float:
        return 2.0 * min(self.c, self.d)

    def abs_moment(self, k: float) -> float:
        if k >= self.max_moment_order:
            raise DivergentMomentError(
                f"moment of order {k} is infinite for SkewT(c={self.c}, d={self.d})"
            )
        m, s = self.loc_scale
        if k == 0:
            return 1.0
        # integrate on the raw scale, splitting at the mean
        total = 0.0
        for lo, hi in ((-np.inf, m), (m, np.inf)):
            val, _ = integrate.quad(
                lambda x: abs((x - m) / s) ** k
                * math.exp(skewt_log_density_raw(x, self.c, self.d)),
                lo, hi, epsabs=0.0, epsrel=1e-11, limit=400,
            )
            total += val
        return total

    def to_dict(self) -> dict:
        return {"kind": "skewt", "c": self.c, "d": self.d}


def density(innovation: Innovation, x):
    return innovation.density(x)


def log_density(innovation: Innovation, x):
    return innovation.log_density(x)


def sample(innovation: Innovation, n: int, seed=None) -> np.ndarray:
    """IID draws, reproducible for a given ``seed``."""
    return innovation.sample(n, seed)


def innovation_from_dict(spec: dict) -> Innovation:
    kind = str(spec.get("kind", "normal")).lower()
    if kind in ("normal", "unitnormal", "gaussian"):
        return UnitNormal()
    if kind in ("studentt", "t", "student"):
        return StudentT(float(spec["df"]))
    if kind in ("skewt", "skew-t", "skew_t"):
        return SkewT(float(spec["c"]), float(spec["d"]))
    raise ConfigError(f"unknown innovation kind {kind!r}")


def spawn_generators(seed, n: int) -> list[Generator]:
    """Independent generators derived from ``(seed, index)``."""
    ss = seed if isinstance(seed, SeedSequence) else SeedSequence(seed)
    return [default_rng(child) for child in ss.spawn(n)]

