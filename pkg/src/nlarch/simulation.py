"""Path simulation and time-series diagnostics."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from nlarch.distributions import spawn_generators
from nlarch.errors import ConfigError, DataError, SimulationExplosionError
from nlarch.model import ModelSpec, StateVector, compute_u, reconstruct_xi

__all__ = [
    "SimulatedPath",
    "simulate",
    "simulate_many",
    "DegenerateInputError",
    "ACFResult",
    "acf",
    "MomentScan",
    "moment_scan",
    "EXPLOSION_BOUND",
]

EXPLOSION_BOUND = 1e100


class DegenerateInputError(DataError):
    """Series without variation."""


@dataclass(frozen=True)
class SimulatedPath:
    """
    One simulated path after burn-in.

    ``initial`` is the state immediately before ``y[0]``: the ``p + q``
    previous observations and the exact squared errors of the ``q`` previous
    steps.
    """

    y: np.ndarray
    sigma: np.ndarray
    eps: np.ndarray
    u: np.ndarray
    e: np.ndarray
    burn_in: int
    seed: object
    initial: StateVector
    metadata: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "y", "sigma", "eps", "u", "e"])
            for t in range(self.n):
                w.writerow([t + 1, repr(float(self.y[t])), repr(float(self.sigma[t])),
                            repr(float(self.eps[t])), repr(float(self.u[t])),
                            repr(float(self.e[t]))])


def _initial_arrays(model: ModelSpec, initial) -> tuple[np.ndarray, np.ndarray]:
    if initial is None or (isinstance(initial, str) and initial == "zeros"):
        initial = StateVector.zeros(model)
    if not isinstance(initial, StateVector):
        raise ConfigError("initial must be a StateVector or 'zeros'")
    if initial.x.shape[0] != model.dim:
        raise ConfigError(f"initial state must have length p+q={model.dim}")
    return initial.x.copy(), reconstruct_xi(initial, model)


def _run(model: ModelSpec, eps: np.ndarray, x0: np.ndarray, xi0: np.ndarray):
    """
    Core recursion, vectorized over replications (rows of ``eps``).

    Returns arrays of shape ``(R, T)`` for y, sigma, u, e and the final
    y-lags and squared-error lags of every replication.
    """
    R, T = eps.shape
    p, q = model.p, model.q
    pi = model.ar.array
    arch = model.arch
    alpha = np.asarray(arch.alpha)
    gates = arch.gates
    shared = arch.shared_gate
    mean = model.mean

    k = p + q
    # histories in time order with the initial lags in front; row slices
    # replace per-step shifting of the lag vectors
    Y = np.empty((R, k + T))
    Y[:, :k] = x0[::-1]
    E2 = np.empty((R, q + T))
    E2[:, :q] = xi0[::-1]
    alpha_rev = alpha[::-1].copy()
    pi_rev = pi[::-1].copy()
    u_prev = np.full(R, compute_u(x0[:p], model.ar))
    out_s = np.empty((R, T))
    out_u = np.empty((R, T))
    out_e = np.empty((R, T))
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(T):
            y_prev = Y[:, k + t - 1]
            if shared:
                s2 = gates[0](y_prev) * (arch.omega + E2[:, t:t + q] @ alpha_rev)
            else:
                s2 = gates[0](y_prev) * arch.omega
                for i in range(q):
                    s2 = s2 + gates[i + 1](y_prev) * alpha[i] * E2[:, q + t - 1 - i]
            sig = np.sqrt(s2)
            e = sig * eps[:, t]
            u = mean(u_prev) + e
            y = u + Y[:, k + t - p + 1:k + t] @ pi_rev if p > 1 else u
            if not np.all(np.abs(y) <= EXPLOSION_BOUND):
                bad = ~(np.abs(y) <= EXPLOSION_BOUND)
                raise SimulationExplosionError(t, int(np.argmax(bad)))
            Y[:, k + t] = y
            E2[:, q + t] = e * e
            out_s[:, t], out_u[:, t], out_e[:, t] = sig, u, e
            u_prev = u
    out_y = Y[:, k:]
    ylags = Y[:, T:][:, ::-1]
    e2lags = E2[:, T:][:, ::-1]
    return out_y, out_s, out_u, out_e, ylags, e2lags


def _split(model, burn_in, seed, eps_row, y, s, u, e, x0, xi0, rep_seed):
    p, q = model.p, model.q
    if burn_in > 0:
        full_y = np.concatenate((x0[::-1], y))
        start = full_y.shape[0] - y.shape[0] + burn_in
        lags = full_y[start - p - q:start][::-1]
        e2 = (e[burn_in - q:burn_in][::-1] ** 2 if burn_in >= q
              else np.concatenate(((e[:burn_in][::-1]) ** 2, xi0[: q - burn_in])))
    else:
        lags, e2 = x0.copy(), xi0.copy()
    sl = slice(burn_in, None)
    return SimulatedPath(
        y=y[sl].copy(), sigma=s[sl].copy(), eps=eps_row[sl].copy(),
        u=u[sl].copy(), e=e[sl].copy(), burn_in=burn_in, seed=rep_seed,
        initial=StateVector(lags, e2),
        metadata={"burn_in": burn_in, "initial": "zeros" if not np.any(x0) and not np.any(xi0)
                  else "given", "seed": seed},
    )


def simulate(model: ModelSpec, n: int, burn_in: int = 1000, initial="zeros",
             seed=None) -> SimulatedPath:
    """
    Simulate ``n`` observations after discarding ``burn_in`` steps.

    Innovations are drawn up front from the model's law, so the path is a
    deterministic function of ``seed``.

    Raises
    ------
    SimulationExplosionError
        When ``y`` becomes non-finite or exceeds ``1e100`` in absolute value;
        the index counts from the first burn-in step.
    """
    return simulate_many(model, n, 1, burn_in=burn_in, initial=initial, seed=seed)[0]


def simulate_many(model: ModelSpec, n: int, replications: int, burn_in: int = 1000,
                  initial="zeros", seed=None) -> list[SimulatedPath]:
    """
    Independent replications, each with its own stream spawned from
    ``(seed, replication index)``. The recursion runs across all
    replications at once.
    """
    if int(n) < 1 or int(replications) < 1 or int(burn_in) < 0:
        raise ConfigError("need n >= 1, replications >= 1 and burn_in >= 0")
    n, replications, burn_in = int(n), int(replications), int(burn_in)
    x0, xi0 = _initial_arrays(model, initial)
    gens = spawn_generators(seed, replications)
    T = n + burn_in
    eps = np.vstack([model.innovation.sample(T, g) for g in gens])
    y, s, u, e, _, _ = _run(model, eps, x0, xi0)
    return [_split(model, burn_in, seed, eps[r], y[r], s[r], u[r], e[r], x0, xi0, (seed, r))
            for r in range(replications)]


@dataclass(frozen=True)
class ACFResult:
    values: np.ndarray
    band: float
    n: int

    @property
    def outside(self) -> np.ndarray:
        """Lags (1-based) whose autocorrelation lies outside the band."""
        return np.flatnonzero(np.abs(self.values) > self.band) + 1

    @property
    def n_outside(self) -> int:
        return int(self.outside.size)


def acf(series: Sequence[float], max_lag: int) -> ACFResult:
    """
    Sample autocorrelations at lags ``1..max_lag`` with denominator ``n``
    and the ``1.96 / sqrt(n)`` band.

    Raises
    ------
    DegenerateInputError
        For a series with zero variance.
    """
    x = np.asarray(series, dtype=float)
    n = x.shape[0]
    if max_lag < 1 or n <= max_lag:
        raise ConfigError("need 1 <= max_lag < len(series)")
    if not np.all(np.isfinite(x)):
        raise DataError("series contains non-finite values")
    d = x - x.mean()
    c0 = float(d @ d) / n
    if not c0 > 1e-300 * max(1.0, float(np.max(np.abs(x))) ** 2):
        raise DegenerateInputError("series has zero variance")
    # FFT of the zero-padded series gives all lagged products at once
    m = 1 << int(math.ceil(math.log2(2 * n)))
    f = np.fft.rfft(d, m)
    full = np.fft.irfft(f * np.conj(f), m)[: max_lag + 1] / n
    return ACFResult(full[1:] / c0, 1.96 / math.sqrt(n), n)


@dataclass(frozen=True)
class MomentScan:
    """
    ``estimates[k]`` and ``standard_errors[k]`` are the across-replication
    mean and standard error of the per-path averages of ``|y|^order``;
    ``by_length`` holds the same for the prefix lengths in ``lengths``.
    """

    orders: tuple[float, ...]
    lengths: tuple[int, ...]
    estimates: np.ndarray
    standard_errors: np.ndarray
    by_length: np.ndarray
    dispersion: np.ndarray
    divergent: np.ndarray

    def to_dict(self) -> dict:
        return {
            "orders": list(self.orders), "lengths": list(self.lengths),
            "estimates": self.estimates.tolist(),
            "standard_errors": self.standard_errors.tolist(),
            "divergent": [bool(v) for v in self.divergent],
        }


def moment_scan(paths, orders: Sequence[float], min_replications: int = 50) -> MomentScan:
    """
    Sample moments ``E|y_t|^k`` across replicated paths.

    A finite moment makes the per-path averages settle down as the path
    lengthens, so their across-replication dispersion shrinks. An order is
    flagged as divergent when the dispersion at full length exceeds the
    dispersion at a quarter of the length, or when the estimate drifts
    upward by more than four standard errors between those lengths.

    Parameters
    ----------
    paths : sequence of SimulatedPath or 2-d array (replications x length)
    """
    if isinstance(paths, np.ndarray):
        Y = np.atleast_2d(paths).astype(float)
    else:
        Y = np.vstack([p.y if isinstance(p, SimulatedPath) else np.asarray(p, float)
                       for p in paths])
    R, n = Y.shape
    if R < min_replications:
        raise ConfigError(f"moment_scan needs at least {min_replications} replications")
    if n < 8:
        raise ConfigError("paths are too short for a moment scan")
    lengths = (max(n // 4, 1), max(n // 2, 1), n)
    orders = tuple(float(k) for k in orders)
    A = np.abs(Y)
    by_len = np.empty((len(orders), len(lengths)))
    disp = np.empty_like(by_len)
    se = np.empty_like(by_len)
    with np.errstate(over="ignore", invalid="ignore"):
        for i, k in enumerate(orders):
            cum = np.cumsum(A ** k, axis=1)
            for j, L in enumerate(lengths):
                per_path = cum[:, L - 1] / L
                by_len[i, j] = per_path.mean()
                disp[i, j] = per_path.std(ddof=1)
                se[i, j] = disp[i, j] / math.sqrt(R)
    grow = by_len[:, -1] - by_len[:, 0] > 4.0 * np.hypot(se[:, -1], se[:, 0])
    spread = disp[:, -1] > disp[:, 0]
    divergent = ~np.isfinite(by_len[:, -1]) | grow | spread
    return MomentScan(orders, lengths, by_len[:, -1].copy(), se[:, -1].copy(),
                      by_len, disp, divergent)
