"""
Flat ``dotted.key = value`` configuration files.

Blank lines and lines starting with ``#`` are ignored; a ``#`` after a value
starts a comment. Values are kept as strings and converted by the typed
getters of :class:`Config`. Lists are comma-separated.

Example::

    # simulate the fitted model
    model.preset = empirical
    simulate.n = 2719
    simulate.burn_in = 1000
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from nlarch.distributions import innovation_from_dict
from nlarch.errors import ConfigError
from nlarch.model import (
    ARCHSpec,
    ARCoefficients,
    BoundedShrink,
    ConstantOne,
    Logistic,
    LinearMean,
    LogisticIntercept,
    ModelSpec,
    TimeVaryingSlope,
    empirical_model,
)

__all__ = ["Config", "parse_config", "load_config", "model_from_config"]

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass
class Config:
    values: dict[str, str] = field(default_factory=dict)
    source: str | None = None

    def __contains__(self, key: str) -> bool:
        return key in self.values

    def set(self, key: str, value) -> None:
        self.values[key] = str(value)

    def get_str(self, key: str, default: str | None = None) -> str | None:
        return self.values.get(key, default)

    def get_float(self, key: str, default: float | None = None) -> float | None:
        if key not in self.values:
            return default
        try:
            return float(self.values[key])
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {self.values[key]!r}") from None

    def get_int(self, key: str, default: int | None = None) -> int | None:
        if key not in self.values:
            return default
        try:
            return int(self.values[key])
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {self.values[key]!r}") from None

    def get_bool(self, key: str, default: bool | None = None) -> bool | None:
        if key not in self.values:
            return default
        v = self.values[key].strip().lower()
        if v in _TRUE:
            return True
        if v in _FALSE:
            return False
        raise ConfigError(f"{key}: expected true/false, got {self.values[key]!r}")

    def get_floats(self, key: str, default: tuple | None = None) -> tuple | None:
        if key not in self.values:
            return default
        raw = self.values[key].strip()
        if not raw:
            return ()
        try:
            return tuple(float(v) for v in raw.split(","))
        except ValueError:
            raise ConfigError(f"{key}: expected comma-separated numbers") from None

    def section(self, prefix: str) -> dict[str, str]:
        """Entries under ``prefix.`` with the prefix stripped."""
        pre = prefix.rstrip(".") + "."
        return {k[len(pre):]: v for k, v in self.values.items() if k.startswith(pre)}

    def to_dict(self) -> dict:
        return dict(self.values)


def parse_config(text: str, source: str | None = None) -> Config:
    """
    Raises
    ------
    ConfigError
        On a line without ``=``, an empty key or a duplicate key; the message
        carries the line number.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or any(c.isspace() for c in key):
            raise ConfigError(f"line {lineno}: invalid key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    return Config(values, source)


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(), str(p))


def _innovation(cfg: Config):
    kind = cfg.get_str("model.innovation.kind")
    if kind is None:
        return None
    spec = {"kind": kind}
    for key in ("c", "d", "df"):
        v = cfg.get_float(f"model.innovation.{key}")
        if v is not None:
            spec[key] = v
    try:
        return innovation_from_dict(spec)
    except KeyError as exc:
        raise ConfigError(f"model.innovation.{exc.args[0]} is required") from None


def _required(cfg: Config, key: str) -> float:
    v = cfg.get_float(key)
    if v is None:
        raise ConfigError(f"{key} is required")
    return v


def model_from_config(cfg: Config) -> ModelSpec:
    """
    Build a model from the ``model.*`` keys.

    ``model.preset = empirical`` (the default) starts from the fitted
    energy-volatility model; its parameters can be overridden with
    ``model.nu``, ``model.gamma``, ``model.a``, ``model.omega``,
    ``model.alpha``, ``model.innovation.*``. ``model.preset = custom``
    requires ``model.mean.kind`` and ``model.arch.*``.
    """
    preset = (cfg.get_str("model.preset") or "empirical").lower()
    innovation = _innovation(cfg)
    if preset == "empirical":
        kw = {}
        for key in ("nu", "gamma", "a", "omega"):
            v = cfg.get_float(f"model.{key}")
            if v is not None:
                kw[key] = v
        alpha = cfg.get_floats("model.alpha")
        if alpha is not None:
            kw["alpha"] = alpha
        model = empirical_model(**kw)
        if innovation is not None:
            model = ModelSpec(model.ar, model.mean, model.arch, innovation)
        return model
    if preset != "custom":
        raise ConfigError(f"unknown model.preset {preset!r}")

    ar = ARCoefficients(cfg.get_floats("model.pi", ()))
    kind = (cfg.get_str("model.mean.kind") or "").lower()

    def f(k: str) -> float:
        return _required(cfg, f"model.mean.{k}")

    if kind == "logistic_intercept":
        if "model.mean.nu" in cfg:
            mean = LogisticIntercept.symmetric(f("nu"), f("gamma"), f("a"))
        else:
            mean = LogisticIntercept(f("nu1"), f("nu2"), f("gamma"), f("a1"), f("a2"))
    elif kind == "time_varying_slope":
        mean = TimeVaryingSlope(cfg.get_str("model.mean.slope", "S1"), f("r0"),
                                cfg.get_float("model.mean.a", 0.0), f("rho"),
                                cfg.get_str("model.mean.h", "abs"))
    elif kind == "bounded_shrink":
        r, rho = f("r"), f("rho")
        mean = BoundedShrink(r, rho, cfg.get_float("model.mean.threshold", r ** (1 / rho)))
    elif kind == "linear":
        mean = LinearMean(cfg.get_float("model.mean.slope", 0.0))
    else:
        raise ConfigError("model.mean.kind must be logistic_intercept, "
                          "time_varying_slope, bounded_shrink or linear")

    gate_kind = (cfg.get_str("model.arch.gate") or "one").lower()
    if gate_kind == "one":
        gate = ConstantOne()
    elif gate_kind == "logistic":
        gate = Logistic(_required(cfg, "model.arch.gate_gamma"),
                        _required(cfg, "model.arch.gate_a"))
    elif gate_kind == "mean" and isinstance(mean, LogisticIntercept):
        gate = Logistic(mean.gamma, mean.a1)
    else:
        raise ConfigError("model.arch.gate must be one, logistic or mean")
    alpha = cfg.get_floats("model.arch.alpha")
    if alpha is None:
        raise ConfigError("model.arch.alpha is required")
    arch = ARCHSpec(_required(cfg, "model.arch.omega"), alpha, gate)
    if innovation is None:
        innovation = innovation_from_dict({"kind": "normal"})
    return ModelSpec(ar, mean, arch, innovation)
