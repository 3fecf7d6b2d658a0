"""
Command line front end.

    nlarch --command simulate --config run.cfg --out results/ --seed 7
    nlarch --command fit --input results/path.csv --out fit/
    nlarch --command check --out check/
    nlarch --command diagnose --input fit/series.csv --out diag/

Settings resolve as flag > environment (``NLARCH_SEED``, ``NLARCH_OUT``) >
config file (``run.*`` keys) > default. Every run writes ``metadata.json``
to the output directory, including failed runs once the directory is known.

Exit codes: 0 success, 10 configuration error, 20 data error, 30 numeric
error or a failed stability check, 40 non-convergence, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from nlarch import __version__
from nlarch.config import Config, load_config, model_from_config
from nlarch.distributions import innovation_from_dict
from nlarch.errors import ConfigError, NLArchError
from nlarch.estimation import FitSpec, fit, param_names, residual_diagnostics
from nlarch.io import ingest_csv
from nlarch.simulation import simulate
from nlarch.stability import DriftParams, default_drift_grid, ergodicity_report

__all__ = ["RunConfig", "build_parser", "resolve", "run", "main", "EXIT_CODES"]

log = logging.getLogger("nlarch")

COMMANDS = ("simulate", "fit", "check", "diagnose")
EXIT_CODES = {"ok": 0, "config": 10, "data": 20, "numeric": 30, "convergence": 40,
              "internal": 1}


@dataclass
class RunConfig:
    """Resolved settings of one invocation."""

    command: str
    config: Config = field(default_factory=Config)
    input: str | None = None
    out: str = "."
    seed: int | None = None
    verbosity: int = 0
    sources: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CODES["config"], f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nlarch", description=(
        "Simulate, fit and check nonlinear AR models with gated ARCH errors."))
    ap.add_argument("--command", choices=COMMANDS,
                    help="workflow to run (or run.command in the config)")
    ap.add_argument("--config", metavar="PATH", help="key = value configuration file")
    ap.add_argument("--input", metavar="PATH", help="date,value CSV with a header row")
    ap.add_argument("--out", metavar="DIR", help="output directory (env NLARCH_OUT)")
    ap.add_argument("--seed", type=int, metavar="N", help="random seed (env NLARCH_SEED)")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    ap.add_argument("-q", "--quiet", action="store_true")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def _parse_seed(raw: str, where: str) -> int:
    try:
        seed = int(raw)
    except ValueError:
        raise ConfigError(f"{where}: seed must be an integer, got {raw!r}") from None
    if seed < 0:
        raise ConfigError(f"{where}: seed must be non-negative")
    return seed


def resolve(args: argparse.Namespace, env=None) -> RunConfig:
    """Merge flags, environment and config file into a :class:`RunConfig`."""
    env = os.environ if env is None else env
    cfg = load_config(args.config)
    sources = {}

    def pick(name, flag, env_key, cfg_key, default):
        if flag is not None:
            sources[name] = "flag"
            return flag
        if env_key and env.get(env_key):
            sources[name] = "env"
            return env[env_key]
        if cfg_key in cfg:
            sources[name] = "config"
            return cfg.get_str(cfg_key)
        sources[name] = "default"
        return default

    command = pick("command", args.command, None, "run.command", None)
    if command is None:
        raise ConfigError("no command given (use --command or run.command)")
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    seed = pick("seed", args.seed, "NLARCH_SEED", "run.seed", None)
    if seed is not None and not isinstance(seed, int):
        seed = _parse_seed(seed, sources["seed"])
    if seed is None:
        # record a fresh seed so the run can be repeated
        seed = int(np.random.SeedSequence().entropy % 2**63)
        sources["seed"] = "generated"
    out = pick("out", args.out, "NLARCH_OUT", "run.out", ".")
    inp = pick("input", args.input, None, "run.input", None)
    verbosity = -1 if args.quiet else args.verbose
    return RunConfig(command, cfg, inp, str(out), seed, verbosity, sources)


# -- workflows ---------------------------------------------------------------

def _fit_spec(cfg: Config) -> FitSpec:
    base = FitSpec()
    kw = dict(
        p=cfg.get_int("fit.p", base.p), q=cfg.get_int("fit.q", base.q),
        gate=cfg.get_str("fit.gate", base.gate),
        innovation=cfg.get_str("fit.innovation", base.innovation),
        nm_maxiter=cfg.get_int("fit.nm_maxiter", base.nm_maxiter),
        gtol=cfg.get_float("fit.gtol", base.gtol),
        max_iter=cfg.get_int("fit.max_iter", base.max_iter),
    )
    fixed = {k: float(v) for k, v in cfg.section("fit.fixed").items()}
    init = {k: float(v) for k, v in cfg.section("fit.init").items()} or None
    try:
        return FitSpec(fixed=fixed, init=init, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _require_input(rc: RunConfig) -> str:
    if rc.input is None:
        raise ConfigError(f"{rc.command} needs --input (or run.input)")
    return rc.input


def _simulate(rc: RunConfig, out: Path, meta: dict) -> int:
    cfg = rc.config
    model = model_from_config(cfg)
    n = cfg.get_int("simulate.n", 2719)
    burn = cfg.get_int("simulate.burn_in", 1000)
    path = simulate(model, n, burn_in=burn, seed=rc.seed)
    target = out / "path.csv"
    path.to_csv(target)
    meta["outputs"].append(target.name)
    meta["model"] = model.to_dict()
    log.info("simulated %d observations -> %s", n, target)
    return 0


def _fit(rc: RunConfig, out: Path, meta: dict) -> int:
    spec = _fit_spec(rc.config)
    series = ingest_csv(_require_input(rc), min_rows=spec.p + spec.q + 2,
                        column=rc.config.get_int("fit.column", 1))
    meta["input"] = {"path": series.path, "rows": len(series), "dropped": series.dropped}
    if series.dropped:
        log.warning("dropped %d rows with missing values", series.dropped)
    res = fit(series.values, spec)
    res.to_json(out / "fit.json")
    res.write_series(out / "series.csv")
    meta["outputs"] += ["fit.json", "series.csv"]
    try:
        diag = residual_diagnostics(res, None, max_lag=rc.config.get_int("fit.max_lag", 100))
        meta["outputs"] += [p.name for p in diag.write_csvs(out)]
        _write_json(out / "diagnostics.json", diag.summary())
        meta["outputs"].append("diagnostics.json")
    except (ValueError, FloatingPointError) as exc:
        log.warning("diagnostics skipped: %s", exc)
    for name in param_names(spec):
        log.info("%-8s %12.5g  (%.3g)", name, res.estimates[name], res.standard_errors[name])
    log.info("loglik %.4f on %d observations", res.loglik, res.n_obs)
    if not res.converged:
        meta["error"] = {"category": "convergence",
                         "message": res.convergence.get("message", "")}
        log.error("optimizer did not converge; partial result written")
        return EXIT_CODES["convergence"]
    return 0


def _drift_params(cfg: Config) -> DriftParams:
    base = DriftParams()
    return DriftParams(
        s0=cfg.get_float("check.s0", base.s0), b=cfg.get_float("check.b", base.b),
        rho=cfg.get_float("check.rho", base.rho), s1=cfg.get_float("check.s1", base.s1),
        s2=cfg.get_float("check.s2", base.s2), delta=cfg.get_float("check.delta"))


def _check(rc: RunConfig, out: Path, meta: dict) -> int:
    cfg = rc.config
    model = model_from_config(cfg)
    params = _drift_params(cfg)
    params.validate_for(model)
    grid = None
    if any(k in cfg for k in ("check.M0", "check.span", "check.n_z1")):
        grid = default_drift_grid(model, M0=cfg.get_float("check.M0"),
                                  span=cfg.get_float("check.span", 1e3),
                                  n_z1=cfg.get_int("check.n_z1", 16),
                                  seed=rc.seed, params=params)
    rep = ergodicity_report(
        model, params, draws=cfg.get_int("check.draws", 100_000), seed=rc.seed,
        tune_weights=cfg.get_bool("check.tune_weights", True), grid=grid,
        petite_bound=cfg.get_float("check.petite_bound"),
        workers=cfg.get_int("check.workers", 1))
    (out / "report.json").write_text(rep.to_json())
    meta["outputs"].append("report.json")
    if rep.drift is not None:
        rep.drift.to_json(out / "drift.json")
        rep.drift.to_csv(out / "margins.csv")
        meta["outputs"] += ["drift.json", "margins.csv"]
    meta["model"] = model.to_dict()
    meta["verdict"] = rep.verdict
    log.info("verdict: %s (rate exponent %g, moment order %g)",
             rep.verdict, rep.rate_exponent, rep.moment_order)
    if rep.verdict.startswith("failed"):
        meta["error"] = {"category": "numeric", "message": rep.verdict}
        return EXIT_CODES["numeric"]
    return 0


def _diagnose(rc: RunConfig, out: Path, meta: dict) -> int:
    cfg = rc.config
    series = ingest_csv(_require_input(rc), min_rows=3,
                        column=cfg.get_int("diagnose.column", 1))
    meta["input"] = {"path": series.path, "rows": len(series), "dropped": series.dropped}
    x = series.values
    if cfg.get_bool("diagnose.standardize", False):
        sd = float(np.std(x))
        if not sd > 0:
            raise ConfigError("cannot standardize a constant series")
        x = (x - x.mean()) / sd
    if "model.innovation.kind" in cfg:
        innovation = model_from_config(cfg).innovation
    else:
        innovation = innovation_from_dict({"kind": "normal"})
    diag = residual_diagnostics(x, innovation, max_lag=cfg.get_int("diagnose.max_lag", 100))
    meta["outputs"] += [p.name for p in diag.write_csvs(out)]
    summary = dict(diag.summary(), innovation=innovation.to_dict())
    _write_json(out / "diagnostics.json", summary)
    meta["outputs"].append("diagnostics.json")
    log.info("%d of %d autocorrelations outside +-%.4f", diag.n_outside,
             summary["max_lag"], diag.band)
    return 0


_WORKFLOWS = {"simulate": _simulate, "fit": _fit, "check": _check, "diagnose": _diagnose}


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2))


def versions() -> dict:
    return {"nlarch": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def run(rc: RunConfig) -> int:
    """
    Execute one workflow and write its artifacts plus ``metadata.json``.

    Returns
    -------
    int
        Exit code; errors are caught, logged and categorized.
    """
    out = Path(rc.out)
    meta = {"command": rc.command, "seed": rc.seed, "config": rc.config.to_dict(),
            "config_file": rc.config.source, "input": rc.input, "sources": rc.sources,
            "versions": versions(), "outputs": [], "exit_code": None}
    t0 = time.perf_counter()
    code = EXIT_CODES["internal"]
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create output directory %s: %s", out, exc)
        return EXIT_CODES["config"]
    try:
        code = _WORKFLOWS[rc.command](rc, out, meta)
    except NLArchError as exc:
        code = EXIT_CODES[exc.category]
        meta["error"] = {"category": exc.category, "message": str(exc)}
        log.error("%s error: %s", exc.category, exc)
    except Exception as exc:  # noqa: BLE001  report and categorize unexpected failures
        meta["error"] = {"category": "internal", "message": repr(exc)}
        log.exception("unexpected failure")
    meta["exit_code"] = code
    meta["elapsed_seconds"] = time.perf_counter() - t0
    _write_json(out / "metadata.json", meta)
    return code


def _setup_logging(verbosity: int) -> None:
    level = {-1: logging.ERROR, 0: logging.WARNING, 1: logging.INFO}.get(
        verbosity, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s", force=True)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(-1 if args.quiet else args.verbose)
    try:
        rc = resolve(args)
    except NLArchError as exc:
        log.error("%s error: %s", exc.category, exc)
        return EXIT_CODES[exc.category]
    return run(rc)


if __name__ == "__main__":
    sys.exit(main())
