"""Simulate the fitted energy-volatility model, refit it and compare."""

import argparse

from nlarch import empirical_model, fit, residual_diagnostics, simulate
from nlarch.model import REFERENCE_ESTIMATES


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2719, help="observations to simulate")
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    path = simulate(empirical_model(), args.n, seed=args.seed)
    print(f"simulated {path.n} observations, range [{path.y.min():.2f}, {path.y.max():.2f}]")

    res = fit(path.y)
    print(f"loglik {res.loglik:.2f}, converged {res.converged}, {res.elapsed:.1f} s")
    print(f"{'param':>8} {'true':>8} {'estimate':>9} {'se':>7}")
    for name in res.spec.free:
        print(f"{name:>8} {REFERENCE_ESTIMATES[name]:8.3f} {res.estimates[name]:9.3f} "
              f"{res.standard_errors[name]:7.3f}")

    diag = residual_diagnostics(res, None)
    print(f"residual ACF: {diag.n_outside} of 100 lags outside +-{diag.band:.4f}")


if __name__ == "__main__":
    main()
