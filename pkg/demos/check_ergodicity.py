"""Certify the drift condition for the fitted model and show the weight scan."""

import argparse

from nlarch import DriftParams, empirical_model, ergodicity_report
from nlarch.stability import default_drift_grid


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--draws", type=int, default=100_000, help="Monte Carlo draws per point")
    ap.add_argument("--m0", type=float, default=11.71, help="smallest |z1| on the grid")
    ap.add_argument("--zmax", type=float, default=1306.1, help="largest |z1| on the grid")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    model = empirical_model()
    params = DriftParams(s0=1.0, b=1.0, rho=1.0)
    grid = default_drift_grid(model, M0=args.m0, span=args.zmax / args.m0, seed=args.seed,
                              params=params)
    rep = ergodicity_report(model, params, draws=args.draws, seed=args.seed,
                            tune_weights=True, grid=grid)
    print(f"verdict: {rep.verdict}")
    print(f"rate exponent {rep.rate_exponent:g}, moment order {rep.moment_order:g}")
    if rep.drift is not None:
        d = rep.drift
        print(f"{len(grid)} grid points; chosen s1={d.params.s1:g}, s2={d.params.s2:g}, "
              f"N={d.petite_bound:.4g}, e~={d.e_tilde:.3g}, b~={d.b_tilde:.4g}")
        print("weight scan:")
        for row in d.sensitivity:
            print(f"  s1={row['s1']:<8g} s2={row['s2']:<8g} {row['verdict']}")


if __name__ == "__main__":
    main()
