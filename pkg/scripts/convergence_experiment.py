#!/usr/bin/env python3
"""Grid-refinement study of the fitted convergence rate.

Runs the spike-seeded semigroup convergence experiment on the single-well
system for a sequence of grids and reports how the fitted rate moves as
the resolution doubles (reported, not asserted: the increments shrink in
a Cauchy-like fashion but no continuum limit is claimed).

Usage: python scripts/convergence_experiment.py [--grids 128,256,512]
                                                [--eps 0.0] [--out FILE]
"""
import argparse

from weakkam import Grid, LagrangianSystem, run_convergence
from weakkam.reporting import write_csv


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--grids", default="128,256,512")
    parser.add_argument("--eps", type=float, default=0.0)
    parser.add_argument("--kmax", type=int, default=60)
    parser.add_argument("--out", default="convergence_rates.csv")
    args = parser.parse_args()

    sys = LagrangianSystem(family="mechanical-cos", eps=args.eps)
    rows = []
    previous_mu = None
    for n in (int(tok) for tok in args.grids.split(",")):
        report = run_convergence(sys, Grid(n), u0_tag="spike", k_max=args.kmax)
        increment = None if previous_mu is None or report.mu is None \
            else report.mu - previous_mu
        previous_mu = report.mu
        rows.append((n, report.c, report.mu, report.r2, report.lam,
                     report.ratio, report.kstar, increment))
        print(f"n={n}: mu={report.mu} r2={report.r2} ratio={report.ratio} "
              f"increment={increment}")
    write_csv(args.out, ("n", "c", "mu", "r2", "lambda", "mu_over_lambda",
                         "kstar", "mu_increment"), rows)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
