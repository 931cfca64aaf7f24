#!/usr/bin/env python3
"""Full LP + rounding against the sparsified pipeline for several delta."""

import argparse
import math
import time

import numpy as np

from fairclust import build_instance, build_lp, fair_radii, fair_round, gaussian_mixture, solve_lp
from fairclust.errors import InfeasibleReducedLpError
from fairclust.metric import distances_to
from fairclust.sparsify import SparsifyConfig, sparsify_and_round


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--deltas", default="0.01,0.05,0.3,1.0")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    inst = build_instance(points=gaussian_mixture(args.n, seed=args.seed))
    k, p = args.k, args.p
    r = fair_radii(inst, k)

    t0 = time.perf_counter()
    model = build_lp(inst, r, k, p)
    sol = solve_lp(model)
    rs = fair_round(inst, r, sol, k, p)
    t_full = time.perf_counter() - t0
    d = distances_to(inst, rs.T)
    print(f"{'delta':>7}{'reps':>6}{'vars':>9}{'sec':>8}{'cost':>12}{'max_viol':>10}")
    print(f"{'full':>7}{inst.n:>6}{model.variable_count:>9}{t_full:>8.3f}{math.fsum(d**p) ** (1 / p):>12.4f}{np.max(d / r):>10.3f}")
    for delta in map(float, args.deltas.split(",")):
        t0 = time.perf_counter()
        try:
            rs, diag, _ = sparsify_and_round(inst, r, k, p, SparsifyConfig(delta))
        except InfeasibleReducedLpError:
            # centers are restricted to the representatives, which can be too sparse
            print(f"{delta:>7g}  reduced LP infeasible")
            continue
        t = time.perf_counter() - t0
        d = distances_to(inst, rs.T)
        print(
            f"{delta:>7g}{diag.reduced_n:>6}{diag.variable_count_reduced:>9}{t:>8.3f}"
            f"{math.fsum(d**p) ** (1 / p):>12.4f}{np.max(d / r):>10.3f}"
        )


if __name__ == "__main__":
    main()
