#!/usr/bin/env python3
"""Stand-alone LP solver speaking the solver-exchange format.

    highs_exchange_solver.py PROBLEM SOLUTION [--method highs-ds|highs-ipm|dense]

Reads the problem file, rebuilds the constraints from the support lines
and writes a solution file. Usable as ``--backend "external:python3
scripts/highs_exchange_solver.py"``.
"""

import argparse
import sys

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from fairclust.exchange import read_problem, write_solution
from fairclust.simplex import linprog_dense


def constraints(prob):
    n, m = prob.n, prob.rows.size
    pos = np.arange(m)
    # cover: sum_u x_vu = 1
    a_cover = sp.csr_matrix((np.ones(m), (prob.rows, pos)), shape=(n, m + n))
    # budget: sum_u y_u = k
    a_budget = sp.csr_matrix((np.ones(n), (np.zeros(n, dtype=int), m + np.arange(n))), shape=(1, m + n))
    # open: x_vu - y_u <= 0
    a_open = sp.csr_matrix(
        (np.concatenate([np.ones(m), -np.ones(m)]), (np.concatenate([pos, pos]), np.concatenate([pos, m + prob.cols]))),
        shape=(m, m + n),
    )
    a_eq = sp.vstack([a_cover, a_budget]).tocsr()
    b_eq = np.concatenate([np.ones(n), [float(prob.k)]])
    return a_eq, b_eq, a_open, np.zeros(m)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("problem")
    ap.add_argument("solution")
    ap.add_argument("--method", default="highs-ds", choices=("highs-ds", "highs-ipm", "dense"))
    args = ap.parse_args(argv)

    prob = read_problem(args.problem)
    m, n = prob.rows.size, prob.n
    c = np.concatenate([prob.coeffs, np.zeros(n)])
    a_eq, b_eq, a_ub, b_ub = constraints(prob)
    if args.method == "dense":
        res = linprog_dense(c, a_eq.toarray(), b_eq, a_ub.toarray(), b_ub, np.ones(m + n))
        if res.status == "infeasible":
            write_solution(args.solution, [], [], "INFEASIBLE")
            return 0
        if res.status != "optimal":
            print(f"dense simplex: {res.status}", file=sys.stderr)
            return 1
        z = res.z
    else:
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=(0.0, 1.0), method=args.method)
        if res.status == 2:
            write_solution(args.solution, [], [], "INFEASIBLE")
            return 0
        if res.status != 0:
            print(res.message, file=sys.stderr)
            return 1
        z = res.x
    x = zip(prob.rows.tolist(), prob.cols.tolist(), z[:m].tolist())
    write_solution(args.solution, z[m:], ((v, u, w) for v, u, w in x if w != 0.0))
    return 0


if __name__ == "__main__":
    sys.exit(main())
