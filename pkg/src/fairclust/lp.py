"""The fairness-constrained clustering LP: build, solve, validate.

Variables are y_u (opening) for every point and x_vu (assignment) only for
pairs with d(v, u) <= r(v); the radius constraint is enforced by never
creating the other variables.

    min   sum_vu w_v d(v,u)^p x_vu
    s.t.  sum_u x_vu = 1          for every v      (cover)
          sum_u y_u  = k                            (budget)
          x_vu <= y_u                               (open)
          0 <= x, y <= 1
"""

from __future__ import annotations

import math
import os
import shlex
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from . import exchange
from .errors import (
    BackendUnavailableError,
    InfinitePNormError,
    KOutOfRangeError,
    LengthMismatchError,
    NumericalFailureError,
)
from .metric import MetricInstance
from .simplex import linprog_dense

OPTIMAL = "OPTIMAL"
APPROX = "APPROX"
INFEASIBLE = "INFEASIBLE"

FEAS_TOL = 1e-6
DENSE_MAX_VARS = 4000


@dataclass(frozen=True, eq=False)
class LpModel:
    n: int
    k: int
    p: float
    radii: np.ndarray
    weights: np.ndarray
    # support pattern in CSR form: row v holds the admissible centers of v
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    dpow: np.ndarray = field(repr=False)  # d(v,u)^p per support entry

    @property
    def costs(self) -> np.ndarray:
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return self.weights[rows] * self.dpow

    @property
    def num_x(self) -> int:
        return int(self.indices.size)

    @property
    def variable_count(self) -> int:
        return self.num_x + self.n

    def support(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def support_sizes(self) -> np.ndarray:
        return np.diff(self.indptr)

    def pattern(self, values=None) -> sp.csr_matrix:
        data = np.ones(self.num_x) if values is None else np.array(values, dtype=float)
        # copies: scipy may otherwise alias (and later mutate) the model's index arrays
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()), shape=(self.n, self.n))


@dataclass
class LpSolution:
    x: Optional[sp.csr_matrix]
    y: Optional[np.ndarray]
    objective: float
    status: str
    epsilon: float = 0.0
    backend: str = ""
    message: str = ""

    @property
    def feasible(self) -> bool:
        return self.status != INFEASIBLE


def build_lp(inst: MetricInstance, radii, k: int, p: float, weights=None) -> LpModel:
    n = inst.n
    p = float(p)
    if math.isinf(p):
        raise InfinitePNormError("LP rounding is not defined for p = inf")
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if not 1 <= k <= n:
        raise KOutOfRangeError(f"k={k} outside [1, {n}]")
    radii = np.asarray(radii, dtype=float)
    if radii.shape != (n,):
        raise LengthMismatchError("radii length differs from n")
    if weights is None:
        weights = np.ones(n)
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (n,):
            raise LengthMismatchError("weights length differs from n")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")

    mask = inst.dist <= radii[:, None]
    mask[np.diag_indices(n)] = True
    rows, cols = np.nonzero(mask)  # row-major, so already CSR-ordered
    indptr = np.zeros(n + 1, dtype=np.intp)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    dpow = inst.dist[rows, cols] ** p
    for a in (radii, weights, indptr, cols, dpow):
        a.setflags(write=False)
    return LpModel(n=n, k=int(k), p=p, radii=radii, weights=weights, indptr=indptr, indices=cols, dpow=dpow)


def _constraint_matrices(model: LpModel):
    n, m = model.n, model.num_x
    rows = np.repeat(np.arange(n), model.support_sizes())
    a_eq = sp.vstack(
        [
            sp.csr_matrix((np.ones(m), (rows, np.arange(m))), shape=(n, m + n)),
            sp.csr_matrix((np.ones(n), (np.zeros(n, dtype=np.intp), m + np.arange(n))), shape=(1, m + n)),
        ]
    ).tocsr()
    b_eq = np.concatenate([np.ones(n), [float(model.k)]])
    ar = np.arange(m)
    a_ub = sp.csr_matrix(
        (np.concatenate([np.ones(m), -np.ones(m)]), (np.concatenate([ar, ar]), np.concatenate([ar, m + model.indices]))),
        shape=(m, m + n),
    )
    return a_eq, b_eq, a_ub, np.zeros(m)


def _package(model: LpModel, xvals, y, status, eps, backend, message="") -> LpSolution:
    xvals = np.clip(np.asarray(xvals, dtype=float), 0.0, 1.0)
    y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
    x = model.pattern(xvals)
    x.eliminate_zeros()
    objective = float(math.fsum(model.costs * xvals))
    return LpSolution(x=x, y=y, objective=objective, status=status, epsilon=eps, backend=backend, message=message)


def trivial_solution(model: LpModel) -> LpSolution:
    """k = n: open everything, everyone serves itself."""
    n = model.n
    x = sp.identity(n, format="csr", dtype=float)
    return LpSolution(x=x, y=np.ones(n), objective=0.0, status=OPTIMAL, backend="trivial")


def solve_lp(model: LpModel, epsilon: float = 0.0, backend: str = "simplex") -> LpSolution:
    """Solve the model.

    Backends: ``simplex`` (HiGHS dual simplex, exact), ``ipm`` (HiGHS
    interior point; epsilon sets the optimality gap), ``dense`` (built-in
    tableau simplex, small models only) and ``external:CMD`` (any program
    speaking the solver-exchange format).
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if model.k == model.n:
        return trivial_solution(model)

    if backend.startswith("external:"):
        return _solve_external(model, backend[len("external:") :], epsilon)
    if backend == "dense":
        return _solve_dense(model)
    if backend not in ("simplex", "ipm"):
        raise BackendUnavailableError(f"unknown backend {backend!r}")

    a_eq, b_eq, a_ub, b_ub = _constraint_matrices(model)
    c = np.concatenate([model.costs, np.zeros(model.n)])
    options = {"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9}
    if backend == "ipm":
        method = "highs-ipm"
        options["ipm_optimality_tolerance"] = min(max(epsilon, 1e-12), 1e-1) if epsilon > 0 else 1e-8
    else:
        method = "highs-ds"
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=(0.0, 1.0), method=method, options=options)
    if res.status == 2:
        return LpSolution(None, None, math.nan, INFEASIBLE, epsilon, backend, res.message)
    if res.status != 0:
        raise NumericalFailureError(f"HiGHS status {res.status}: {res.message}")
    status = OPTIMAL if backend == "simplex" else APPROX
    m = model.num_x
    return _package(model, res.x[:m], res.x[m:], status, epsilon, backend)


def _solve_dense(model: LpModel) -> LpSolution:
    if model.variable_count > DENSE_MAX_VARS:
        raise BackendUnavailableError(f"dense backend limited to {DENSE_MAX_VARS} variables")
    a_eq, b_eq, a_ub, b_ub = _constraint_matrices(model)
    c = np.concatenate([model.costs, np.zeros(model.n)])
    upper = np.concatenate([np.full(model.num_x, np.inf), np.ones(model.n)])  # x <= 1 follows from cover
    res = linprog_dense(c, a_eq.toarray(), b_eq, a_ub.toarray(), b_ub, upper)
    if res.status == "infeasible":
        return LpSolution(None, None, math.nan, INFEASIBLE, 0.0, "dense", "phase I optimum > 0")
    if res.status != "optimal":
        raise NumericalFailureError(f"dense simplex: {res.status}")
    m = model.num_x
    return _package(model, res.z[:m], res.z[m:], OPTIMAL, 0.0, "dense")


def _solve_external(model: LpModel, command: str, epsilon: float) -> LpSolution:
    argv = shlex.split(command)
    if not argv or shutil.which(argv[0]) is None and not os.path.exists(argv[0]):
        raise BackendUnavailableError(f"external solver not found: {command!r}")
    with tempfile.TemporaryDirectory(prefix="fairlp-") as tmp:
        prob = os.path.join(tmp, "problem.txt")
        solf = os.path.join(tmp, "solution.txt")
        exchange.write_problem(model, prob)
        proc = subprocess.run(argv + [prob, solf], capture_output=True, text=True)
        if proc.returncode != 0:
            raise NumericalFailureError(f"external solver exited {proc.returncode}: {proc.stderr.strip()}")
        status, xd, y = exchange.read_solution(solf, model.n)
    if status == INFEASIBLE:
        return LpSolution(None, None, math.nan, INFEASIBLE, epsilon, "external", "reported by external solver")
    xvals = np.zeros(model.num_x)
    for (v, u), val in xd.items():
        seg = model.support(v)
        j = np.searchsorted(seg, u)
        if j >= seg.size or seg[j] != u:
            raise NumericalFailureError(f"external solution uses x[{v},{u}] outside the support")
        xvals[model.indptr[v] + j] = val
    return _package(model, xvals, y, OPTIMAL if epsilon == 0 else APPROX, epsilon, "external")


def cost_shares(inst: MetricInstance, x: sp.csr_matrix, p: float) -> np.ndarray:
    """C_v = sum_u d(v,u)^p x_vu for any (possibly lifted) assignment matrix."""
    coo = x.tocoo()
    contrib = inst.dist[coo.row, coo.col] ** p * coo.data
    C = np.zeros(inst.n)
    np.add.at(C, coo.row, contrib)
    return C


def per_point_cost(model: LpModel, sol: LpSolution) -> np.ndarray:
    """Unweighted LP cost share of each client under ``sol``."""
    x = sol.x.tocsr()
    dp = model.pattern(model.dpow)
    return np.asarray(dp.multiply(x).sum(axis=1)).ravel()


@dataclass
class Residuals:
    cover: float
    budget: float
    open: float
    bounds: float
    support: float
    objective: float
    ball_mass: float  # max_v (1 - y(B(v, r(v)))), <= 0 when the radius fact holds

    def ok(self, tol: float = FEAS_TOL) -> bool:
        return max(self.cover, self.budget, self.open, self.bounds, self.support, self.ball_mass, self.objective) <= tol


def validate_solution(model: LpModel, sol: LpSolution, tol: float = FEAS_TOL) -> Residuals:
    """Recompute constraint residuals of ``sol`` against ``model``.

    The objective entry is relative: |reported - recomputed| / max(1, |recomputed|).
    """
    x = sol.x.tocsr()
    y = np.asarray(sol.y, dtype=float)
    n = model.n
    cover = float(np.max(np.abs(np.asarray(x.sum(axis=1)).ravel() - 1.0)))
    budget = float(abs(y.sum() - model.k))
    coo = x.tocoo()
    open_ = float(np.max(coo.data - y[coo.col], initial=0.0))
    bounds = float(
        max(
            np.max(-coo.data, initial=0.0),
            np.max(coo.data - 1.0, initial=0.0),
            np.max(-y, initial=0.0),
            np.max(y - 1.0, initial=0.0),
        )
    )
    pat = model.pattern()
    outside = x - x.multiply(pat)
    support = float(np.max(np.abs(outside.data), initial=0.0))
    dp = model.pattern(model.costs)
    recomputed = float(dp.multiply(x).sum())
    objective = abs(recomputed - sol.objective) / max(1.0, abs(recomputed))
    ball = np.asarray(pat @ y).ravel() if n else np.zeros(0)
    ball_mass = float(np.max(1.0 - ball, initial=-np.inf))
    return Residuals(cover, budget, open_, bounds, support, objective, ball_mass)
