"""Sparsified pipeline: pre-cluster so every point is within delta * r(v) of
its representative, solve a weighted LP on the representatives only, lift
the solution back and round it with radii dilated by (1 + delta)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
import scipy.sparse as sp

from .errors import InfeasibleReducedLpError, PartitionBrokenError
from .filtering import FilterOutput, filter_points
from .lp import LpSolution, build_lp, cost_shares, solve_lp
from .metric import MetricInstance
from .rounding import DEFAULT_BETA, RoundedSolution, fair_round


@dataclass(frozen=True)
class SparsifyConfig:
    delta: float
    epsilon: float = 0.0
    backend: str = "simplex"
    beta: Union[float, str] = DEFAULT_BETA

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")


@dataclass
class SparsifyDiagnostics:
    reduced_n: int
    variable_count_full: int
    variable_count_reduced: int
    reduced_objective: float
    lifted_objective: float
    additive_term: float  # sum_v (delta r(v))^p
    phi_upper: float
    shortcut: bool = False
    filter_output: FilterOutput = field(default=None, repr=False)


def full_variable_count(inst: MetricInstance, radii) -> int:
    """Variables of the unreduced LP: admissible pairs plus one y per point."""
    radii = np.asarray(radii, dtype=float)
    return int(np.count_nonzero(inst.dist <= radii[:, None]) + inst.n)


def lift_solution(reduced_sol: LpSolution, S, D: dict, n: int) -> LpSolution:
    """Give every point the assignment row of its representative.

    ``reduced_sol`` is indexed 0..|S|-1 in the order of ``S``; the lifted
    solution is indexed by the original points.
    """
    S = np.asarray(S, dtype=np.intp)
    owner_pos = np.full(n, -1, dtype=np.intp)
    for pos, u in enumerate(S.tolist()):
        members = np.asarray(D[u], dtype=np.intp)
        if np.any(owner_pos[members] >= 0):
            raise PartitionBrokenError("D sets overlap")
        owner_pos[members] = pos
    if np.any(owner_pos < 0):
        raise PartitionBrokenError("D sets do not cover every point")

    m = S.size
    embed = sp.csr_matrix((np.ones(m), (np.arange(m), S)), shape=(m, n))  # reduced column -> global column
    assign = sp.csr_matrix((np.ones(n), (np.arange(n), owner_pos)), shape=(n, m))
    x = (assign @ reduced_sol.x.tocsr() @ embed).tocsr()
    y = np.zeros(n)
    y[S] = reduced_sol.y
    return LpSolution(x=x, y=y, objective=math.nan, status=reduced_sol.status, epsilon=reduced_sol.epsilon, backend=reduced_sol.backend)


def sparsify_and_round(
    inst: MetricInstance, radii, k: int, p: float, cfg: SparsifyConfig
) -> tuple[RoundedSolution, SparsifyDiagnostics, LpSolution]:
    """Returns the rounded solution, diagnostics and the lifted LP solution."""
    radii = np.asarray(radii, dtype=float)
    n = inst.n
    delta = cfg.delta

    # Filter covers v from u when d(u, v) <= 2 R(v); R = delta r / 2 keeps
    # every point within delta r(v) of its representative, which is what the
    # (1 + delta) dilation and the additive cost term rely on.
    filt = filter_points(inst, 0.5 * delta * radii)
    S = filt.S
    sizes = filt.sizes
    additive = float(math.fsum((delta * radii) ** p))
    var_full = full_variable_count(inst, radii)

    if len(S) <= k:
        # every representative can be opened outright: d(v, S) <= delta r(v)
        lifted = lift_solution(_open_all(len(S)), S, filt.D, n)
        C = cost_shares(inst, lifted.x, p)
        lifted.objective = float(math.fsum(C))
        rounded = RoundedSolution(
            T=sorted(S), S=S, beta=math.inf, C=C, R=0.5 * delta * radii, shortcut=True, filter_output=filt
        )
        diag = SparsifyDiagnostics(
            reduced_n=len(S),
            variable_count_full=var_full,
            variable_count_reduced=0,  # no LP is built
            reduced_objective=0.0,
            lifted_objective=lifted.objective,
            additive_term=additive,
            phi_upper=math.inf,
            shortcut=True,
            filter_output=filt,
        )
        return rounded, diag, lifted

    sub = inst.subset(S)
    model = build_lp(sub, radii[S], k, p, weights=sizes)
    reduced = solve_lp(model, cfg.epsilon, cfg.backend)
    if not reduced.feasible:
        raise InfeasibleReducedLpError("LP on the representatives is infeasible")

    lifted = lift_solution(reduced, S, filt.D, n)
    lifted.objective = float(math.fsum(cost_shares(inst, lifted.x, p)))
    rounded = fair_round(inst, (1.0 + delta) * radii, lifted, k, p, cfg.beta)
    phi_upper = (math.fsum(radii**p) ** (1.0 / p)) / reduced.objective ** (1.0 / p) if reduced.objective > 0 else math.inf
    diag = SparsifyDiagnostics(
        reduced_n=len(S),
        variable_count_full=var_full,
        variable_count_reduced=model.variable_count,
        reduced_objective=reduced.objective,
        lifted_objective=lifted.objective,
        additive_term=additive,
        phi_upper=phi_upper,
        filter_output=filt,
    )
    return rounded, diag, lifted


def _open_all(m: int) -> LpSolution:
    return LpSolution(x=sp.identity(m, format="csr"), y=np.ones(m), objective=0.0, status="OPTIMAL", backend="trivial")
