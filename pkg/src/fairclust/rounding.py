"""Fair-Round: turn a fractional LP solution into at most k fair centers.

Pipeline: cost-aware radii -> Filter -> (return early if |S| <= k) ->
move y mass onto S -> cap y at 1 -> half-integralize -> parity selection on
the nearest-neighbour forest of S.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

import numpy as np

from .errors import (
    InfeasibleInstanceError,
    MassMismatchError,
    NoFeasibleBetaError,
    NonTerminationError,
    NumericalFailureError,
    SingletonSError,
)
from .filtering import FilterOutput, filter_points
from .lp import LpSolution, cost_shares
from .metric import MetricInstance, nearest_index_map

LOOP_TOL = 1e-9
FINAL_TOL = 1e-6
DEFAULT_BETA = 2.0
ROOT = -1

BETA_MIN = 2.0**-20
BETA_CAP = 2.0**30
BETA_REL_TOL = 1e-3


def shrunk_radii(radii, C, p: float, beta: float = DEFAULT_BETA) -> np.ndarray:
    """R(v) = min(r(v), (beta * C_v)^(1/p))."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    radii = np.asarray(radii, dtype=float)
    C = np.maximum(np.asarray(C, dtype=float), 0.0)
    if math.isinf(beta):
        return radii.copy()
    return np.minimum(radii, (beta * C) ** (1.0 / p))


def redistribute_y(inst: MetricInstance, S, y) -> np.ndarray:
    """Move the y mass of every point outside S onto its closest point of S."""
    y = np.asarray(y, dtype=float)
    S = np.asarray(S, dtype=np.intp)
    target = nearest_index_map(inst, S)
    target[S] = S
    out = np.zeros_like(y)
    # per-target compensated sums so total mass is conserved to the last bit we can
    order = np.argsort(target, kind="stable")
    bounds = np.flatnonzero(np.diff(target[order])) + 1
    for grp in np.split(order, bounds):
        out[target[grp[0]]] = math.fsum(y[grp])
    return out


def cap_y(y, k: int, labels=None) -> np.ndarray:
    """Shift mass from entries above 1 to entries below 1 until none exceeds 1.

    ``labels`` are the point indices of the entries (tie-breaking only).
    Donor: largest excess, smallest label on ties. Receiver: smallest label
    among entries below 1.
    """
    y = np.array(y, dtype=float)
    labels = np.arange(y.size) if labels is None else np.asarray(labels)
    if abs(math.fsum(y) - k) > FINAL_TOL:
        raise MassMismatchError(f"sum y = {math.fsum(y)!r}, expected {k}")
    by_label = np.argsort(labels, kind="stable")
    for _ in range(2 * y.size + 1):
        over = np.flatnonzero(y > 1.0 + LOOP_TOL)
        under = by_label[y[by_label] < 1.0 - LOOP_TOL]
        if over.size == 0 or under.size == 0:
            break
        exc = y[over] - 1.0
        cand = over[exc == exc.max()]
        u = int(cand[np.argmin(labels[cand])])
        v = int(under[0])
        delta = min(1.0 - y[v], y[u] - 1.0)
        y[u] -= delta
        y[v] += delta
        for w in (u, v):
            if abs(y[w] - 1.0) <= LOOP_TOL:
                y[w] = 1.0
    else:
        raise NonTerminationError("capping did not converge")
    return y


def surrogate_objective(y, costs) -> float:
    """sum_u cost_u * (1 - y_u): what the half-integral loop never increases."""
    return float(np.dot(np.asarray(costs, dtype=float), 1.0 - np.asarray(y, dtype=float)))


def half_integral_steps(y, costs, labels=None) -> Iterator[np.ndarray]:
    """Yield y after every transfer of the half-integralization loop.

    A transfer moves mass from u (1/2 < y_u < 1) to v (y_v < 1) when
    cost_v > cost_u, or when the costs are equal and u has the larger label.
    Mass thus flows towards the point whose closure would be more expensive,
    so sum_u cost_u * (1 - y_u) never increases. The pair with the largest
    cost gap goes first, then smallest labels.
    """
    y = np.array(y, dtype=float)
    costs = np.asarray(costs, dtype=float)
    labels = np.arange(y.size) if labels is None else np.asarray(labels)
    m = y.size
    gap = costs[None, :] - costs[:, None]  # gap[u, v] = cost_v - cost_u
    eligible_order = (gap > 0) | ((gap == 0) & (labels[:, None] > labels[None, :]))
    # rank of every (u, v) for deterministic selection: larger gap first, then labels
    pair_key = np.lexsort(
        (
            np.broadcast_to(labels[None, :], (m, m)).ravel(),
            np.broadcast_to(labels[:, None], (m, m)).ravel(),
            -gap.ravel(),
        )
    )
    rank = np.empty(m * m, dtype=np.intp)
    rank[pair_key] = np.arange(m * m)
    rank = rank.reshape(m, m)

    limit = 4 * m * m
    for it in range(limit + 1):
        donor = (y > 0.5 + LOOP_TOL) & (y < 1.0 - LOOP_TOL)
        recv = y < 1.0 - LOOP_TOL
        valid = donor[:, None] & recv[None, :] & eligible_order
        if not valid.any():
            return
        if it == limit:
            raise NonTerminationError(f"half-integralization exceeded {limit} transfers")
        flat = np.where(valid, rank, m * m)
        u, v = divmod(int(np.argmin(flat)), m)
        delta = min(1.0 - y[v], y[u] - 0.5)
        y[u] -= delta
        y[v] += delta
        if abs(y[v] - 1.0) <= LOOP_TOL:
            y[v] = 1.0
        if abs(y[u] - 0.5) <= LOOP_TOL:
            y[u] = 0.5
        yield y.copy()


def half_integralize_costs(y, costs, labels=None) -> np.ndarray:
    out = np.array(y, dtype=float)
    for out in half_integral_steps(y, costs, labels):
        pass
    return out


def delegation_costs(inst: MetricInstance, S, sizes, nearest_other, p: float) -> np.ndarray:
    """|D(u)| * d(u, S_u)^p for u in S."""
    S = np.asarray(S, dtype=np.intp)
    return np.asarray(sizes, dtype=float) * inst.dist[S, np.asarray(nearest_other, dtype=np.intp)] ** p


def half_integralize(inst: MetricInstance, S, y, D, nearest_other, p: float) -> np.ndarray:
    """Drive y (aligned with S) to values in {1/2, 1} without raising the delegation cost."""
    sizes = [len(D[u]) for u in S]
    return half_integralize_costs(y, delegation_costs(inst, S, sizes, nearest_other, p), labels=S)


@dataclass
class ForestStructure:
    parent: dict[int, int]
    level: dict[int, int]
    nearest_other: dict[int, int]

    def edges(self) -> set[frozenset]:
        return {frozenset((u, w)) for u, w in self.parent.items() if w != ROOT}


def build_forest(inst: MetricInstance, S) -> ForestStructure:
    """Rooted forest on S with edges {u, S_u}, S_u the closest other member of S."""
    S = sorted(int(u) for u in S)
    if len(S) < 2:
        raise SingletonSError("forest needs at least two representatives")
    idx = np.asarray(S, dtype=np.intp)
    sub = inst.dist[np.ix_(idx, idx)].copy()
    np.fill_diagonal(sub, np.inf)
    nn_pos = np.argmin(sub, axis=1)  # first minimum = smallest index, S is sorted
    nearest = {S[i]: S[int(j)] for i, j in enumerate(nn_pos)}

    adj: dict[int, list[int]] = {u: [] for u in S}
    for u, w in nearest.items():
        if nearest[w] != u or u < w:
            adj[u].append(w)
            adj[w].append(u)

    # every component of the functional graph u -> S_u has exactly one cycle
    state: dict[int, int] = {}
    mutual = set()
    for start in S:
        path = []
        u = start
        while u not in state:
            state[u] = 1
            path.append(u)
            u = nearest[u]
        if state[u] == 1:  # closed a new cycle
            cycle = path[path.index(u) :]
            if len(cycle) != 2:
                raise NumericalFailureError(f"nearest-neighbour cycle of length {len(cycle)}: {cycle}")
            mutual.add((min(cycle), max(cycle)))
        for w in path:
            state[w] = 2

    parent: dict[int, int] = {}
    level: dict[int, int] = {}
    for a, _b in sorted(mutual):
        root = a
        parent[root] = ROOT
        level[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w in sorted(adj[u]):
                if w not in level:
                    level[w] = level[u] + 1
                    parent[w] = u
                    queue.append(w)
    if len(level) != len(S):
        raise NumericalFailureError("forest does not span S")
    return ForestStructure(parent=parent, level=level, nearest_other=nearest)


def parity_select(S, y, forest: ForestStructure) -> tuple[list[int], list[int], list[int]]:
    """Return (T, E, O): opened-at-1 points plus the smaller parity class.

    E and O are the even / odd level points of S with y < 1; E wins ties.
    """
    S = [int(u) for u in S]
    y = np.asarray(y, dtype=float)
    opened = [u for u, val in zip(S, y) if val >= 1.0 - FINAL_TOL]
    rest = [u for u, val in zip(S, y) if val < 1.0 - FINAL_TOL]
    even = [u for u in rest if forest.level[u] % 2 == 0]
    odd = [u for u in rest if forest.level[u] % 2 == 1]
    chosen = even if len(even) <= len(odd) else odd
    return sorted(opened + chosen), even, odd


@dataclass
class RoundedSolution:
    T: list[int]
    S: list[int]
    beta: float
    C: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)
    shortcut: bool
    y_trace: dict[str, np.ndarray] = field(default_factory=dict, repr=False)  # aligned with S
    forest: Optional[ForestStructure] = field(default=None, repr=False)
    filter_output: Optional[FilterOutput] = field(default=None, repr=False)
    beta_star: Optional[float] = None


def filter_count(inst: MetricInstance, radii, C, p: float, beta: float) -> int:
    return len(filter_points(inst, shrunk_radii(radii, C, p, beta)).S)


def beta_search(
    inst: MetricInstance,
    radii,
    C,
    k: int,
    p: float,
    rel_tol: float = BETA_REL_TOL,
    beta_min: float = BETA_MIN,
    beta_cap: float = BETA_CAP,
) -> float:
    """Smallest beta on the grid beta_min * (1 + rel_tol)^j with |Filter S| <= k.

    On return, Filter at beta gives at most k representatives and, unless
    beta == beta_min, Filter at the previous grid point (beta / (1 + rel_tol))
    was evaluated and gave more than k.
    """
    if filter_count(inst, radii, C, p, math.inf) > k:
        raise NoFeasibleBetaError("Filter with R = r already yields more than k representatives")

    def grid(j):
        return beta_min * (1.0 + rel_tol) ** j

    def ok(j):
        return filter_count(inst, radii, C, p, grid(j)) <= k

    if ok(0):
        return grid(0)
    hi = 2.0
    while filter_count(inst, radii, C, p, hi) > k:
        hi *= 2.0
        if hi > beta_cap:
            raise NoFeasibleBetaError(f"no beta <= {beta_cap:g} gives at most {k} representatives")
    j_hi = math.ceil(math.log(hi / beta_min) / math.log1p(rel_tol))
    while not ok(j_hi):  # only if |S| is not monotone in beta
        j_hi += 1
    j_lo = 0
    while j_hi - j_lo > 1:
        mid = (j_lo + j_hi) // 2
        if ok(mid):
            j_hi = mid
        else:
            j_lo = mid
    return grid(j_hi)


def fair_round(
    inst: MetricInstance,
    radii,
    lp_sol: LpSolution,
    k: int,
    p: float,
    beta: Union[float, str] = DEFAULT_BETA,
) -> RoundedSolution:
    """Round a feasible LP solution into at most k centers.

    With ``beta="search"`` the constant in the shrunk radii is the smallest
    one for which Filter already returns at most k representatives, capped
    at 2 so the worst-case guarantees are unchanged.
    """
    if not lp_sol.feasible:
        raise InfeasibleInstanceError("LP solution is infeasible")
    radii = np.asarray(radii, dtype=float)
    C = cost_shares(inst, lp_sol.x, p)

    beta_star = None
    if beta == "search":
        beta_star = beta_search(inst, radii, C, k, p)
        beta = min(beta_star, DEFAULT_BETA)
    beta = float(beta)

    R = shrunk_radii(radii, C, p, beta)
    filt = filter_points(inst, R)
    S = filt.S
    if len(S) <= k:
        return RoundedSolution(T=sorted(S), S=S, beta=beta, C=C, R=R, shortcut=True, filter_output=filt, beta_star=beta_star)

    trace: dict[str, np.ndarray] = {}
    y_full = redistribute_y(inst, S, lp_sol.y)
    idx = np.asarray(S, dtype=np.intp)
    y = y_full[idx]
    trace["move_rest"] = y.copy()
    _check_mass(y, k, "move_rest")

    y = cap_y(y, k, labels=idx)
    trace["smudge"] = y.copy()
    _check_mass(y, k, "smudge")
    if y.min() < 0.5 - FINAL_TOL or y.max() > 1.0 + FINAL_TOL:
        raise NumericalFailureError(f"capped y outside [1/2, 1]: [{y.min()!r}, {y.max()!r}]")

    forest = build_forest(inst, S)
    nearest = [forest.nearest_other[u] for u in S]
    y = half_integralize(inst, S, y, filt.D, nearest, p)
    trace["halfint"] = y.copy()
    _check_mass(y, k, "halfint")
    off = np.minimum(np.abs(y - 0.5), np.abs(y - 1.0))
    if off.max() > FINAL_TOL:
        raise NumericalFailureError("y not half-integral after the half-integral loop")

    T, _, _ = parity_select(S, y, forest)
    if not 1 <= len(T) <= k:
        raise NumericalFailureError(f"|T| = {len(T)} outside [1, {k}]")
    return RoundedSolution(
        T=T, S=S, beta=beta, C=C, R=R, shortcut=False, y_trace=trace, forest=forest, filter_output=filt, beta_star=beta_star
    )


def _check_mass(y, k, phase):
    total = math.fsum(y)
    if abs(total - k) > FINAL_TOL:
        raise MassMismatchError(f"sum y = {total!r} after {phase}, expected {k}")
