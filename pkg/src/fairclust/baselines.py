"""Comparison baselines and an exhaustive oracle for tiny instances."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import KOutOfRangeError, TooLargeError
from .filtering import filter_points
from .metric import MetricInstance, lp_norm

ORACLE_MAX_N = 16
ORACLE_MAX_SETS = 200_000


def plesnik_baseline(inst: MetricInstance, radii) -> list[int]:
    """Filter with R = r: every point gets a center within 2 r(v).

    The caller compares len(result) with k; more than k representatives
    certifies that no center set of size k meets the radii exactly.
    """
    return sorted(filter_points(inst, radii).S)


@dataclass
class OracleResult:
    feasible: bool
    opt_cost: Optional[float]
    opt_centers: Optional[tuple[int, ...]]
    sets_examined: int


def brute_force_opt(inst: MetricInstance, radii, k: int, p: float) -> OracleResult:
    """Cheapest center set of size 1..k with d(v, S) <= r(v) for all v.

    Ties are resolved towards the lexicographically smallest index tuple.
    """
    n = inst.n
    if not 1 <= k <= n:
        raise KOutOfRangeError(f"k={k} outside [1, {n}]")
    total = sum(math.comb(n, j) for j in range(1, k + 1))
    if n > ORACLE_MAX_N or total > ORACLE_MAX_SETS:
        raise TooLargeError(f"n={n}, {total} candidate sets exceed the oracle limits")

    radii = np.asarray(radii, dtype=float)
    d = inst.dist
    best_key = None
    examined = 0
    for size in range(1, k + 1):
        combos = np.array(list(itertools.combinations(range(n), size)), dtype=np.intp)
        examined += len(combos)
        near = d[:, combos].min(axis=2).T  # (#combos, n)
        ok = np.all(near <= radii[None, :], axis=1)
        if not ok.any():
            continue
        for idx in np.flatnonzero(ok):
            key = (lp_norm(near[idx], p), tuple(int(c) for c in combos[idx]))
            if best_key is None or key < best_key:
                best_key = key
    if best_key is None:
        return OracleResult(False, None, None, examined)
    return OracleResult(True, best_key[0], best_key[1], examined)


def kmeanspp_baseline(inst: MetricInstance, k: int, p: float = 2.0, seed: int = 0) -> list[int]:
    """k-means++ seeding on the distance matrix (no Lloyd iterations).

    The first center is uniform; each next one is drawn with probability
    proportional to the squared distance to the chosen set. ``p`` is only
    recorded for symmetry with the other algorithms.
    """
    n = inst.n
    if not 1 <= k <= n:
        raise KOutOfRangeError(f"k={k} outside [1, {n}]")
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(n))]
    closest = inst.dist[chosen[0]].copy()
    while len(chosen) < k:
        w = closest**2
        w[chosen] = 0.0
        total = w.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=w / total))
        else:  # every remaining point coincides with a center
            free = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        np.minimum(closest, inst.dist[nxt], out=closest)
    return sorted(chosen)
