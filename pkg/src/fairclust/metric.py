"""Finite metric spaces, fairness radii and l_p clustering cost."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import (
    AsymmetricMatrixError,
    EmptyCentersError,
    EmptyInputError,
    EmptySetError,
    KOutOfRangeError,
    NegativeDistanceError,
    RaggedVectorsError,
)

INF = math.inf
TOL = 1e-9
ASYM_TOL = 1e-6
# above this exponent the cost is accumulated in log space
LOG_DOMAIN_P = 32


@dataclass(frozen=True, eq=False)
class MetricInstance:
    """A point set with a dense, symmetric distance matrix.

    ``coords`` is kept when the instance was built from feature vectors so
    that Euclidean-only baselines can use it; every algorithm in the package
    only reads ``dist``.
    """

    dist: np.ndarray
    coords: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def subset(self, idx: Sequence[int]) -> "MetricInstance":
        idx = np.asarray(idx, dtype=np.intp)
        coords = None if self.coords is None else self.coords[idx]
        return _frozen(self.dist[np.ix_(idx, idx)], coords)


def _frozen(dist, coords=None):
    dist = np.ascontiguousarray(dist, dtype=float)
    dist.setflags(write=False)
    if coords is not None:
        coords = np.ascontiguousarray(coords, dtype=float)
        coords.setflags(write=False)
    return MetricInstance(dist=dist, coords=coords)


def pairwise_euclidean(coords: np.ndarray) -> np.ndarray:
    # difference-based rather than the Gram trick: exact zeros on duplicates
    # and exact integers on integer-valued 1-D data.
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def build_instance(points=None, matrix=None) -> MetricInstance:
    """Build a :class:`MetricInstance` from feature vectors or a distance matrix.

    Exactly one of ``points`` / ``matrix`` must be given. A matrix is
    symmetrized by averaging; asymmetry above 1e-6 is rejected.
    """
    if (points is None) == (matrix is None):
        raise ValueError("give exactly one of points or matrix")

    if points is not None:
        rows = [list(map(float, p)) for p in points]
        if not rows:
            raise EmptyInputError("no points")
        dim = len(rows[0])
        if dim == 0 or any(len(r) != dim for r in rows):
            raise RaggedVectorsError("points must share a positive dimension")
        coords = np.array(rows, dtype=float)
        if not np.all(np.isfinite(coords)):
            raise ValueError("non-finite coordinate")
        return _frozen(pairwise_euclidean(coords), coords)

    m = np.asarray(matrix, dtype=float)
    if m.size == 0:
        raise EmptyInputError("empty matrix")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise AsymmetricMatrixError(f"matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("non-finite distance")
    if np.any(m < 0):
        raise NegativeDistanceError("negative distance")
    asym = np.max(np.abs(m - m.T))
    if asym > ASYM_TOL:
        raise AsymmetricMatrixError(f"max |d(i,j) - d(j,i)| = {asym:g}")
    m = 0.5 * (m + m.T)
    np.fill_diagonal(m, 0.0)
    return _frozen(m)


def triangle_violations(inst: MetricInstance, tol: float = TOL) -> list[tuple[int, int, int]]:
    """Return triples (i, j, l) with d(i,l) > d(i,j) + d(j,l) + tol.  O(n^3)."""
    d = inst.dist
    bad = []
    for j in range(inst.n):
        viol = d > d[:, j][:, None] + d[j][None, :] + tol
        for i, l in zip(*np.nonzero(viol)):
            bad.append((int(i), j, int(l)))
    return bad


def check_coords_consistent(inst: MetricInstance, tol: float = TOL) -> bool:
    if inst.coords is None:
        return True
    return bool(np.max(np.abs(pairwise_euclidean(inst.coords) - inst.dist)) <= tol)


def ball_size_required(n: int, k: int) -> int:
    """Number of points (self included) a fairness ball must hold: ceil(n/k)."""
    return -(-n // k)


def fair_radii(inst: MetricInstance, k: int) -> np.ndarray:
    """Distance from each point to its ceil(n/k)-th nearest point (itself first)."""
    n = inst.n
    if not 1 <= k <= n:
        raise KOutOfRangeError(f"k={k} outside [1, {n}]")
    m = ball_size_required(n, k)
    return np.partition(inst.dist, m - 1, axis=1)[:, m - 1].copy()


def parse_p(value) -> float:
    """Parse an l_p exponent; accepts numbers and 'inf'."""
    if isinstance(value, str):
        s = value.strip().lower()
        p = INF if s in ("inf", "infinity", "oo") else float(s)
    else:
        p = float(value)
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {value!r}")
    return p


def distances_to(inst: MetricInstance, centers: Iterable[int]) -> np.ndarray:
    """d(v, centers) for every v."""
    centers = np.unique(np.asarray(list(centers), dtype=np.intp))
    if centers.size == 0:
        raise EmptyCentersError("center set is empty")
    return inst.dist[:, centers].min(axis=1)


def lp_norm(values: np.ndarray, p: float) -> float:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    if math.isinf(p):
        return float(values.max())
    if p == 1:
        return float(math.fsum(values))
    if p >= LOG_DOMAIN_P:
        pos = values[values > 0]
        if pos.size == 0:
            return 0.0
        return float(math.exp(logsumexp(p * np.log(pos)) / p))
    return float(math.fsum(values**p) ** (1.0 / p))


def clustering_cost(inst: MetricInstance, centers: Iterable[int], p: float) -> float:
    """(sum_v d(v, centers)^p)^(1/p); the max distance when p is infinite."""
    return lp_norm(distances_to(inst, centers), p)


def nearest_in(inst: MetricInstance, v: int, S: Iterable[int]) -> tuple[int, float]:
    """Closest member of S to v, smallest index on ties."""
    S = np.unique(np.asarray(list(S), dtype=np.intp))  # sorted, so argmin picks the smallest index
    if S.size == 0:
        raise EmptySetError("S is empty")
    row = inst.dist[v, S]
    j = int(np.argmin(row))
    return int(S[j]), float(row[j])


def nearest_index_map(inst: MetricInstance, S: Sequence[int]) -> np.ndarray:
    """For every point, the closest member of S (smallest index on ties)."""
    S = np.sort(np.asarray(S, dtype=np.intp))
    if S.size == 0:
        raise EmptySetError("S is empty")
    return S[np.argmin(inst.dist[:, S], axis=1)]
