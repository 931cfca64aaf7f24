"""Dense two-phase tableau simplex with Bland's rule.

Small and slow on purpose: it is the independent reference the sparse
HiGHS path is checked against on tiny instances, and a dependency-free
fallback.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailureError


@dataclass
class DenseResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    z: np.ndarray | None
    objective: float
    iterations: int


def _pivot(T: np.ndarray, r: int, c: int) -> None:
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _run(T, basis, ncols, tol, max_iter, it0=0):
    """Simplex iterations on the tableau; the last row holds reduced costs."""
    m = T.shape[0] - 1
    it = it0
    while True:
        d = T[m, :ncols]
        enter = np.flatnonzero(d < -tol)
        if enter.size == 0:
            return "optimal", it
        j = int(enter[0])
        col = T[:m, j]
        rows = np.flatnonzero(col > tol)
        if rows.size == 0:
            return "unbounded", it
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + tol]
        r = int(tied[np.argmin([basis[i] for i in tied])])
        _pivot(T, r, j)
        basis[r] = j
        it += 1
        if it > max_iter:
            raise NumericalFailureError(f"simplex exceeded {max_iter} pivots")


def solve_standard_form(c, A, b, tol: float = 1e-9, max_iter: int = 200_000) -> DenseResult:
    """min c.z  s.t.  A z = b, z >= 0."""
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, N = A.shape
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    T = np.zeros((m + 1, N + m + 1))
    T[:m, :N] = A
    T[:m, N : N + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :N] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = list(range(N, N + m))

    status, it = _run(T, basis, N + m, tol, max_iter)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if -T[m, -1] > 1e-7 * scale:
        return DenseResult("infeasible", None, float("nan"), it)

    keep = []
    for i in range(m):
        if basis[i] >= N:
            cand = np.flatnonzero(np.abs(T[i, :N]) > tol)
            if cand.size == 0:
                continue  # redundant row
            _pivot(T, i, int(cand[0]))
            basis[i] = int(cand[0])
        keep.append(i)
    T = np.vstack([T[keep][:, list(range(N)) + [N + m]], np.zeros((1, N + 1))])
    basis = [basis[i] for i in keep]
    m2 = len(keep)

    T[m2, :N] = c
    for i, bj in enumerate(basis):
        T[m2] -= c[bj] * T[i]
    status, it = _run(T, basis, N, tol, max_iter, it)
    if status != "optimal":
        return DenseResult(status, None, float("nan"), it)
    z = np.zeros(N)
    z[basis] = T[:m2, -1]
    z[np.abs(z) < tol] = 0.0
    return DenseResult("optimal", z, float(c @ z), it)


def linprog_dense(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None, upper=None, tol: float = 1e-9) -> DenseResult:
    """min c.z s.t. A_eq z = b_eq, A_ub z <= b_ub, 0 <= z <= upper (inf allowed)."""
    c = np.asarray(c, dtype=float)
    N = c.size
    blocks, rhs = [], []
    n_slack = 0
    if A_ub is not None and len(b_ub):
        n_slack += len(b_ub)
    ub_idx = np.array([], dtype=np.intp)
    if upper is not None:
        upper = np.asarray(upper, dtype=float)
        ub_idx = np.flatnonzero(np.isfinite(upper))
        n_slack += ub_idx.size
    width = N + n_slack

    if A_eq is not None and len(b_eq):
        A_eq = np.asarray(A_eq, dtype=float)
        blocks.append(np.hstack([A_eq, np.zeros((A_eq.shape[0], n_slack))]))
        rhs.append(np.asarray(b_eq, dtype=float))
    s = N
    if A_ub is not None and len(b_ub):
        A_ub = np.asarray(A_ub, dtype=float)
        k = A_ub.shape[0]
        blk = np.zeros((k, width))
        blk[:, :N] = A_ub
        blk[:, s : s + k] = np.eye(k)
        s += k
        blocks.append(blk)
        rhs.append(np.asarray(b_ub, dtype=float))
    if ub_idx.size:
        blk = np.zeros((ub_idx.size, width))
        blk[np.arange(ub_idx.size), ub_idx] = 1.0
        blk[:, s : s + ub_idx.size] = np.eye(ub_idx.size)
        blocks.append(blk)
        rhs.append(upper[ub_idx])

    res = solve_standard_form(np.concatenate([c, np.zeros(n_slack)]), np.vstack(blocks), np.concatenate(rhs), tol=tol)
    if res.z is not None:
        res.z = res.z[:N]
    return res
