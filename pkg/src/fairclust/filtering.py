"""Greedy Filter: far-apart representatives and the partition they cover."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatchError
from .metric import MetricInstance


@dataclass(frozen=True)
class FilterOutput:
    S: list[int]
    D: dict[int, np.ndarray]
    owner: np.ndarray = field(repr=False)  # owner[v] = the u in S with v in D(u)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(self.D[u]) for u in self.S], dtype=np.intp)


def filter_points(inst: MetricInstance, R) -> FilterOutput:
    """Run Filter with radius function R.

    Points are visited in non-decreasing R (smallest index first on ties);
    the first uncovered one becomes a representative u and covers every
    uncovered v with d(u, v) <= 2 R(v).
    """
    R = np.asarray(R, dtype=float)
    n = inst.n
    if R.shape != (n,):
        raise LengthMismatchError(f"R has shape {R.shape}, expected ({n},)")

    order = np.lexsort((np.arange(n), R))
    twoR = 2.0 * R
    uncovered = np.ones(n, dtype=bool)
    owner = np.full(n, -1, dtype=np.intp)
    S: list[int] = []
    D: dict[int, np.ndarray] = {}
    for u in order:
        if not uncovered[u]:
            continue
        u = int(u)
        covered = uncovered & (inst.dist[u] <= twoR)
        members = np.flatnonzero(covered)
        S.append(u)
        D[u] = members
        owner[members] = u
        uncovered[members] = False
    return FilterOutput(S=S, D=D, owner=owner)


def verify_filter_properties(inst: MetricInstance, R, out: FilterOutput) -> list[str]:
    """Check the guaranteed properties of a Filter output.

    Returns one message per violated clause, each prefixed with the clause
    name: ``(a)`` separation, ``(b)`` disjoint R-balls, ``(c)`` partition,
    ``(d)`` R(u) <= R(v) on D(u), ``(e)`` d(u,v) <= 2R(v) on D(u), and
    ``(coreinside)`` uniqueness of the nearest representative inside B(u, R(u)).
    An empty list means the output is clean.
    """
    R = np.asarray(R, dtype=float)
    d = inst.dist
    n = inst.n
    S = np.asarray(out.S, dtype=np.intp)
    report: list[str] = []

    # (c) partition, plus u in D(u)
    counts = np.zeros(n, dtype=np.intp)
    for u in out.S:
        members = np.asarray(out.D.get(u, []), dtype=np.intp)
        np.add.at(counts, members, 1)
        if u not in set(members.tolist()):
            report.append(f"(c) representative {u} not in its own D set")
    if set(out.D) != set(out.S):
        report.append("(c) D keys differ from S")
    if np.any(counts != 1):
        bad = np.flatnonzero(counts != 1)
        report.append(f"(c) {bad.size} points covered {sorted(set(counts[bad].tolist()))} times, e.g. {int(bad[0])}")

    if S.size >= 2:
        dss = d[np.ix_(S, S)]
        rmax = np.maximum(R[S][:, None], R[S][None, :])
        off = ~np.eye(S.size, dtype=bool)
        viol = off & ~(dss > 2.0 * rmax)
        if viol.any():
            i, j = np.argwhere(viol)[0]
            report.append(f"(a) d({S[i]},{S[j]}) = {dss[i, j]!r} <= 2 max R")

    inball = d[S] <= R[S][:, None]  # |S| x n
    if S.size and np.any(inball.sum(axis=0) > 1):
        w = int(np.flatnonzero(inball.sum(axis=0) > 1)[0])
        report.append(f"(b) point {w} lies in two representative R-balls")

    for u in out.S:
        members = np.asarray(out.D.get(u, []), dtype=np.intp)
        if members.size == 0:
            continue
        if np.any(R[u] > R[members]):
            v = int(members[np.argmax(R[u] > R[members])])
            report.append(f"(d) R({u}) > R({v}) with {v} in D({u})")
        far = d[u, members] > 2.0 * R[members]
        if far.any():
            v = int(members[np.argmax(far)])
            report.append(f"(e) d({u},{v}) > 2R({v}) with {v} in D({u})")

    for a, u in enumerate(S):
        ws = np.flatnonzero(inball[a])
        if ws.size == 0 or S.size == 1:
            continue
        others = np.delete(S, a)
        closest_other = d[np.ix_(ws, others)].min(axis=1)
        bad = ~(d[ws, u] < closest_other)
        if bad.any():
            report.append(f"(coreinside) point {int(ws[np.argmax(bad)])} in B({u}, R({u})) is not uniquely closest to {u}")
    return report
