"""Plain-text solver-exchange format (version 1).

Problem file::

    fairlp 1 <n> <k> <p>
    c <v> <u> <coeff>      one per admissible pair, coeff = w_v * d(v,u)^p
    s <v> <u>              one per admissible pair (the support)

Solution file::

    status OPTIMAL|INFEASIBLE    optional first line, OPTIMAL when absent
    y <u> <value>
    x <v> <u> <value>            pairs not listed are zero

Tokens are whitespace separated; reals are written with %.17g so a write/read
cycle is exact. See docs/solver_exchange.md.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FORMAT = "fairlp"
VERSION = 1
REAL = "%.17g"


@dataclass
class ExchangeProblem:
    n: int
    k: int
    p: float
    rows: np.ndarray
    cols: np.ndarray
    coeffs: np.ndarray


def write_problem(model, path) -> None:
    rows = np.repeat(np.arange(model.n), model.support_sizes())
    cols = model.indices
    with open(path, "w") as fh:
        fh.write(f"{FORMAT} {VERSION} {model.n} {model.k} {REAL % model.p}\n")
        for v, u, c in zip(rows.tolist(), cols.tolist(), model.costs.tolist()):
            fh.write(f"c {v} {u} {REAL % c}\n")
        for v, u in zip(rows.tolist(), cols.tolist()):
            fh.write(f"s {v} {u}\n")


def read_problem(path) -> ExchangeProblem:
    coeff: dict[tuple[int, int], float] = {}
    support: list[tuple[int, int]] = []
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 5 or head[0] != FORMAT:
            raise ValueError(f"{path}: not a {FORMAT} problem file")
        if int(head[1]) != VERSION:
            raise ValueError(f"{path}: unsupported version {head[1]}")
        n, k, p = int(head[2]), int(head[3]), float(head[4])
        for lineno, line in enumerate(fh, start=2):
            tok = line.split()
            if not tok:
                continue
            if tok[0] == "c" and len(tok) == 4:
                coeff[(int(tok[1]), int(tok[2]))] = float(tok[3])
            elif tok[0] == "s" and len(tok) == 3:
                support.append((int(tok[1]), int(tok[2])))
            else:
                raise ValueError(f"{path}:{lineno}: bad record {line.strip()!r}")
    support.sort()
    rows = np.array([v for v, _ in support], dtype=np.intp)
    cols = np.array([u for _, u in support], dtype=np.intp)
    coeffs = np.array([coeff.get(key, 0.0) for key in support])
    return ExchangeProblem(n, k, p, rows, cols, coeffs)


def write_solution(path, y, x_entries, status: str = "OPTIMAL") -> None:
    """``x_entries`` is an iterable of (v, u, value); a scipy sparse matrix also works."""
    if hasattr(x_entries, "tocoo"):
        coo = x_entries.tocoo()
        x_entries = zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())
    with open(path, "w") as fh:
        fh.write(f"status {status}\n")
        if status == "INFEASIBLE":
            return
        for u, val in enumerate(np.asarray(y, dtype=float).tolist()):
            fh.write(f"y {u} {REAL % val}\n")
        for v, u, val in x_entries:
            fh.write(f"x {int(v)} {int(u)} {REAL % float(val)}\n")


def read_solution(path, n: int):
    """Return (status, {(v,u): value}, y)."""
    status = "OPTIMAL"
    x: dict[tuple[int, int], float] = {}
    y = np.zeros(n)
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            tok = line.split()
            if not tok:
                continue
            if tok[0] == "status" and len(tok) == 2:
                status = tok[1].upper()
            elif tok[0] == "y" and len(tok) == 3:
                y[int(tok[1])] = float(tok[2])
            elif tok[0] == "x" and len(tok) == 4:
                x[(int(tok[1]), int(tok[2]))] = float(tok[3])
            else:
                raise ValueError(f"{path}:{lineno}: bad record {line.strip()!r}")
    return status, x, y
