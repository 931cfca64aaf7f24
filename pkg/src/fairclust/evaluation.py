"""Evaluation protocol: violation profiles, cost-of-fairness sweeps,
multi-trial experiments and report emission."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from .baselines import kmeanspp_baseline, plesnik_baseline
from .data import gaussian_mixture, load_csv, sample_indices, standardize
from .errors import FairClustError
from .lp import build_lp, solve_lp
from .metric import MetricInstance, build_instance, distances_to, fair_radii, lp_norm
from .rounding import fair_round
from .sparsify import SparsifyConfig, sparsify_and_round

REPORT_SCHEMA = "fairclust-report/1"
HIST_EDGES = tuple(0.25 * i for i in range(9))  # 0, 0.25, ..., 2.0, then overflow
SIG_DIGITS = 12


@dataclass
class ViolationProfile:
    theta: np.ndarray = field(repr=False)
    max_violation: float
    n_infinite: int
    edges: tuple
    counts: list[int]  # len(edges) - 1 regular bins plus one overflow bin
    fair_fraction: float


def violation_ratios(inst: MetricInstance, radii, T) -> np.ndarray:
    """theta(v) = d(v, T) / r(v); 0 when d = 0, +inf when r = 0 < d."""
    radii = np.asarray(radii, dtype=float)
    d = distances_to(inst, T)
    theta = np.zeros_like(d)
    pos = radii > 0
    theta[pos] = d[pos] / radii[pos]
    theta[~pos & (d > 0)] = np.inf
    return theta


def violation_profile(inst: MetricInstance, radii, T, edges=HIST_EDGES) -> ViolationProfile:
    """Bins are right-closed, [e0, e1], (e1, e2], ..., plus an overflow bin
    for theta > e_last (infinite entries included), so theta <= 1 never
    shares a bin with an unfair point."""
    theta = violation_ratios(inst, radii, T)
    finite = theta[np.isfinite(theta)]
    edges = tuple(float(e) for e in edges)
    nbins = len(edges) - 1
    inside = finite[finite <= edges[-1]]
    idx = np.maximum(np.searchsorted(edges, inside, side="left") - 1, 0)
    regular = np.bincount(idx, minlength=nbins)
    overflow = int(theta.size - regular.sum())
    return ViolationProfile(
        theta=theta,
        max_violation=float(finite.max()) if finite.size else 0.0,
        n_infinite=int(np.count_nonzero(np.isinf(theta))),
        edges=edges,
        counts=[int(c) for c in regular] + [overflow],
        fair_fraction=float(np.count_nonzero(theta <= 1.0 + 1e-9) / theta.size),
    )


def cost_of_fairness_sweep(
    inst: MetricInstance, k: int, p: float, dilation_grid: Sequence[float], radii=None, backend: str = "simplex"
) -> list[tuple[float, Optional[float]]]:
    """LP optimum with radii alpha * r for every alpha in the grid.

    ``None`` marks an infeasible dilation (possible for alpha < 1).
    ``alpha = inf`` drops the radius constraint entirely.
    """
    radii = fair_radii(inst, k) if radii is None else np.asarray(radii, dtype=float)
    out = []
    for alpha in dilation_grid:
        alpha = float(alpha)
        scaled = np.full(inst.n, np.inf) if math.isinf(alpha) else alpha * radii
        sol = solve_lp(build_lp(inst, scaled, k, p), backend=backend)
        out.append((alpha, sol.objective if sol.feasible else None))
    return out


# ---------------------------------------------------------------------------
# experiments


@dataclass
class ExperimentConfig:
    input: Optional[str] = None
    features: list[str] = field(default_factory=list)
    synthetic_n: int = 1000  # used when input is None
    synthetic_dim: int = 2
    synthetic_clusters: int = 8
    sample_size: Optional[int] = None
    trials: int = 1
    seed: int = 0
    k_list: list[int] = field(default_factory=lambda: [5])
    p: float = 2.0
    algorithms: list[str] = field(default_factory=lambda: ["fair_round"])
    delta: float = 0.3
    epsilon: float = 0.0
    backend: str = "simplex"
    beta: Union[float, str] = 2.0
    radius_dilation: float = 1.0
    standardize: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.radius_dilation <= 0:
            raise ValueError("radius dilation must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def _algorithm_spec(name: str, default_delta: float) -> tuple[str, Optional[float]]:
    name = name.strip()
    if name.startswith("sparse"):
        arg = name[len("sparse") :].strip("():= ")
        delta = float(arg) if arg else default_delta
        return "sparse", delta
    if name in ("fair_round", "plesnik", "kmeanspp"):
        return name, None
    raise ValueError(f"unknown algorithm {name!r}")


def _label(kind: str, delta: Optional[float]) -> str:
    return f"sparse({delta:g})" if kind == "sparse" else kind


def load_points(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.input:
        points, _ = load_csv(cfg.input, cfg.features)
    else:
        points = gaussian_mixture(cfg.synthetic_n, cfg.synthetic_dim, cfg.synthetic_clusters, seed=cfg.seed)
    return points


def trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, trial]).generate_state(1)[0])


def _row(label, k, trial, seed, n, cfg, **vals) -> dict:
    row = {
        "algorithm": label,
        "k": k,
        "trial": trial,
        "seed": seed,
        "n": n,
        "p": cfg.p,
        "dilation": cfg.radius_dilation,
        "cost": None,
        "lp_cost": None,
        "cost_ratio": None,
        "max_violation": None,
        "n_infinite": None,
        "fair_fraction": None,
        "histogram": None,
        "n_centers": None,
        "reduced_n": None,
        "beta": None,
        "bound_ok": None,
        "status": "ok",
        "error": None,
        "wall_time_ms": None,
    }
    row.update(vals)
    return row


def _metrics(inst, radii, T, p) -> dict:
    prof = violation_profile(inst, radii, T)
    return {
        "cost": lp_norm(distances_to(inst, T), p),
        "max_violation": prof.max_violation,
        "n_infinite": prof.n_infinite,
        "fair_fraction": prof.fair_fraction,
        "histogram": prof.counts,
        "n_centers": len(T),
    }


def run_trial(cfg: ExperimentConfig, points: np.ndarray, trial: int) -> list[dict]:
    seed = trial_seed(cfg.seed, trial)
    if cfg.sample_size is not None:
        points = points[sample_indices(len(points), cfg.sample_size, seed)]
    if cfg.standardize:
        points = standardize(points)
    inst = build_instance(points=points)
    n, p = inst.n, float(cfg.p)
    alpha = cfg.radius_dilation
    specs = [_algorithm_spec(a, cfg.delta) for a in cfg.algorithms]
    rows = []
    for k in cfg.k_list:
        base = fair_radii(inst, k)  # violations are always measured against these
        radii = alpha * base
        lp_cost = None
        for kind, delta in specs:
            label = _label(kind, delta)
            t0 = time.perf_counter()
            try:
                if kind == "fair_round":
                    sol = solve_lp(build_lp(inst, radii, k, p), cfg.epsilon, cfg.backend)
                    if not sol.feasible:
                        raise FairClustError("LP infeasible")
                    lp_cost = sol.objective
                    rs = fair_round(inst, radii, sol, k, p, cfg.beta)
                    T, extra = rs.T, {"lp_cost": sol.objective, "beta": rs.beta}
                    bound = 8.0 * alpha
                elif kind == "sparse":
                    rs, diag, _ = sparsify_and_round(
                        inst, radii, k, p, SparsifyConfig(delta, cfg.epsilon, cfg.backend, cfg.beta)
                    )
                    T = rs.T
                    extra = {"lp_cost": diag.reduced_objective, "reduced_n": diag.reduced_n, "beta": rs.beta}
                    bound = 8.0 * (1.0 + delta) * alpha
                elif kind == "plesnik":
                    T, extra, bound = plesnik_baseline(inst, radii), {}, 2.0 * alpha
                else:
                    T, extra, bound = kmeanspp_baseline(inst, k, p, seed), {}, None
                elapsed = (time.perf_counter() - t0) * 1e3
                vals = _metrics(inst, base, T, p)
                vals.update(extra)
                lp = vals.get("lp_cost")
                if lp is not None and lp > 0:
                    vals["cost_ratio"] = vals["cost"] / lp ** (1.0 / p)
                if bound is not None:
                    ok = vals["max_violation"] <= bound + 1e-9 and vals["n_infinite"] == 0
                    if kind == "fair_round" and cfg.epsilon == 0 and lp is not None:
                        ok = ok and vals["cost"] ** p <= 2 ** (p + 2) * lp * (1 + 1e-9) + 1e-12
                    if kind == "plesnik":
                        ok = ok and len(T) <= k
                    vals["bound_ok"] = bool(ok)
                rows.append(_row(label, k, trial, seed, n, cfg, wall_time_ms=elapsed, **vals))
            except FairClustError as exc:
                elapsed = (time.perf_counter() - t0) * 1e3
                rows.append(_row(label, k, trial, seed, n, cfg, status="failed", error=f"{type(exc).__name__}: {exc}", wall_time_ms=elapsed))
        for row in rows:
            if row["k"] == k and row["lp_cost"] is None and lp_cost is not None and row["algorithm"] in ("plesnik", "kmeanspp"):
                row["lp_cost"] = lp_cost  # reference only
    return rows


@dataclass
class EvalReport:
    config: dict
    rows: list[dict]
    aggregates: list[dict]


AGG_FIELDS = ("cost", "lp_cost", "cost_ratio", "max_violation", "fair_fraction", "n_centers", "wall_time_ms")


def aggregate(rows: list[dict]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["algorithm"], r["k"]), []).append(r)
    out = []
    for (alg, k), rs in sorted(groups.items()):
        agg = {"algorithm": alg, "k": k, "trials": len(rs), "failed": sum(r["status"] != "ok" for r in rs)}
        for f in AGG_FIELDS:
            vals = np.array([r[f] for r in rs if r[f] is not None], dtype=float)
            agg[f + "_mean"] = float(vals.mean()) if vals.size else None
            agg[f + "_std"] = float(vals.std()) if vals.size else None
        out.append(agg)
    return out


def run_experiment(cfg: ExperimentConfig) -> EvalReport:
    points = load_points(cfg)
    if cfg.sample_size is not None and cfg.sample_size > len(points):
        from .errors import SampleTooLargeError

        raise SampleTooLargeError(f"sample of {cfg.sample_size} from {len(points)} points")
    trials = range(cfg.trials)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(run_trial, [cfg] * cfg.trials, [points] * cfg.trials, trials))
    else:
        chunks = [run_trial(cfg, points, t) for t in trials]
    rows = sorted((r for chunk in chunks for r in chunk), key=lambda r: (r["algorithm"], r["k"], r["trial"]))
    return EvalReport(config=dataclasses.asdict(cfg), rows=rows, aggregates=aggregate(rows))


# ---------------------------------------------------------------------------
# emission

ROW_FIELDS = tuple(_row("", 0, 0, 0, 0, ExperimentConfig()).keys())
TIMING_FIELDS = ("wall_time_ms", "wall_time_ms_mean", "wall_time_ms_std")


def _clean(value):
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
        return float(f"{value:.{SIG_DIGITS}g}")
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def report_to_dict(report: EvalReport, include_timing: bool = True) -> dict:
    def strip(d):
        return {k: v for k, v in d.items() if include_timing or k not in TIMING_FIELDS}

    return _clean(
        {
            "schema": REPORT_SCHEMA,
            "version": __version__,
            "config": report.config,
            "rows": [strip(r) for r in report.rows],
            "aggregates": [strip(a) for a in report.aggregates],
        }
    )


def report_to_csv(report: EvalReport, include_timing: bool = True) -> str:
    fields = [f for f in ROW_FIELDS if include_timing or f not in TIMING_FIELDS]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in report.rows:
        row = _clean(row)
        if row.get("histogram") is not None:
            row["histogram"] = ";".join(str(c) for c in row["histogram"])
        w.writerow({k: ("" if row.get(k) is None else row[k]) for k in fields})
    return buf.getvalue()


def emit_report(report: EvalReport, path=None, fmt: str = "json", include_timing: bool = True) -> str:
    """Serialize the report; write it to ``path`` when given and return the text."""
    if fmt == "json":
        text = json.dumps(report_to_dict(report, include_timing), indent=2) + "\n"
    elif fmt == "csv":
        text = report_to_csv(report, include_timing)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
