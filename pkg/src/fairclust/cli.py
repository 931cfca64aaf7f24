"""Command-line interface.

Exit codes: 0 ok, 1 usage error, 2 infeasible instance, 3 solver failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time

import numpy as np

from . import __version__
from .baselines import brute_force_opt, kmeanspp_baseline, plesnik_baseline
from .data import gaussian_mixture, load_csv, sample_indices, standardize
from .errors import (
    AllRowsSkippedError,
    BackendUnavailableError,
    FairClustError,
    InfeasibleInstanceError,
    MassMismatchError,
    MissingColumnError,
    NonTerminationError,
    NumericalFailureError,
)
from .evaluation import (
    ExperimentConfig,
    _clean,
    cost_of_fairness_sweep,
    emit_report,
    run_experiment,
    violation_profile,
)
from .lp import build_lp, solve_lp, validate_solution
from .metric import build_instance, clustering_cost, fair_radii, parse_p
from .rounding import fair_round
from .sparsify import SparsifyConfig, sparsify_and_round

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3, 4

log = logging.getLogger("fairclust")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is reserved for infeasibility
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _float_list(text: str) -> list[float]:
    return [parse_p(t) if t.strip().lower() in ("inf", "infinity") else float(t) for t in text.split(",") if t.strip()]


def _beta(text: str):
    return "search" if text == "search" else float(text)


def _data_args(sp: argparse.ArgumentParser) -> None:
    g = sp.add_argument_group("data")
    g.add_argument("--input", help="CSV/TSV file with a header row")
    g.add_argument("--features", default="", help="comma-separated feature columns")
    g.add_argument("--synthetic", type=int, metavar="N", help="use an N-point Gaussian mixture instead of --input")
    g.add_argument("--dim", type=int, default=2, help="dimension of synthetic data")
    g.add_argument("--sample", type=int, help="uniform subsample size")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--standardize", action="store_true", help="z-score each feature column")


def _out_args(sp: argparse.ArgumentParser, formats=("json",)) -> None:
    sp.add_argument("--out", help="output path (stdout when omitted)")
    sp.add_argument("--format", choices=formats, default=formats[0])


def _lp_args(sp: argparse.ArgumentParser, k_required: bool = True) -> None:
    sp.add_argument("--k", type=int, required=k_required)
    sp.add_argument("--p", type=parse_p, default=2.0, help="1, 2, ... or inf")
    sp.add_argument("--epsilon", type=float, default=0.0)
    sp.add_argument("--backend", default="simplex", help="simplex | ipm | dense | external:CMD")
    sp.add_argument("--dilation", type=float, default=1.0, help="multiply fairness radii by this factor")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fairclust", description="Individually fair (p,k)-clustering by LP rounding")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("radii", help="fairness radii r(v)")
    _data_args(sp)
    sp.add_argument("--k", type=int, required=True)
    _out_args(sp)

    sp = sub.add_parser("solve-lp", help="solve the fair LP relaxation")
    _data_args(sp)
    _lp_args(sp)
    sp.add_argument("--full", action="store_true", help="include x and y in the output")
    _out_args(sp)

    sp = sub.add_parser("round", help="LP solve followed by fair rounding")
    _data_args(sp)
    _lp_args(sp)
    sp.add_argument("--beta", type=_beta, default=2.0, help="constant in the shrunk radii, or 'search'")
    _out_args(sp)

    sp = sub.add_parser("sparse-round", help="sparsified LP followed by fair rounding")
    _data_args(sp)
    _lp_args(sp)
    sp.add_argument("--beta", type=_beta, default=2.0)
    sp.add_argument("--delta", type=float, default=0.3)
    _out_args(sp)

    sp = sub.add_parser("baseline", help="Plesnik-style or k-means++ centers")
    _data_args(sp)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--p", type=parse_p, default=2.0)
    sp.add_argument("--dilation", type=float, default=1.0)
    sp.add_argument("--algorithm", choices=("plesnik", "kmeanspp"), default="plesnik")
    _out_args(sp)

    sp = sub.add_parser("oracle", help="exhaustive optimum on tiny instances")
    _data_args(sp)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--p", type=parse_p, default=2.0)
    sp.add_argument("--dilation", type=float, default=1.0)
    _out_args(sp)

    sp = sub.add_parser("experiment", help="multi-trial evaluation protocol")
    sp.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")
    sp.add_argument("--input")
    sp.add_argument("--features")
    sp.add_argument("--synthetic", type=int, metavar="N")
    sp.add_argument("--dim", type=int)
    sp.add_argument("--sample", type=int)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--standardize", action="store_true", default=None)
    sp.add_argument("--k", type=_int_list, help="comma-separated k values")
    sp.add_argument("--p", type=parse_p)
    sp.add_argument("--algorithms", help="comma list of fair_round, sparse(DELTA), plesnik, kmeanspp")
    sp.add_argument("--delta", type=float)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--beta", type=_beta)
    sp.add_argument("--backend")
    sp.add_argument("--dilation", type=float)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--no-timing", action="store_true", help="omit wall-clock fields")
    _out_args(sp, ("json", "csv"))

    sp = sub.add_parser("sweep", help="LP cost as fairness radii are dilated")
    _data_args(sp)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--p", type=parse_p, default=2.0)
    sp.add_argument("--backend", default="simplex")
    sp.add_argument("--dilation-grid", type=_float_list, default=[1.0, 1.25, 1.5, 2.0, 3.0, math.inf])
    _out_args(sp, ("json", "csv"))
    return ap


# ---------------------------------------------------------------------------


def _load(args) -> np.ndarray:
    if args.input:
        feats = [f.strip() for f in args.features.split(",") if f.strip()]
        if not feats:
            raise ValueError("--features is required with --input")
        points, skipped = load_csv(args.input, feats)
        if skipped:
            log.warning("skipped %d malformed row(s)", skipped)
    elif args.synthetic:
        points = gaussian_mixture(args.synthetic, args.dim, seed=args.seed)
    else:
        raise ValueError("give --input PATH --features ... or --synthetic N")
    if args.sample is not None:
        points = points[sample_indices(len(points), args.sample, args.seed)]
    if args.standardize:
        points = standardize(points)
    return points


def _write(text: str, path) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj, args) -> None:
    _write(json.dumps(_clean(obj), indent=2) + "\n", args.out)


def _summary(inst, base, T, p) -> dict:
    prof = violation_profile(inst, base, T)
    return {
        "centers": [int(t) for t in T],
        "n_centers": len(T),
        "cost": clustering_cost(inst, T, p),
        "max_violation": prof.max_violation,
        "n_infinite": prof.n_infinite,
        "fair_fraction": prof.fair_fraction,
        "histogram": {"edges": list(prof.edges), "counts": prof.counts},
    }


def cmd_radii(args):
    inst = build_instance(points=_load(args))
    r = fair_radii(inst, args.k)
    _dump({"n": inst.n, "k": args.k, "ball_size": -(-inst.n // args.k), "radii": r.tolist()}, args)


def _lp_setup(args):
    inst = build_instance(points=_load(args))
    base = fair_radii(inst, args.k)
    return inst, base, args.dilation * base


def cmd_solve_lp(args):
    inst, _, radii = _lp_setup(args)
    model = build_lp(inst, radii, args.k, args.p)
    t0 = time.perf_counter()
    sol = solve_lp(model, args.epsilon, args.backend)
    elapsed = (time.perf_counter() - t0) * 1e3
    out = {"n": inst.n, "k": args.k, "p": args.p, "status": sol.status, "variable_count": model.variable_count}
    if not sol.feasible:
        out["message"] = sol.message
        _dump(out, args)
        return EXIT_INFEASIBLE
    res = validate_solution(model, sol)
    out.update(objective=sol.objective, backend=sol.backend, residuals=vars(res), wall_time_ms=elapsed)
    if args.full:
        coo = sol.x.tocoo()
        out["y"] = sol.y.tolist()
        out["x"] = [[int(v), int(u), float(w)] for v, u, w in zip(coo.row, coo.col, coo.data) if w != 0]
    _dump(out, args)
    return EXIT_OK


def cmd_round(args):
    inst, base, radii = _lp_setup(args)
    sol = solve_lp(build_lp(inst, radii, args.k, args.p), args.epsilon, args.backend)
    if not sol.feasible:
        raise InfeasibleInstanceError("fair LP is infeasible")
    rs = fair_round(inst, radii, sol, args.k, args.p, args.beta)
    out = {"n": inst.n, "k": args.k, "p": args.p, "lp_objective": sol.objective, "beta": rs.beta}
    if rs.beta_star is not None:
        out["beta_star"] = rs.beta_star
    out.update(shortcut=rs.shortcut, n_representatives=len(rs.S))
    out.update(_summary(inst, base, rs.T, args.p))
    _dump(out, args)


def cmd_sparse_round(args):
    inst, base, radii = _lp_setup(args)
    cfg = SparsifyConfig(args.delta, args.epsilon, args.backend, args.beta)
    rs, diag, _ = sparsify_and_round(inst, radii, args.k, args.p, cfg)
    out = {
        "n": inst.n,
        "k": args.k,
        "p": args.p,
        "delta": args.delta,
        "reduced_n": diag.reduced_n,
        "variable_count_full": diag.variable_count_full,
        "variable_count_reduced": diag.variable_count_reduced,
        "reduced_objective": diag.reduced_objective,
        "additive_term": diag.additive_term,
        "shortcut": diag.shortcut or rs.shortcut,
    }
    out.update(_summary(inst, base, rs.T, args.p))
    _dump(out, args)


def cmd_baseline(args):
    inst = build_instance(points=_load(args))
    base = fair_radii(inst, args.k)
    if args.algorithm == "plesnik":
        T = plesnik_baseline(inst, args.dilation * base)
        if len(T) > args.k:
            log.warning("%d representatives exceed k=%d: no fair k-center set exists", len(T), args.k)
    else:
        T = kmeanspp_baseline(inst, args.k, args.p, args.seed)
    out = {"n": inst.n, "k": args.k, "p": args.p, "algorithm": args.algorithm}
    out.update(_summary(inst, base, T, args.p))
    _dump(out, args)


def cmd_oracle(args):
    inst = build_instance(points=_load(args))
    radii = args.dilation * fair_radii(inst, args.k)
    res = brute_force_opt(inst, radii, args.k, args.p)
    _dump(
        {
            "n": inst.n,
            "k": args.k,
            "p": args.p,
            "feasible": res.feasible,
            "opt_cost": res.opt_cost,
            "opt_centers": list(res.opt_centers) if res.opt_centers else None,
            "sets_examined": res.sets_examined,
        },
        args,
    )
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


_EXPERIMENT_FLAGS = {
    "input": "input",
    "synthetic": "synthetic_n",
    "dim": "synthetic_dim",
    "sample": "sample_size",
    "trials": "trials",
    "seed": "seed",
    "standardize": "standardize",
    "k": "k_list",
    "p": "p",
    "delta": "delta",
    "epsilon": "epsilon",
    "beta": "beta",
    "backend": "backend",
    "dilation": "radius_dilation",
    "workers": "workers",
}


def experiment_config(args) -> ExperimentConfig:
    base = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    for flag, key in _EXPERIMENT_FLAGS.items():
        val = getattr(args, flag)
        if val is not None:
            base[key] = val
    if args.features is not None:
        base["features"] = [f.strip() for f in args.features.split(",") if f.strip()]
    if args.algorithms is not None:
        base["algorithms"] = _split_algorithms(args.algorithms)
    return ExperimentConfig.from_dict(base)


def _split_algorithms(text: str) -> list[str]:
    # commas inside sparse(...) never occur, so a plain split is enough
    return [a.strip() for a in text.split(",") if a.strip()]


def cmd_experiment(args):
    cfg = experiment_config(args)
    report = run_experiment(cfg)
    text = emit_report(report, None, args.format, include_timing=not args.no_timing)
    _write(text, args.out)
    failed = sum(r["status"] != "ok" for r in report.rows)
    if failed:
        log.warning("%d of %d rows failed", failed, len(report.rows))


def cmd_sweep(args):
    inst = build_instance(points=_load(args))
    rows = cost_of_fairness_sweep(inst, args.k, args.p, args.dilation_grid, backend=args.backend)
    if args.format == "csv":
        lines = ["dilation,lp_cost"]
        for a, c in rows:
            lines.append(f"{a:.12g},{'' if c is None else format(c, '.12g')}")
        _write("\n".join(lines) + "\n", args.out)
    else:
        _dump({"n": inst.n, "k": args.k, "p": args.p, "sweep": [{"dilation": a, "lp_cost": c} for a, c in rows]}, args)


COMMANDS = {
    "radii": cmd_radii,
    "solve-lp": cmd_solve_lp,
    "round": cmd_round,
    "sparse-round": cmd_sparse_round,
    "baseline": cmd_baseline,
    "oracle": cmd_oracle,
    "experiment": cmd_experiment,
    "sweep": cmd_sweep,
}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, InfeasibleInstanceError):
        return EXIT_INFEASIBLE
    if isinstance(exc, (NumericalFailureError, BackendUnavailableError, NonTerminationError, MassMismatchError)):
        return EXIT_SOLVER
    if isinstance(exc, (OSError, MissingColumnError, AllRowsSkippedError)):
        return EXIT_IO
    return EXIT_USAGE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        rc = COMMANDS[args.command](args)
    except (FairClustError, OSError, ValueError) as exc:
        print(f"fairclust: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    return EXIT_OK if rc is None else rc


if __name__ == "__main__":
    sys.exit(main())
