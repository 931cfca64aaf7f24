"""Individually fair (p,k)-clustering by LP rounding."""

__version__ = "0.1.0"

from .baselines import OracleResult, brute_force_opt, kmeanspp_baseline, plesnik_baseline
from .data import gaussian_mixture, load_csv, sample_points, standardize
from .filtering import FilterOutput, filter_points, verify_filter_properties
from .lp import LpModel, LpSolution, build_lp, per_point_cost, solve_lp, validate_solution
from .metric import INF, MetricInstance, build_instance, clustering_cost, fair_radii, nearest_in
from .rounding import (
    ForestStructure,
    RoundedSolution,
    beta_search,
    build_forest,
    cap_y,
    fair_round,
    half_integralize,
    redistribute_y,
    shrunk_radii,
)
from .sparsify import SparsifyConfig, SparsifyDiagnostics, sparsify_and_round

__all__ = [
    "INF",
    "FilterOutput",
    "ForestStructure",
    "LpModel",
    "LpSolution",
    "MetricInstance",
    "OracleResult",
    "RoundedSolution",
    "SparsifyConfig",
    "SparsifyDiagnostics",
    "beta_search",
    "brute_force_opt",
    "build_forest",
    "build_instance",
    "build_lp",
    "cap_y",
    "clustering_cost",
    "fair_radii",
    "fair_round",
    "filter_points",
    "gaussian_mixture",
    "half_integralize",
    "kmeanspp_baseline",
    "load_csv",
    "nearest_in",
    "per_point_cost",
    "plesnik_baseline",
    "redistribute_y",
    "sample_points",
    "shrunk_radii",
    "solve_lp",
    "sparsify_and_round",
    "standardize",
    "validate_solution",
    "verify_filter_properties",
]
