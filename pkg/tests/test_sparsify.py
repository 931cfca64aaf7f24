import math

import numpy as np
import pytest
import scipy.sparse as sp

from _instances import random_euclidean
from fairclust.data import gaussian_mixture
from fairclust.errors import PartitionBrokenError
from fairclust.filtering import filter_points
from fairclust.lp import OPTIMAL, LpSolution, build_lp, solve_lp, validate_solution
from fairclust.metric import build_instance, distances_to, fair_radii
from fairclust.sparsify import SparsifyConfig, full_variable_count, lift_solution, sparsify_and_round


def test_config_rejects_nonpositive_delta():
    with pytest.raises(ValueError):
        SparsifyConfig(0.0)


def test_lift_identity():
    x = sp.csr_matrix(np.array([[0.5, 0.5], [0.5, 0.5]]))
    sol = LpSolution(x, np.array([0.5, 0.5]), 1.0, OPTIMAL)
    lifted = lift_solution(sol, [0, 1], {0: np.array([0]), 1: np.array([1])}, 2)
    assert lifted.x.toarray().tolist() == x.toarray().tolist()
    assert lifted.y.tolist() == [0.5, 0.5]


def test_lift_copies_representative_row():
    # S = [2, 0] in selection order; D(2) = {1, 2}, D(0) = {0}
    x = sp.csr_matrix(np.array([[0.25, 0.75], [0.0, 1.0]]))
    sol = LpSolution(x, np.array([0.25, 0.75]), 1.0, OPTIMAL)
    lifted = lift_solution(sol, [2, 0], {2: np.array([1, 2]), 0: np.array([0])}, 3)
    dense = lifted.x.toarray()
    assert dense[1].tolist() == dense[2].tolist() == [0.75, 0.0, 0.25]
    assert dense[0].tolist() == [1.0, 0.0, 0.0]
    assert lifted.y.tolist() == [0.75, 0.0, 0.25]


def test_lift_partition_errors():
    sol = LpSolution(sp.identity(2, format="csr"), np.ones(2), 0.0, OPTIMAL)
    with pytest.raises(PartitionBrokenError):
        lift_solution(sol, [0, 1], {0: np.array([0]), 1: np.array([1])}, 3)
    with pytest.raises(PartitionBrokenError):
        lift_solution(sol, [0, 1], {0: np.array([0, 1]), 1: np.array([1])}, 2)


def test_lifted_feasible_for_dilated_radii():
    rng = np.random.default_rng(0)
    for _ in range(10):
        inst = random_euclidean(rng, 80)
        k, p, delta = 4, 2, 0.3
        r = fair_radii(inst, k)
        filt = filter_points(inst, 0.5 * delta * r)
        if len(filt.S) <= k:
            continue
        reduced = solve_lp(build_lp(inst.subset(filt.S), r[filt.S], k, p, weights=filt.sizes))
        lifted = lift_solution(reduced, filt.S, filt.D, inst.n)
        coo = lifted.x.tocoo()
        assert np.all(inst.dist[coo.row, coo.col] <= (1 + delta) * r[coo.row] + 1e-9)
        model = build_lp(inst, (1 + delta) * r, k, p)
        lifted.objective = float(model.pattern(model.costs).multiply(lifted.x).sum())
        res = validate_solution(model, lifted)
        assert max(res.cover, res.budget, res.open, res.bounds, res.support) <= 1e-6


def test_tiny_delta_reproduces_full_lp():
    rng = np.random.default_rng(1)
    inst = random_euclidean(rng, 40)
    k, p = 4, 1
    r = fair_radii(inst, k)
    rs, diag, _ = sparsify_and_round(inst, r, k, p, SparsifyConfig(1e-9))
    full = solve_lp(build_lp(inst, r, k, p))
    assert diag.reduced_n == inst.n
    assert diag.reduced_objective == pytest.approx(full.objective, rel=1e-9)
    assert diag.variable_count_reduced == diag.variable_count_full == full_variable_count(inst, r)


def test_delta_one_gives_few_representatives():
    rng = np.random.default_rng(2)
    inst = random_euclidean(rng, 500)
    k = 10
    r = fair_radii(inst, k)
    assert len(filter_points(inst, 0.5 * r).S) <= 5 * k


@pytest.mark.parametrize("delta", [0.3, 0.05])
def test_guarantees_and_size(delta):
    inst = build_instance(points=gaussian_mixture(300, seed=3))
    k, p = 8, 2
    r = fair_radii(inst, k)
    rs, diag, _ = sparsify_and_round(inst, r, k, p, SparsifyConfig(delta))
    d = distances_to(inst, rs.T)
    assert 1 <= len(rs.T) <= k
    assert np.all(d <= 8 * (1 + delta) * r + 1e-9)
    assert math.fsum(d**p) <= 2 ** (p + 2) * (diag.reduced_objective + diag.additive_term) + 1e-9
    assert diag.variable_count_reduced < diag.variable_count_full
    assert diag.reduced_n <= inst.n


def test_shortcut_when_few_representatives():
    inst = build_instance(points=[[0], [0.1], [10], [10.1]])
    r = np.full(4, 1.0)
    rs, diag, lifted = sparsify_and_round(inst, r, 2, 1, SparsifyConfig(1.0))
    assert diag.shortcut and rs.T == [0, 2]
    assert diag.variable_count_reduced == 0
    assert np.all(distances_to(inst, rs.T) <= 2 * r)
