import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from _instances import mixture_instance, random_euclidean
from fairclust.errors import InfeasibleInstanceError, MassMismatchError, NoFeasibleBetaError, SingletonSError
from fairclust.filtering import filter_points
from fairclust.lp import INFEASIBLE, LpSolution, build_lp, cost_shares, solve_lp
from fairclust.metric import build_instance, distances_to, fair_radii
from fairclust.rounding import (
    BETA_MIN,
    BETA_REL_TOL,
    ROOT,
    beta_search,
    build_forest,
    cap_y,
    fair_round,
    filter_count,
    half_integral_steps,
    half_integralize_costs,
    parity_select,
    redistribute_y,
    shrunk_radii,
    surrogate_objective,
)


# -- shrunk radii ------------------------------------------------------------


def test_shrunk_radii_examples():
    r = np.array([3.0, 3.0])
    assert shrunk_radii(r, [0, 0], 1).tolist() == [0, 0]
    assert shrunk_radii(r, [1e9, 1e9], 2).tolist() == [3, 3]
    assert shrunk_radii([3.0], [2.0], 1, 2.0).tolist() == [3.0]
    assert shrunk_radii([3.0], [1.0], 1, 2.0).tolist() == [2.0]
    assert shrunk_radii([3.0], [1.0], 1, math.inf).tolist() == [3.0]
    with pytest.raises(ValueError):
        shrunk_radii(r, [1, 1], 1, 0.0)


# -- redistribution and capping ---------------------------------------------


def test_redistribute_example():
    inst = build_instance(points=[[0], [1], [5]])
    y = redistribute_y(inst, [0, 2], [0.4, 0.3, 0.3])
    assert y == pytest.approx([0.7, 0.0, 0.3], abs=1e-15)


def test_redistribute_identity():
    inst = build_instance(points=[[0], [1], [5]])
    y = np.array([0.2, 0.5, 0.3])
    assert redistribute_y(inst, [0, 1, 2], y).tolist() == y.tolist()


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 30).flatmap(lambda n: st.tuples(
    arrays(np.float64, (n, 2), elements=st.floats(0, 50, width=32)),
    arrays(np.float64, (n,), elements=st.floats(0, 1)),
    st.sets(st.integers(0, n - 1), min_size=1),
)))
def test_redistribute_conserves_mass(args):
    pts, y, S = args
    inst = build_instance(points=pts)
    out = redistribute_y(inst, sorted(S), y)
    assert math.fsum(out) == pytest.approx(math.fsum(y), abs=1e-12)
    outside = np.setdiff1d(np.arange(inst.n), sorted(S))
    assert np.all(out[outside] == 0)


def test_cap_examples():
    assert cap_y([1.3, 0.7], 2).tolist() == [1.0, 1.0]
    y = np.array([0.5, 1.0, 0.5])
    assert cap_y(y, 2).tolist() == y.tolist()
    with pytest.raises(MassMismatchError):
        cap_y([0.5, 0.6], 2)


@st.composite
def half_floor_masses(draw):
    # m entries each >= 1/2, summing to an integer k < m
    m = draw(st.integers(2, 25))
    k = draw(st.integers(-(-m // 2), m - 1))
    w = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=m, max_size=m)))
    y = 0.5 + (k - 0.5 * m) * w / w.sum()
    y[-1] = k - math.fsum(y[:-1])
    return y, k


@settings(max_examples=300, deadline=None)
@given(half_floor_masses())
def test_cap_postcondition(args):
    y, k = args
    if y[-1] < 0.5:
        return  # rounding pushed the last entry below the floor
    out = cap_y(y, k)
    assert math.fsum(out) == pytest.approx(k, abs=1e-9)
    assert out.min() >= 0.5 - 1e-6 and out.max() <= 1.0 + 1e-6
    assert np.all(out[y <= 1.0] >= y[y <= 1.0] - 1e-12)  # receivers only grow


# -- half-integralization ----------------------------------------------------


def test_halfint_cost_example():
    # b costlier than a, c cheapest: only a -> b fires, delta = min(0.2, 0.2)
    out = half_integralize_costs([0.7, 0.8, 0.5], [1.0, 2.0, 0.0])
    assert out.tolist() == [0.5, 1.0, 0.5]


def test_halfint_largest_gap_first():
    # c is costliest: b -> c (gap 2) moves 0.3, then a -> c moves 0.2
    out = half_integralize_costs([0.7, 0.8, 0.5], [2.0, 1.0, 3.0])
    assert out == pytest.approx([0.5, 0.5, 1.0], abs=1e-15)


def test_halfint_tie_example():
    out = half_integralize_costs([0.75, 0.75, 0.5], [1.0, 1.0, 1.0])
    assert out.tolist() == [1.0, 0.5, 0.5]


def test_halfint_already_half_integral():
    y = [1.0, 0.5, 0.5, 1.0]
    assert half_integralize_costs(y, [4, 3, 2, 1]).tolist() == y


@settings(max_examples=200, deadline=None)
@given(half_floor_masses(), st.data())
def test_halfint_properties(args, data):
    y, k = args
    if y[-1] < 0.5:
        return
    y = cap_y(y, k)
    costs = np.array(data.draw(st.lists(st.integers(0, 5).map(float), min_size=y.size, max_size=y.size)))
    prev = surrogate_objective(y, costs)
    last = y
    for step in half_integral_steps(y, costs):
        cur = surrogate_objective(step, costs)
        assert cur <= prev + 1e-9
        assert math.fsum(step) == pytest.approx(k, abs=1e-9)
        prev, last = cur, step
    assert np.all(np.isclose(last, 0.5, atol=1e-9) | np.isclose(last, 1.0, atol=1e-9))


# -- forest and parity -------------------------------------------------------


def test_forest_example():
    inst = build_instance(points=[[0], [1], [3]])
    f = build_forest(inst, [0, 1, 2])
    assert f.level == {0: 0, 1: 1, 2: 2}
    assert f.parent == {0: ROOT, 1: 0, 2: 1}
    assert f.nearest_other == {0: 1, 1: 0, 2: 1}


def test_forest_singleton():
    with pytest.raises(SingletonSError):
        build_forest(build_instance(points=[[0], [1]]), [0])


@settings(max_examples=80, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 30), st.just(2)), elements=st.integers(0, 8).map(float), unique=False))
def test_forest_invariants(pts):
    inst = build_instance(points=pts)
    # S from a filter so members are pairwise distinct
    S = filter_points(inst, np.zeros(inst.n)).S
    if len(S) < 2:
        return
    f = build_forest(inst, S)
    want = {frozenset((u, f.nearest_other[u])) for u in S}
    assert f.edges() == want
    for u, par in f.parent.items():
        if par == ROOT:
            assert f.level[u] == 0
        else:
            assert f.level[u] == f.level[par] + 1
            assert f.level[u] % 2 != f.level[par] % 2
    for u in S:
        others = [w for w in S if w != u]
        assert inst.dist[u, f.nearest_other[u]] == min(inst.dist[u, w] for w in others)


def test_parity_select_even_wins_ties():
    inst = build_instance(points=[[0], [1], [3], [6]])
    f = build_forest(inst, [0, 1, 2, 3])
    T, E, O = parity_select([0, 1, 2, 3], [0.5, 0.5, 0.5, 0.5], f)
    assert len(E) == len(O) == 2 and T == sorted(E)


# -- beta search --------------------------------------------------------------


def _lp_instance(seed, n=60, k=5, p=2):
    rng = np.random.default_rng(seed)
    inst = build_instance(points=rng.uniform(0, 100, size=(n, 2)))
    r = fair_radii(inst, k)
    sol = solve_lp(build_lp(inst, r, k, p))
    return inst, r, cost_shares(inst, sol.x, p), sol


PINNED_BETA = {
    0: 0.25002835355806585,
    1: 0.25002835355806585,
    2: 0.25002835355806585,
    3: 0.3904701298211812,
    4: 0.5073598735134571,
}


@pytest.mark.parametrize("seed", sorted(PINNED_BETA))
def test_beta_search_pinned(seed):
    inst, r, C, _ = _lp_instance(seed)
    beta = beta_search(inst, r, C, 5, 2)
    assert beta == pytest.approx(PINNED_BETA[seed], rel=1e-3)
    assert filter_count(inst, r, C, 2, beta) <= 5
    assert filter_count(inst, r, C, 2, beta / (1 + BETA_REL_TOL)) > 5


def test_beta_search_at_most_two_when_two_works():
    inst, r, C, _ = _lp_instance(7)
    assert filter_count(inst, r, C, 2, 2.0) <= 5
    assert beta_search(inst, r, C, 5, 2) <= 2.0


def test_beta_search_k_equals_n():
    inst, r, C, _ = _lp_instance(8, n=12, k=3)
    assert beta_search(inst, fair_radii(inst, 12), np.zeros(12), 12, 2) == BETA_MIN


def test_beta_search_no_feasible():
    inst = build_instance(points=[[0], [10], [20]])
    with pytest.raises(NoFeasibleBetaError):
        beta_search(inst, np.zeros(3), np.zeros(3), 1, 1)


# -- the full rounding -------------------------------------------------------


def test_fair_round_requires_feasible_lp():
    inst = build_instance(points=[[0], [10]])
    with pytest.raises(InfeasibleInstanceError):
        fair_round(inst, [0, 0], LpSolution(None, None, math.nan, INFEASIBLE), 1, 1)


def test_fair_round_on_lp_optimum():
    rng = np.random.default_rng(9)
    for _ in range(20):
        n = int(rng.integers(10, 60))
        k = int(rng.integers(2, 8))
        p = int(rng.integers(1, 3))
        inst = random_euclidean(rng, n)
        r = fair_radii(inst, k)
        sol = solve_lp(build_lp(inst, r, k, p))
        for beta in (2.0, "search"):
            rs = fair_round(inst, r, sol, k, p, beta)
            d = distances_to(inst, rs.T)
            assert 1 <= len(rs.T) <= k and set(rs.T) <= set(rs.S)
            assert np.all(d <= 8 * r + 1e-9)
            assert math.fsum(d**p) <= 2 ** (p + 2) * sol.objective + 1e-9
            assert rs.beta <= 2.0


def test_fair_round_full_path():
    rng = np.random.default_rng(10)
    full = 0
    for _ in range(60):
        inst, r, model, sol, k, p = mixture_instance(rng)
        rs = fair_round(inst, r, sol, k, p)
        d = distances_to(inst, rs.T)
        assert 1 <= len(rs.T) <= k and set(rs.T) <= set(rs.S)
        assert np.all(d <= 8 * r + 1e-9)
        assert math.fsum(d**p) <= 2 ** (p + 2) * sol.objective * (1 + 1e-9)
        if not rs.shortcut:
            full += 1
            for phase in ("move_rest", "smudge", "halfint"):
                assert math.fsum(rs.y_trace[phase]) == pytest.approx(k, abs=1e-6)
            assert rs.y_trace["smudge"].min() >= 0.5 - 1e-6
            assert rs.y_trace["smudge"].max() <= 1 + 1e-6
            yh = rs.y_trace["halfint"]
            assert np.all(np.isclose(yh, 0.5, atol=1e-6) | np.isclose(yh, 1.0, atol=1e-6))
            T = set(rs.T)
            for u in set(rs.S) - T:
                assert rs.forest.nearest_other[u] in T
            _, E, O = parity_select(rs.S, yh, rs.forest)
            assert len(T) == int(np.sum(yh > 0.75)) + min(len(E), len(O)) <= k
    assert full >= 10


def test_fair_round_deterministic():
    inst, r, C, sol = _lp_instance(11)
    a = fair_round(inst, r, sol, 5, 2, "search")
    b = fair_round(inst, r, sol, 5, 2, "search")
    assert a.T == b.T and a.beta == b.beta
