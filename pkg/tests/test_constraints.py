import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from budgetmax.constraints import (Blocked, ConstraintSystem, LaminarMatroid, community_matroid,
                                   normalize_costs, product_matroid, uniform_capacity,
                                   user_matroid)

GROUND = [(i, j) for i in range(3) for j in range(4)]


def test_normalize_costs_examples():
    ks = normalize_costs({(0, 0): 0.5, (0, 1): 3.0}, [2.0])
    assert ks.costs == {(0, 0): 0.25} and ks.dropped == [(0, 1)]
    assert uniform_capacity(0.3, 1.0) == 3
    with pytest.raises(ValueError):
        normalize_costs({(0, 0): 0.0}, [1.0])
    with pytest.raises(ValueError):
        normalize_costs({(0, 0): 1.0}, [-1.0])


def test_can_add_examples():
    sys_ = ConstraintSystem(GROUND, [user_matroid(1)])
    st_ = sys_.new_state()
    assert st_.check((0, 2)) is None
    st_.add((0, 2))
    assert st_.check((1, 2)) == Blocked("matroid", 0)

    ks = normalize_costs({z: (0.8 if z == (0, 0) else 0.3) for z in GROUND}, [1.0] * 3)
    sys_ = ConstraintSystem(GROUND, [user_matroid(2)], ks)
    st_ = sys_.new_state()
    st_.add((0, 0))
    assert st_.check((0, 1)) == Blocked("knapsack", 0)
    assert st_.active_knapsack_count == 1


def test_matroid_block_takes_precedence_over_knapsack():
    ks = normalize_costs({z: 0.9 for z in GROUND}, [1.0] * 3)
    sys_ = ConstraintSystem(GROUND, [user_matroid(1)], ks)
    st_ = sys_.new_state()
    st_.add((0, 0))
    assert st_.check((0, 0)).reason == "matroid"
    assert st_.active_knapsack_count == 0


def test_unit_budget_tolerates_float_sums():
    ground = [(0, j) for j in range(10)]
    sys_ = ConstraintSystem(ground, [user_matroid(1)], normalize_costs({z: 0.1 for z in ground}, [1.0]))
    assert sys_.is_feasible(ground)
    st_ = sys_.new_state()
    for z in ground:
        assert st_.can_add(z)
        st_.add(z)


def test_laminar_rejects_crossing_groups():
    with pytest.raises(ValueError, match="laminar"):
        LaminarMatroid([({1, 2}, 1), ({2, 3}, 1)])
    LaminarMatroid([({1, 2, 3}, 2), ({2, 3}, 1), ({4}, 0)])


def _independent_sets(matroid, ground):
    return [frozenset(S) for r in range(len(ground) + 1) for S in itertools.combinations(ground, r)
            if matroid.is_independent(S)]


def _matroids():
    rg = np.random.default_rng(3)
    yield user_matroid({j: int(rg.integers(0, 3)) for j in range(4)})
    yield product_matroid([1, 2, 0])
    yield community_matroid(GROUND, [({0, 1, 2, 3}, 5), ({0, 1}, 2), ({0}, 1), ({3}, 1)])


@pytest.mark.parametrize("m", list(_matroids()), ids=["users", "products", "laminar"])
def test_matroid_axioms(m):
    ground = GROUND[:9]
    indep = set(_independent_sets(m, ground))
    assert frozenset() in indep
    for Y in indep:
        for z in Y:
            assert Y - {z} in indep
    rg = np.random.default_rng(0)
    pool = sorted(indep, key=len)
    for _ in range(400):
        X, Y = (pool[k] for k in rg.integers(len(pool), size=2))
        if len(Y) > len(X):
            assert any(X | {z} in indep for z in Y - X)


@pytest.mark.parametrize("m", list(_matroids()), ids=["users", "products", "laminar"])
def test_incremental_oracle_agrees_with_full_check(m):
    sys_ = ConstraintSystem(GROUND, [m])
    rg = np.random.default_rng(1)
    for _ in range(50):
        st_ = sys_.new_state()
        S = []
        for e in rg.permutation(len(GROUND)):
            z = GROUND[e]
            assert st_.can_add(z) == sys_.is_feasible(S + [z])
            if st_.can_add(z):
                st_.add(z)
                S.append(z)


def _random_system(rg, knapsack):
    ground = [(i, j) for i in range(3) for j in range(5)]
    matroids = [user_matroid(int(rg.integers(1, 3))), product_matroid([int(rg.integers(1, 4)) for _ in range(3)])]
    ks = normalize_costs({z: float(rg.uniform(0.1, 1)) for z in ground}, [1.0] * 3) if knapsack else None
    return ConstraintSystem(ground, matroids, ks)


@pytest.mark.parametrize("knapsack", [False, True])
def test_enumerate_feasible_matches_exhaustive_filter(knapsack):
    rg = np.random.default_rng(2)
    sys_ = _random_system(rg, knapsack)
    got = {frozenset(S) for S in sys_.enumerate_feasible()}
    want = {frozenset(S) for r in range(len(sys_.ground) + 1)
            for S in itertools.combinations(sys_.ground, r) if sys_.is_feasible(S)}
    assert got == want
    for S in got:  # downward closure
        assert all(S - {z} in got for z in S)


def test_enumeration_bound():
    ground = [(i, j) for i in range(5) for j in range(5)]
    with pytest.raises(ValueError, match="bound"):
        list(ConstraintSystem(ground, [user_matroid(1)]).enumerate_feasible())


def _maximal_subsets(sys_, Q):
    feas = [set(S) for S in sys_.enumerate_feasible(Q)]
    return [S for S in feas if all(not sys_.is_feasible(S | {z}) for z in set(Q) - S)]


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), P=st.integers(1, 3))
def test_maximal_sets_differ_by_at_most_factor_P(seed, P):
    rg = np.random.default_rng(seed)
    ground = [(i, j) for i in range(3) for j in range(4)]
    pool = [user_matroid(int(rg.integers(1, 3))), product_matroid([int(rg.integers(1, 3)) for _ in range(3)]),
            community_matroid(ground, [({0, 1}, int(rg.integers(1, 4))), ({2, 3}, int(rg.integers(1, 4)))])]
    sys_ = ConstraintSystem(ground, pool[:P])
    Q = [ground[k] for k in sorted(rg.choice(len(ground), 8, replace=False))]
    sizes = [len(S) for S in _maximal_subsets(sys_, Q)]
    assert max(sizes) <= P * min(sizes)
