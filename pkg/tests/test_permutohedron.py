import itertools
from fractions import Fraction

import pytest

from gridlab.errors import ContractError
from gridlab.measures import RationalPmf
from gridlab.permutohedron import (
    count_deterministic_consistent,
    density_from_weights,
    discrete_report,
    enumerate_deterministic_consistent,
    extreme_points_of_sigma_polytope,
    extreme_sigma,
    in_convex_hull,
    ordering_of,
    relabeling_to_max,
    scramble_mean_max,
    table_from_choices,
    verify_weight_tuples,
    weight_tuple,
)
from gridlab.strategies import StrategyTable, is_consistent, sigma_discrete, sigma_max_pmf


def _cyclic():
    return table_from_choices(3, 2, {(1, 2): 1, (2, 3): 2, (1, 3): 3})


def test_extreme_sigma_is_relabelled_max():
    assert extreme_sigma((1, 2, 3, 4), 4, 2) == sigma_max_pmf(4, 2)
    p = extreme_sigma((2, 4, 1, 3), 4, 2).fractions()
    # the most preferred label gets the largest mass
    assert p[3 - 1] == Fraction(7, 16) and p[2 - 1] == Fraction(1, 16)


def test_counts_of_deterministic_tables():
    assert count_deterministic_consistent(3, 2) == 8
    assert count_deterministic_consistent(3, 3) == 192
    tables = enumerate_deterministic_consistent(3, 2)
    assert len(tables) == 8 and all(is_consistent(t) for t in tables)


@pytest.mark.parametrize("K,D", [(3, 2), (4, 2), (3, 3), (2, 2), (2, 3)])
def test_extreme_points_are_orderings(K, D):
    pts = extreme_points_of_sigma_polytope(K, D)
    expect = {extreme_sigma(a, K, D) for a in itertools.permutations(range(1, K + 1))}
    assert set(pts) == expect and len(pts) == len(expect)


@pytest.mark.parametrize("K,D", [(3, 2), (3, 3)])
def test_both_hull_routes_agree(K, D):
    assert set(extreme_points_of_sigma_polytope(K, D, "minkowski")) == set(
        extreme_points_of_sigma_polytope(K, D, "enumerate"))


def test_hull_membership():
    square = [[Fraction(0), Fraction(0)], [Fraction(1), Fraction(0)], [Fraction(0), Fraction(1)], [Fraction(1), Fraction(1)]]
    assert in_convex_hull([Fraction(1, 2), Fraction(1, 3)], square)
    assert not in_convex_hull([Fraction(3, 2), Fraction(0)], square)
    assert in_convex_hull([Fraction(1), Fraction(1)], square)


def test_cyclic_table_is_not_extreme():
    c = _cyclic()
    assert is_consistent(c)
    assert sigma_discrete(c).fractions() == [Fraction(1, 3)] * 3
    orders = [extreme_sigma(a, 3, 2) for a in itertools.permutations(range(1, 4))]
    assert RationalPmf.mix(orders, [Fraction(1, 6)] * 6) == sigma_discrete(c)
    assert ordering_of(c) is None


@pytest.mark.parametrize("K,D", [(4, 2), (5, 2), (4, 3)])
def test_weight_tuples_of_greedy_tables(K, D):
    for alpha in itertools.permutations(range(1, K + 1)):
        assert verify_weight_tuples(StrategyTable.greedy(alpha, D)).all_perm_of_D10


def test_weight_tuple_examples():
    assert weight_tuple(StrategyTable.maximum(4, 2), (1, 2, 3)) == (0, 1, 2)
    assert weight_tuple(_cyclic(), (1, 2, 3)) == (1, 1, 1)
    rep = verify_weight_tuples(_cyclic())
    assert not rep.all_perm_of_D10 and rep.counterexamples[0][1] == (1, 1, 1)


def test_weight_tuple_needs_distinct_labels():
    with pytest.raises(ContractError):
        weight_tuple(StrategyTable.maximum(4, 2), (1, 1, 3))


def test_density_from_weights_is_scaled_pmf():
    for t in (StrategyTable.maximum(4, 2), _cyclic(), StrategyTable.greedy((2, 3, 1), 3)):
        assert density_from_weights(t) == [t.K * x for x in sigma_discrete(t).fractions()]


def test_scramble_supremum():
    best, phi = scramble_mean_max(StrategyTable.greedy((4, 2, 1, 3), 2))
    assert best == Fraction(50, 16)
    assert scramble_mean_max(StrategyTable.uniform(4, 2))[0] == Fraction(5, 2)
    assert relabeling_to_max(StrategyTable.greedy((4, 2, 1, 3), 2)) == (4, 2, 1, 3)


def test_discrete_report():
    r = discrete_report(4, 2)
    assert r.tables == 64 and len(r.extreme_pmfs) == 24
    assert r.value_multiset_ok and r.bijection_ok and r.weight_tuples_ok and r.scramble_ok
    assert sorted(r.extreme_pmfs[0].value_multiset()) == [Fraction(n, 16) for n in (1, 3, 5, 7)]
