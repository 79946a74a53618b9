import random
from fractions import Fraction
from itertools import combinations

import pytest

from ocf.arbitration import Deviation
from ocf.core import ContractViolation, InteractionGraph, validate_outcome
from ocf.gadgets import (
    X3cInstance,
    has_exact_cover,
    independent_set_gadget,
    set_cover_arbitration_gadget,
    x3c_gadget,
)
from ocf.oracle import EnumerationBudget, brute_arbval, superadditive_cover

F = Fraction
BIG = EnumerationBudget(max_agents=16, max_weight=6, max_structures=10**7)


def test_x3c_instance_invariants():
    with pytest.raises(ContractViolation):
        X3cInstance(4, (frozenset({0, 1, 2}),))
    with pytest.raises(ContractViolation):
        X3cInstance(3, (frozenset({0, 1}),))
    with pytest.raises(ContractViolation):
        X3cInstance(3, (frozenset({0, 1, 2}), frozenset({0, 1, 2})))


def test_x3c_examples():
    g, v_bar = x3c_gadget(X3cInstance(3, (frozenset({0, 1, 2}),)))
    assert v_bar == 6
    assert superadditive_cover(g, g.weights, BIG)[0] == 6
    g, v_bar = x3c_gadget(X3cInstance(6, (frozenset({0, 1, 2}), frozenset({0, 1, 3}))))
    assert v_bar == 12
    assert superadditive_cover(g, g.weights, BIG)[0] == 11
    g, v_bar = x3c_gadget(X3cInstance(6, (frozenset({0, 1, 2}), frozenset({3, 4, 5}))))
    assert v_bar == 12
    assert superadditive_cover(g, g.weights, BIG)[0] == 12


def test_x3c_shape():
    g, _ = x3c_gadget(X3cInstance(6, (frozenset({0, 1, 2}), frozenset({1, 2, 3}))))
    assert g.charfun.k == 2
    assert g.w_max == 3
    assert g.interaction is not None


def test_x3c_label_equivalence():
    rng = random.Random(131)
    triples = [frozenset(c) for c in combinations(range(6), 3)]
    for _ in range(12):
        chosen = tuple(rng.sample(triples, rng.randint(1, 3)))
        inst = X3cInstance(6, chosen)
        g, v_bar = x3c_gadget(inst)
        value, _ = superadditive_cover(g, g.weights, BIG)
        assert (value >= v_bar) == has_exact_cover(inst)


def test_independent_set_examples():
    tri = InteractionGraph.from_pairs(3, [(0, 1), (1, 2), (0, 2)])
    g, bar = independent_set_gadget(tri, 1, F(1, 10))
    assert superadditive_cover(g, g.weights, BIG)[0] >= bar
    g, bar = independent_set_gadget(tri, 2, F(1, 10))
    assert superadditive_cover(g, g.weights, BIG)[0] < bar
    edgeless = InteractionGraph.from_pairs(2, [])
    g, bar = independent_set_gadget(edgeless, 2, F(1, 10))
    assert superadditive_cover(g, g.weights, BIG)[0] >= bar


def test_independent_set_is_not_pairwise():
    tri = InteractionGraph.from_pairs(3, [(0, 1), (1, 2), (0, 2)])
    g, _ = independent_set_gadget(tri, 1)
    assert g.charfun.k > 2  # wide supports: only the oracle consumes this game


def test_independent_set_label_equivalence():
    rng = random.Random(137)

    def max_independent(graph):
        best = 0
        for mask in range(1 << graph.n):
            verts = [i for i in range(graph.n) if mask >> i & 1]
            if all(not graph.has_edge(a, b) for a in verts for b in verts if a < b):
                best = max(best, len(verts))
        return best

    for _ in range(10):
        n = rng.randint(2, 5)
        edges = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.5]
        graph = InteractionGraph.from_pairs(n, edges)
        m = rng.randint(1, n)
        g, bar = independent_set_gadget(graph, m)
        value, _ = superadditive_cover(g, g.weights, BIG)
        assert (value >= bar) == (max_independent(graph) >= m)


def test_set_cover_examples():
    g, o, arb, bar = set_cover_arbitration_gadget(frozenset({0}), (frozenset({0}),), 1)
    assert bar == 15
    assert validate_outcome(o, g) == []
    value, _ = brute_arbval(g, arb, o, frozenset({0}), BIG)
    assert value >= bar
    g, o, arb, bar = set_cover_arbitration_gadget(frozenset({0, 1}), (frozenset({0}),), 1)
    value, _ = brute_arbval(g, arb, o, frozenset({0}), BIG)
    assert value < bar
    # keeping the full collection is always enough when it covers
    g, o, arb, bar = set_cover_arbitration_gadget(
        frozenset({0, 1}), (frozenset({0}), frozenset({1})), 2
    )
    value, _ = brute_arbval(g, arb, o, frozenset({0}), BIG)
    assert value >= bar


def test_set_cover_labels():
    cases = [
        (frozenset({0, 1, 2}), (frozenset({0, 1}), frozenset({2}), frozenset({1, 2})), 2, True),
        (frozenset({0, 1, 2}), (frozenset({0, 1}), frozenset({1, 2})), 1, False),
        (frozenset({0, 1, 2, 3}), (frozenset({0, 1}), frozenset({2, 3})), 2, True),
        (frozenset({0, 1, 2, 3}), (frozenset({0, 1}), frozenset({1, 2}), frozenset({2, 3})), 2, True),
        (frozenset({0, 1, 2, 3}), (frozenset({0, 1}), frozenset({1, 2}), frozenset({0, 2})), 3, False),
    ]
    for elements, subsets, cover_size, label in cases:
        g, o, arb, bar = set_cover_arbitration_gadget(elements, subsets, cover_size)
        value, _ = brute_arbval(g, arb, o, frozenset({0}), BIG)
        assert (value >= bar) == label


def test_set_cover_arbitration_is_non_local():
    """Two deviations differing only on one pair coalition move the big
    coalition's payment: the locality probe every local rule passes."""
    g, o, arb, _ = set_cover_arbitration_gadget(
        frozenset({0, 1}), (frozenset({0}), frozenset({1})), 2
    )
    S = frozenset({0})
    keep_all = Deviation()
    drop_one = Deviation(withdrawals={0: (1, 0)})
    big = len(o.structure) - 1
    p_keep = arb.deviation_payoffs(g, o, S, keep_all)
    p_drop = arb.deviation_payoffs(g, o, S, drop_one)
    # the big coalition's own withdrawal is unchanged, yet its payment differs
    assert keep_all.withdrawal(big, 2) == drop_one.withdrawal(big, 2)
    assert p_keep[big] != p_drop[big]
