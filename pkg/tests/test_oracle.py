import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ocf.arbitration import CONSERVATIVE, REFINED, SENSITIVE
from ocf.core import (
    GameDef,
    Outcome,
    make_charfun,
    structure_value,
    structure_weight,
    validate_outcome,
)
from ocf.oracle import (
    BudgetExceededError,
    EnumerationBudget,
    brute_arbval,
    brute_checkcore,
    brute_is_stable,
    count_structures,
    enumerate_structures,
    superadditive_cover,
)
from conftest import random_outcome, random_tree_game


def test_cover_examples(g1):
    v, w = superadditive_cover(g1, (2, 1))
    assert v == 5
    assert structure_weight(w, 2) == (2, 1)
    assert structure_value(g1, w) == 5
    assert sorted(w) in ([(0, 1), (2, 0)], [(0, 1), (1, 0), (1, 1)], [(1, 0), (1, 1)])
    assert superadditive_cover(g1, (0, 0)) == (0, ())
    assert superadditive_cover(g1, (1, 0))[0] == 1


def test_cover_budget_guard(g1):
    tight = EnumerationBudget(max_agents=1, max_weight=4, max_structures=100)
    with pytest.raises(BudgetExceededError):
        superadditive_cover(g1, (2, 1), tight)
    # explicit opt-out
    assert superadditive_cover(g1, (2, 1), budget=None)[0] == 5


def test_enumerate_examples(g1):
    got = list(enumerate_structures(g1, (1, 1)))
    assert len(got) == len(set(got)) == 5
    assert set(got) == {(), ((1, 0),), ((0, 1),), ((0, 1), (1, 0)), ((1, 1),)}
    assert list(enumerate_structures(g1, (0, 0))) == [()]


def test_enumerate_single_agent():
    cf = make_charfun(1, 1, [])
    g = GameDef(n=1, weights=(2,), charfun=cf)
    got = list(enumerate_structures(g, (2,)))
    assert set(got) == {(), ((1,),), ((2,),), ((1,), (1,))}
    assert count_structures(g, (2,)) == 4


def test_enumerate_budget_guard(g1):
    tight = EnumerationBudget(max_agents=6, max_weight=4, max_structures=3)
    with pytest.raises(BudgetExceededError):
        list(enumerate_structures(g1, (2, 1), tight))


def test_cover_equals_enumeration_max():
    rng = random.Random(7)
    for _ in range(40):
        g = random_tree_game(rng, nmax=4)
        c = tuple(rng.randint(0, w) for w in g.weights)
        best = max(
            (structure_value(g, cs) for cs in enumerate_structures(g, c)),
            default=Fraction(0),
        )
        assert superadditive_cover(g, c)[0] == best


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_cover_is_superadditive(seed):
    rng = random.Random(seed)
    g = random_tree_game(rng, nmax=4)
    a = tuple(rng.randint(0, w) for w in g.weights)
    b = tuple(rng.randint(0, w - x) for x, w in zip(a, g.weights))
    total = tuple(x + y for x, y in zip(a, b))
    va, _ = superadditive_cover(g, a)
    vb, _ = superadditive_cover(g, b)
    vt, _ = superadditive_cover(g, total)
    assert vt >= va + vb


def test_brute_arbval_examples(g1, o1):
    # conservative never depends on the outcome: it's the solo cover
    v, _ = brute_arbval(g1, CONSERVATIVE, o1, frozenset({0}))
    assert v == superadditive_cover(g1, (2, 0))[0] == 3
    v, _ = brute_arbval(g1, REFINED, o1, frozenset({0}))
    assert v == 3
    v, _ = brute_arbval(g1, REFINED, o1, frozenset({1}))
    assert v == 2


def test_brute_arbval_conservative_ignores_imputation():
    from ocf.core import support

    rng = random.Random(11)
    for _ in range(20):
        g = random_tree_game(rng, nmax=4)
        o_a = random_outcome(rng, g)
        # same structure, everything paid to the top support member instead
        imp = []
        for c in o_a.structure:
            x = [Fraction(0)] * g.n
            sup = sorted(support(c))
            if sup:
                x[sup[-1]] = g.charfun.value(c)
            imp.append(tuple(x))
        o_b = Outcome(structure=o_a.structure, imputation=tuple(imp))
        S = frozenset(rng.sample(range(g.n), rng.randint(1, g.n)))
        va, _ = brute_arbval(g, CONSERVATIVE, o_a, S)
        vb, _ = brute_arbval(g, CONSERVATIVE, o_b, S)
        assert va == vb


def test_refined_at_least_conservative():
    rng = random.Random(13)
    for _ in range(30):
        g = random_tree_game(rng, nmax=4)
        o = random_outcome(rng, g)
        S = frozenset(rng.sample(range(g.n), rng.randint(1, g.n)))
        vc, _ = brute_arbval(g, CONSERVATIVE, o, S)
        vr, _ = brute_arbval(g, REFINED, o, S)
        assert vr >= vc


def test_brute_arbval_witness_achieves_value(g1, o1):
    from ocf.arbitration import deviation_total

    for rule in (CONSERVATIVE, REFINED, SENSITIVE):
        for S in (frozenset({0}), frozenset({1}), frozenset({0, 1})):
            v, (dev, post) = brute_arbval(g1, rule, o1, S)
            assert deviation_total(g1, o1, S, dev, rule, post) == v


def test_brute_checkcore_examples(g1, o1):
    assert brute_checkcore(g1, CONSERVATIVE, o1) is None
    assert brute_checkcore(g1, REFINED, o1) is None
    skew = Outcome(
        structure=((1, 1), (1, 0)),
        imputation=((Fraction(4), Fraction(0)), (Fraction(1), Fraction(0))),
    )
    violation = brute_checkcore(g1, CONSERVATIVE, skew)
    assert violation is not None
    assert violation.agents == frozenset({1})
    assert violation.excess == 2


def test_brute_is_stable_examples(g1):
    imp = brute_is_stable(g1, CONSERVATIVE, ((1, 1), (1, 0)))
    assert imp is not None
    o = Outcome(structure=((1, 1), (1, 0)), imputation=imp)
    assert validate_outcome(o, g1) == []
    assert o.payoff_to_agent(0) >= 3 and o.payoff_to_agent(1) >= 2
    # agent 1 cannot be paid when it sits in no coalition
    assert brute_is_stable(g1, CONSERVATIVE, ((2, 0),)) is None


def test_brute_is_stable_single_agent():
    cf = make_charfun(1, 1, [((0,), (2,), Fraction(7))])
    g = GameDef(n=1, weights=(2,), charfun=cf)
    imp = brute_is_stable(g, CONSERVATIVE, ((2,),))
    assert imp == ((Fraction(7),),)


def test_brute_is_stable_rejects_sensitive(g1):
    from ocf.arbitration import UnsupportedRuleError

    with pytest.raises(UnsupportedRuleError):
        brute_is_stable(g1, SENSITIVE, ((1, 1),))


def test_checkcore_budget(g1, o1):
    with pytest.raises(BudgetExceededError):
        brute_checkcore(g1, CONSERVATIVE, o1, EnumerationBudget(max_agents=1))
