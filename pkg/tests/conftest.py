"""Shared fixtures: the hand-built G1/O1/L1 instances and random generators.

G1 is the two-agent game used throughout the docs: weights (2, 1), agent 0
makes 1 from one unit alone or 3 from both, agent 1 makes 2 alone, and the
pair coalition (1, 1) makes 4.  O1 splits the pair's 4 evenly and gives agent
0 its solo 1.  L1 is the two-agent bottleneck instance with a joint task at
price 3 and a solo task for agent 0 at price 1.
"""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from ocf.core import GameDef, InteractionGraph, Outcome, make_charfun, support
from ocf.lbg import LbgInstance, make_lbg_instance
from ocf.oracle import EnumerationBudget


@pytest.fixture
def g1() -> GameDef:
    cf = make_charfun(
        2,
        2,
        [
            ((0,), (1,), Fraction(1)),
            ((0,), (2,), Fraction(3)),
            ((1,), (1,), Fraction(2)),
            ((0, 1), (1, 1), Fraction(4)),
        ],
    )
    return GameDef(
        n=2,
        weights=(2, 1),
        charfun=cf,
        interaction=InteractionGraph.from_pairs(2, [(0, 1)]),
    )


@pytest.fixture
def o1() -> Outcome:
    return Outcome(
        structure=((1, 1), (1, 0)),
        imputation=((Fraction(2), Fraction(2)), (Fraction(1), Fraction(0))),
    )


@pytest.fixture
def l1() -> LbgInstance:
    return make_lbg_instance(
        2,
        [Fraction(2), Fraction(1)],
        [({0, 1}, Fraction(3)), ({0}, Fraction(1)), ({1}, Fraction(0))],
    )


@pytest.fixture
def big_budget() -> EnumerationBudget:
    return EnumerationBudget(max_agents=16, max_weight=6, max_structures=10**7)


def random_tree_game(rng: random.Random, nmax: int = 5, wmax: int = 3, vmax: int = 10) -> GameDef:
    """Random 2-OCF game over a random tree, sparse value table."""
    n = rng.randint(2, nmax)
    weights = tuple(rng.randint(1, wmax) for _ in range(n))
    edges = [(rng.randrange(i), i) for i in range(1, n)]
    graph = InteractionGraph.from_pairs(n, edges)
    entries = {}
    for i in range(n):
        for w in range(1, weights[i] + 1):
            if rng.random() < 0.5:
                entries[((i,), (w,))] = Fraction(rng.randint(1, vmax))
    for a, b in edges:
        a, b = min(a, b), max(a, b)
        for wa in range(1, weights[a] + 1):
            for wb in range(1, weights[b] + 1):
                if rng.random() < 0.5:
                    entries[((a, b), (wa, wb))] = Fraction(rng.randint(1, vmax))
    cf = make_charfun(n, 2, [(s, c, v) for (s, c), v in entries.items()])
    return GameDef(n=n, weights=weights, charfun=cf, interaction=graph)


def random_graph_game(rng: random.Random, nmax: int = 5, wmax: int = 3, vmax: int = 10) -> GameDef:
    """Random 2-OCF game over a cycle or clique interaction graph."""
    n = rng.randint(3, nmax)
    if rng.random() < 0.5:
        edges = [(i, (i + 1) % n) for i in range(n)]
        if n >= 4 and rng.random() < 0.5:
            edges.append((0, 2))
    else:
        n = min(n, 4)
        edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    graph = InteractionGraph.from_pairs(n, edges)
    weights = tuple(rng.randint(1, wmax) for _ in range(n))
    entries = {}
    for i in range(n):
        for w in range(1, weights[i] + 1):
            if rng.random() < 0.5:
                entries[((i,), (w,))] = Fraction(rng.randint(1, vmax))
    for a, b in [tuple(sorted(e)) for e in edges]:
        for wa in range(1, weights[a] + 1):
            for wb in range(1, weights[b] + 1):
                if rng.random() < 0.45:
                    entries[((a, b), (wa, wb))] = Fraction(rng.randint(1, vmax))
    cf = make_charfun(n, 2, [(s, c, v) for (s, c), v in entries.items()])
    return GameDef(n=n, weights=weights, charfun=cf, interaction=graph)


def random_structure(rng: random.Random, g: GameDef) -> tuple[tuple[int, ...], ...]:
    """Feasible pairwise-shaped structure: supports are vertices or edges."""
    n = g.n
    remaining = list(g.weights)
    cs = []
    supports = [(i,) for i in range(n)] + list(g.interaction.simple_edges())
    for _ in range(rng.randint(0, 2 * n)):
        sup = rng.choice(supports)
        if any(remaining[i] == 0 for i in sup):
            continue
        c = [0] * n
        for i in sup:
            c[i] = rng.randint(1, remaining[i])
        for i in sup:
            remaining[i] -= c[i]
        cs.append(tuple(c))
    return tuple(cs)


def random_outcome(rng: random.Random, g: GameDef) -> Outcome:
    """Valid outcome: random structure plus a random exact split of each value."""
    cs = random_structure(rng, g)
    imp = []
    for c in cs:
        v = g.charfun.value(c)
        sup = sorted(support(c))
        x = [Fraction(0)] * g.n
        if sup and v > 0:
            cuts = sorted(rng.randint(0, 2 * v.numerator) for _ in range(len(sup) - 1))
            prev = 0
            for i, cut in zip(sup, cuts + [2 * v.numerator]):
                x[i] = Fraction(cut - prev, 2 * v.denominator)
                prev = cut
        imp.append(tuple(x))
    return Outcome(structure=cs, imputation=tuple(imp))


def random_lbg_instance(rng: random.Random, nmax: int = 5, tmax: int = 8) -> LbgInstance:
    """Random bottleneck instance with denominators up to 4."""
    n = rng.randint(1, nmax)
    weights = [Fraction(rng.randint(1, 6), rng.choice([1, 2, 4])) for _ in range(n)]
    tasks = []
    seen = set()
    for _ in range(rng.randint(0, tmax)):
        k = rng.randint(1, n)
        agents = frozenset(rng.sample(range(n), k))
        if agents in seen:
            continue
        seen.add(agents)
        tasks.append((agents, Fraction(rng.randint(0, 8), rng.choice([1, 2, 4]))))
    return make_lbg_instance(n, weights, tasks)
