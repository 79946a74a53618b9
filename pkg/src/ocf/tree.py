"""Pseudo-polynomial solvers for 2-OCF games on tree interaction graphs.

All four problems run in time polynomial in n and the largest weight once
coalitions are pairwise (k <= 2) and the interaction graph is a forest:

* ``optval_tree``    - best coalition structure for a resource vector, by a
                       leaves-to-root merge of per-agent and per-edge cover
                       tables.
* ``arbval_local``   - best deviation value of a small set S under any local
                       rule, on any interaction structure, by a DP over
                       withdrawal vectors (table size grows as W^|S|).
* ``arbval_tree``    - best deviation value of an arbitrary S whose induced
                       subgraph is acyclic: each deviator's solo table is
                       replaced by one that may also keep resources with
                       non-deviating neighbours for arbitration payoffs.
* ``checkcore_tree`` - maximum excess over all nonempty agent subsets via an
                       in/out table per vertex; positive excess refutes core
                       membership and comes with the violating set.
* ``is_stable_tree`` - cutting-plane search for a stabilizing imputation,
                       using checkcore as the separation oracle.

The tree solvers require the outcome itself to be pairwise-shaped: every
coalition in the structure is supported by a single agent or by the two ends
of an interaction edge.  The brute-force oracle has no such restriction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .arbitration import (
    Deviation,
    LocalArbitrationRule,
    OptimisticRule,
    UnsupportedRuleError,
)
from .core import (
    ZERO,
    Coalition,
    CoalitionStructure,
    ContractViolation,
    GameDef,
    Imputation,
    InteractionGraph,
    Outcome,
    reduce_structure_indices,
    structure_weight,
    support,
    vec_leq,
)
from .covers import CoverTable, single_cover, single_cover_witness
from .lp import LinearProgram, solve_lp
from .oracle import BudgetExceededError, CoreViolation

NEG_INF = float("-inf")


class UnsupportedGameError(ValueError):
    """The game shape is outside this solver's contract."""


class UnsupportedOutcomeError(ValueError):
    """The outcome is not pairwise-shaped over the interaction graph."""


def require_two_ocf_tree(g: GameDef, need_forest: bool = True) -> InteractionGraph:
    if g.charfun.k > 2:
        raise UnsupportedGameError(f"solver requires a 2-OCF game, got k={g.charfun.k}")
    if g.interaction is None:
        raise UnsupportedGameError("solver requires an interaction graph")
    if need_forest and not g.interaction.is_forest():
        raise UnsupportedGameError(
            "interaction graph has a cycle; use the treewidth solver instead"
        )
    return g.interaction


def check_outcome_shape(g: GameDef, o: Outcome) -> None:
    """Light validity: feasible, efficient, no side payments, pairwise-shaped."""
    if g.interaction is None:
        raise UnsupportedGameError("solver requires an interaction graph")
    if len(o.structure) != len(o.imputation):
        raise ContractViolation("imputation length mismatch")
    if not vec_leq(structure_weight(o.structure, g.n), g.weights):
        raise ContractViolation("structure exceeds endowments")
    for j, (c, x) in enumerate(zip(o.structure, o.imputation)):
        sup = support(c)
        if len(sup) > 2:
            raise UnsupportedOutcomeError(
                f"coalition {j} has {len(sup)} contributors; tree solvers need <= 2"
            )
        if len(sup) == 2:
            a, b = sorted(sup)
            if not g.interaction.has_edge(a, b):
                raise UnsupportedOutcomeError(
                    f"coalition {j} spans non-edge ({a},{b})"
                )
        if sum(x, start=ZERO) != g.charfun.value(c):
            raise ContractViolation(f"coalition {j} violates efficiency")
        for i, v in enumerate(x):
            if v < 0 or (v > 0 and i not in sup):
                raise ContractViolation(f"coalition {j} pays outside its support")


@dataclass(frozen=True)
class RootedTree:
    root: int
    vertices: tuple[int, ...]
    children: dict[int, tuple[int, ...]]

    def postorder(self) -> list[int]:
        out: list[int] = []
        stack = [(self.root, False)]
        while stack:
            v, done = stack.pop()
            if done:
                out.append(v)
            else:
                stack.append((v, True))
                for ch in reversed(self.children[v]):
                    stack.append((ch, False))
        return out


def rooted_forest(graph: InteractionGraph, vertices: set[int] | None = None) -> list[RootedTree]:
    """Deterministic rooting: lowest index per component, children ascending."""
    verts = set(range(graph.n)) if vertices is None else set(vertices)
    adj: dict[int, set[int]] = {v: set() for v in verts}
    for a, b in graph.simple_edges():
        if a in verts and b in verts:
            adj[a].add(b)
            adj[b].add(a)
    seen: set[int] = set()
    trees = []
    for start in sorted(verts):
        if start in seen:
            continue
        children: dict[int, tuple[int, ...]] = {}
        order = [start]
        seen.add(start)
        queue = [start]
        while queue:
            v = queue.pop(0)
            kids = tuple(u for u in sorted(adj[v]) if u not in seen)
            children[v] = kids
            for u in kids:
                seen.add(u)
                order.append(u)
                queue.append(u)
        trees.append(RootedTree(root=start, vertices=tuple(order), children=children))
    return trees


# ---------------------------------------------------------------------------
# cover tables


def _single_atoms(g: GameDef, i: int) -> list[tuple[int, Fraction]]:
    out = []
    table = g.charfun.entries.get((i,), {})
    for contrib, value in sorted(table.items()):
        if value > 0:
            out.append((contrib[0], value))
    return out


class SingleTable:
    """v*_i(w): best split of w units of one agent into its own coalitions."""

    def __init__(self, g: GameDef, i: int, cap: int):
        self.agent = i
        self.atoms = _single_atoms(g, i)
        self.values, self.choice = single_cover(self.atoms, cap)

    def value(self, w: int) -> Fraction:
        return self.values[w]

    def witness(self, w: int, n: int) -> list[Coalition]:
        out = []
        for units in single_cover_witness(self.atoms, self.choice, w):
            c = [0] * n
            c[self.agent] = units
            out.append(tuple(c))
        return out


class PairTable:
    """v*_{i,j}(x, y): best structure over supports inside {i, j}."""

    def __init__(self, g: GameDef, i: int, j: int, cap_i: int, cap_j: int):
        self.i, self.j = i, j
        atoms = []
        for c, v in g.charfun.atoms_within(frozenset((i, j))):
            atoms.append(((c[i], c[j]), v))
        self.table = CoverTable(atoms, (cap_i, cap_j))

    def value(self, x: int, y: int) -> Fraction:
        return self.table.value((x, y))

    def witness(self, x: int, y: int, n: int) -> list[Coalition]:
        out = []
        for a in self.table.witness_atoms((x, y)):
            c = [0] * n
            c[self.i], c[self.j] = a
            out.append(tuple(c))
        return out


# ---------------------------------------------------------------------------
# OptVal


class _TreeDp:
    """Leaves-to-root merge with backpointers, parameterized by the per-agent
    solo table so the deviation solver can swap in arbitration-aware ones."""

    def __init__(self, g: GameDef, tree: RootedTree, caps: Coalition, solo):
        self.g = g
        self.tree = tree
        self.caps = caps
        self.solo = {i: solo(i) for i in tree.vertices}
        self.pairs: dict[tuple[int, int], PairTable] = {}
        self.steps: dict[int, list[list]] = {}
        self.bp: dict[int, list[dict[int, tuple[int, int]]]] = {}
        self._run()

    def _pair(self, i: int, j: int) -> PairTable:
        if (i, j) not in self.pairs:
            self.pairs[(i, j)] = PairTable(self.g, i, j, self.caps[i], self.caps[j])
        return self.pairs[(i, j)]

    def _run(self) -> None:
        for i in self.tree.postorder():
            cap = self.caps[i]
            base = [self.solo[i].value(w) for w in range(cap + 1)]
            tables = [base]
            bps: list[dict[int, tuple[int, int]]] = [dict()]
            for ch in self.tree.children[i]:
                pair = self._pair(i, ch)
                child_final = self.steps[ch][-1]
                cap_ch = self.caps[ch]
                prev = tables[-1]
                cur = []
                bp: dict[int, tuple[int, int]] = {}
                for w in range(cap + 1):
                    best = None
                    pick = None
                    for x in range(w + 1):
                        rest = prev[w - x]
                        for y in range(cap_ch + 1):
                            cand = pair.value(x, y) + rest + child_final[cap_ch - y]
                            if best is None or cand > best:
                                best = cand
                                pick = (x, y)
                    cur.append(best)
                    bp[w] = pick
                tables.append(cur)
                bps.append(bp)
            self.steps[i] = tables
            self.bp[i] = bps

    def value(self) -> Fraction:
        return self.steps[self.tree.root][-1][self.caps[self.tree.root]]

    def collect(self, sink: list[Coalition], solo_sink) -> None:
        """Walk backpointers; pair atoms go to sink, solo splits to solo_sink."""
        stack = [(self.tree.root, len(self.tree.children[self.tree.root]), self.caps[self.tree.root])]
        while stack:
            i, step, w = stack.pop()
            if step == 0:
                solo_sink(i, w)
                continue
            ch = self.tree.children[i][step - 1]
            x, y = self.bp[i][step][w]
            sink.extend(self._pair(i, ch).witness(x, y, self.g.n))
            stack.append((i, step - 1, w - x))
            stack.append((ch, len(self.tree.children[ch]), self.caps[ch] - y))


def optval_tree(g: GameDef, c: Coalition) -> tuple[Fraction, CoalitionStructure]:
    """Best structure value for resources ``c`` on a forest, with a witness
    of weight exactly ``c`` (zero-value fillers pad idle resources)."""
    graph = require_two_ocf_tree(g)
    g.check_coalition(c)
    total = ZERO
    atoms: list[Coalition] = []
    for tree in rooted_forest(graph):
        dp = _TreeDp(g, tree, c, solo=lambda i: SingleTable(g, i, c[i]))
        total += dp.value()
        dp.collect(atoms, lambda i, w, dp=dp: atoms.extend(dp.solo[i].witness(w, g.n)))
    used = structure_weight(tuple(atoms), g.n)
    witness = list(atoms)
    for i in range(g.n):
        gap = c[i] - used[i]
        if gap > 0:
            filler = [0] * g.n
            filler[i] = gap
            witness.append(tuple(filler))
    return total, tuple(witness)


# ---------------------------------------------------------------------------
# ArbVal


def _pair_coalitions(o: Outcome, i: int, j: int) -> list[int]:
    """Indices of outcome coalitions supported by exactly {i, j}."""
    return [k for k, c in enumerate(o.structure) if support(c) == frozenset((i, j))]


class KeepTable:
    """Best arbitration payoff for keeping y units of one deviator on one edge.

    Covers the outcome coalitions supported by {dev, other}; keeping k of the
    deviator's contribution in a coalition means withdrawing the rest.
    A knapsack across the edge's coalitions, with per-coalition backpointers.
    """

    def __init__(self, g: GameDef, o: Outcome, rule: LocalArbitrationRule, dev: int, other: int):
        self.dev = dev
        self.indices = _pair_coalitions(o, dev, other)
        n = g.n
        pays: list[list[Fraction]] = []
        caps: list[int] = []
        for j in self.indices:
            c = o.structure[j]
            x = o.imputation[j]
            ci = c[dev]
            row = []
            for keep in range(ci + 1):
                d = [0] * n
                d[dev] = ci - keep
                row.append(rule.coalition_payoff(g.charfun, c, tuple(d), x, frozenset((dev,))))
            pays.append(row)
            caps.append(ci)
        self.cap = sum(caps)
        table: list[list] = [[ZERO] + [NEG_INF] * self.cap]
        bp: list[list[int | None]] = []
        for row, ci in zip(pays, caps):
            prev = table[-1]
            cur = [NEG_INF] * (self.cap + 1)
            cbp: list[int | None] = [None] * (self.cap + 1)
            for y in range(self.cap + 1):
                best = NEG_INF
                pick = None
                for k in range(min(y, ci) + 1):
                    if prev[y - k] == NEG_INF:
                        continue
                    cand = prev[y - k] + row[k]
                    if cand > best:
                        best = cand
                        pick = k
                cur[y] = best
                cbp[y] = pick
            table.append(cur)
            bp.append(cbp)
        self.values = table[-1]
        self._table = table
        self._bp = bp

    def value(self, y: int):
        if y > self.cap:
            return NEG_INF
        return self.values[y]

    def keeps(self, y: int) -> dict[int, int]:
        """Per-coalition kept units achieving value(y)."""
        out: dict[int, int] = {}
        for step in range(len(self.indices) - 1, -1, -1):
            k = self._bp[step][y]
            assert k is not None
            out[self.indices[step]] = k
            y -= k
        assert y == 0
        return out


class AlphaTable:
    """Best total arbitration payoff for agent i keeping y units with the
    given non-deviating neighbours, merged edge by edge."""

    def __init__(self, g: GameDef, o: Outcome, rule: LocalArbitrationRule, i: int, others: list[int]):
        self.keep_tables = [KeepTable(g, o, rule, i, j) for j in others]
        self.cap = sum(t.cap for t in self.keep_tables)
        table: list[list] = [[ZERO] + [NEG_INF] * self.cap]
        bp: list[list[int | None]] = []
        for kt in self.keep_tables:
            prev = table[-1]
            cur = [NEG_INF] * (self.cap + 1)
            cbp: list[int | None] = [None] * (self.cap + 1)
            for y in range(self.cap + 1):
                best = NEG_INF
                pick = None
                for k in range(min(y, kt.cap) + 1):
                    if prev[y - k] == NEG_INF or kt.value(k) == NEG_INF:
                        continue
                    cand = prev[y - k] + kt.value(k)
                    if cand > best:
                        best = cand
                        pick = k
                cur[y] = best
                cbp[y] = pick
            table.append(cur)
            bp.append(cbp)
        self.values = table[-1]
        self._bp = bp

    def value(self, y: int):
        if y > self.cap:
            return NEG_INF
        return self.values[y]

    def keeps(self, y: int) -> dict[int, int]:
        out: dict[int, int] = {}
        for step in range(len(self.keep_tables) - 1, -1, -1):
            k = self._bp[step][y]
            assert k is not None
            out.update(self.keep_tables[step].keeps(k))
            y -= k
        assert y == 0
        return out


class VBarTable:
    """Solo table of a deviator: split w units between working alone and
    staying in coalitions with non-deviating neighbours."""

    def __init__(self, single: SingleTable, alpha: AlphaTable, cap: int):
        self.single = single
        self.alpha = alpha
        self.values = []
        self.split: list[tuple[int, int]] = []
        for w in range(cap + 1):
            best = None
            pick = None
            for kept in range(min(w, alpha.cap) + 1):
                av = alpha.value(kept)
                if av == NEG_INF:
                    continue
                cand = single.value(w - kept) + av
                if best is None or cand > best:
                    best = cand
                    pick = (w - kept, kept)
            self.values.append(best)
            self.split.append(pick)

    def value(self, w: int):
        return self.values[w]

    def witness(self, w: int, n: int) -> list[Coalition]:
        alone, _ = self.split[w]
        return self.single.witness(alone, n)

    def kept(self, w: int) -> dict[int, int]:
        _, kept = self.split[w]
        return self.alpha.keeps(kept)


def _deviation_from_keeps(o: Outcome, kept: dict[int, int], deviators: frozenset[int], n: int) -> Deviation:
    """Translate per-coalition kept units into withdrawal vectors.

    Mixed coalitions absent from ``kept`` are fully withdrawn from."""
    withdrawals: dict[int, Coalition] = {}
    for j, c in enumerate(o.structure):
        sup = support(c)
        if not (sup & deviators) or sup <= deviators:
            continue
        d = [0] * n
        for i in sup & deviators:
            d[i] = c[i]
        withdrawals[j] = tuple(d)
    for j, keep in kept.items():
        c = o.structure[j]
        (i,) = support(c) & deviators
        d = list(withdrawals[j])
        d[i] = c[i] - keep
        withdrawals[j] = tuple(d)
    return Deviation(withdrawals={j: d for j, d in withdrawals.items() if any(d)})


def arbval_local(
    g: GameDef,
    rule: LocalArbitrationRule,
    o: Outcome,
    deviators: frozenset[int],
    max_set_size: int = 4,
    with_witness: bool = False,
):
    """Best deviation value of a small set under any local rule.

    Works on any interaction structure and any k.  The DP state is the vector
    of resources withdrawn so far, so the table has (W+1)^|S| entries; the set
    size is capped to keep that in check.
    """
    if not isinstance(rule, LocalArbitrationRule):
        raise UnsupportedRuleError(f"rule {rule.name} is not local")
    if len(deviators) > max_set_size:
        raise BudgetExceededError(
            f"|S|={len(deviators)} exceeds the local-DP cap {max_set_size}"
        )
    n = g.n
    coords = sorted(deviators)
    own_idx = reduce_structure_indices(o.structure, deviators)
    own = structure_weight(tuple(o.structure[j] for j in own_idx), n)
    committed = structure_weight(o.structure, n)
    unused = [g.weights[i] - committed[i] for i in range(n)]
    bound = tuple(g.weights[i] - own[i] for i in coords)
    mixed = [
        j
        for j, c in enumerate(o.structure)
        if (support(c) & deviators) and not support(c) <= deviators
    ]

    states = list(product(*[range(b + 1) for b in bound]))
    # A[t] = best arbitration payoff if exactly t is withdrawn; unused
    # resources withdraw for free, coalition steps add rule payments
    A: dict = {}
    for t in states:
        ok = all(x <= unused[i] for x, i in zip(t, coords))
        A[t] = ZERO if ok else NEG_INF
    trace: list[dict] = []
    for j in mixed:
        c = o.structure[j]
        x = o.imputation[j]
        opts = []
        wcoords = [i for i in coords if c[i] > 0]
        for combo in product(*[range(c[i] + 1) for i in wcoords]):
            w = [0] * n
            for i, amount in zip(wcoords, combo):
                w[i] = amount
            wl = tuple(w[i] for i in coords)
            pay = rule.coalition_payoff(g.charfun, c, tuple(w), x, deviators)
            opts.append((wl, tuple(w), pay))
        nxt: dict = {}
        bp: dict = {}
        for t in states:
            best = NEG_INF
            pick = None
            for wl, wfull, pay in opts:
                if any(a > b for a, b in zip(wl, t)):
                    continue
                rest = A[tuple(b - a for a, b in zip(wl, t))]
                if rest == NEG_INF:
                    continue
                cand = rest + pay
                if cand > best:
                    best = cand
                    pick = (wl, wfull)
            nxt[t] = best
            bp[t] = pick
        A = nxt
        trace.append(bp)

    sup = coords
    atoms = [(tuple(a[i] for i in sup), v) for a, v in g.charfun.atoms_within(deviators)]
    cover = CoverTable(atoms, tuple(g.weights[i] for i in sup)) if sup else None
    own_local = tuple(own[i] for i in coords)
    best = None
    best_t = None
    for t in states:
        if A[t] == NEG_INF:
            continue
        have = tuple(a + b for a, b in zip(own_local, t))
        cand = (cover.value(have) if cover else ZERO) + A[t]
        if best is None or cand > best:
            best = cand
            best_t = t
    assert best is not None and best_t is not None
    if not with_witness:
        return best
    withdrawals: dict[int, Coalition] = {}
    t = best_t
    for step in range(len(mixed) - 1, -1, -1):
        pick = trace[step][t]
        assert pick is not None
        wl, wfull = pick
        if any(wfull):
            withdrawals[mixed[step]] = wfull
        t = tuple(b - a for a, b in zip(wl, t))
    have = tuple(a + b for a, b in zip(own_local, best_t))
    picked = []
    if cover:
        for a in cover.witness_atoms(have):
            full = [0] * n
            for i, w in zip(sup, a):
                full[i] = w
            picked.append(tuple(full))
    return best, Deviation(withdrawals=withdrawals), tuple(picked)


def arbval_tree(
    g: GameDef,
    rule: LocalArbitrationRule,
    o: Outcome,
    deviators: frozenset[int],
    with_witness: bool = False,
):
    """Best deviation value of any S inducing an acyclic interaction subgraph.

    Falls back to ``arbval_local`` when S induces a cycle but is small enough;
    no cap on |S| otherwise.
    """
    if not isinstance(rule, LocalArbitrationRule):
        raise UnsupportedRuleError(f"rule {rule.name} is not local")
    graph = require_two_ocf_tree(g, need_forest=False)
    check_outcome_shape(g, o)
    sub_edges = [
        (a, b) for a, b in graph.simple_edges() if a in deviators and b in deviators
    ]
    sub = InteractionGraph.from_pairs(g.n, sub_edges)
    if not sub.is_forest():
        if len(deviators) <= 4:
            return arbval_local(g, rule, o, deviators, with_witness=with_witness)
        raise UnsupportedGameError(
            "deviating set induces a cycle; use arbval_local or the treewidth solver"
        )
    if not deviators:
        return (ZERO, Deviation(), ()) if with_witness else ZERO

    caps = tuple(g.weights[i] if i in deviators else 0 for i in range(g.n))
    vbars: dict[int, VBarTable] = {}
    for i in deviators:
        others = [j for j in graph.neighbors(i) if j not in deviators]
        single = SingleTable(g, i, caps[i])
        alpha = AlphaTable(g, o, rule, i, others)
        vbars[i] = VBarTable(single, alpha, caps[i])

    total = ZERO
    atoms: list[Coalition] = []
    solo_spends: list[tuple[int, int]] = []
    dps = []
    for tree in rooted_forest(sub, set(deviators)):
        dp = _TreeDp(g, tree, caps, solo=lambda i: vbars[i])
        dps.append(dp)
        total += dp.value()
        dp.collect(atoms, lambda i, w: solo_spends.append((i, w)))
    if not with_witness:
        return total
    kept: dict[int, int] = {}
    for i, w in solo_spends:
        atoms.extend(vbars[i].witness(w, g.n))
        kept.update(vbars[i].kept(w))
    dev = _deviation_from_keeps(o, kept, deviators, g.n)
    return total, dev, tuple(atoms)


# ---------------------------------------------------------------------------
# CheckCore


class _CoreDp:
    """In/out tables over one interaction-tree component.

    IN_i(w): best excess of any subset containing i within i's subtree, with i
    spending w of its weight downward (solo work, pair blocks with in-children
    and keeps with out-children); the edge toward i's parent is charged by the
    caller.  OUT_i: best excess when i stays out, children independent; the
    "ne" variant forces at least one member below.
    """

    def __init__(self, g: GameDef, o: Outcome, rule: LocalArbitrationRule, tree: RootedTree):
        self.g = g
        self.o = o
        self.rule = rule
        self.tree = tree
        n = g.n
        self.payoff = {i: o.payoff_to_agent(i) for i in tree.vertices}
        self.keeps: dict[tuple[int, int], KeepTable] = {}
        self.singles = {i: SingleTable(g, i, g.weights[i]) for i in tree.vertices}
        self.pairs: dict[tuple[int, int], PairTable] = {}
        self.in_steps: dict[int, list[list]] = {}
        self.in_bp: dict[int, list[dict]] = {}
        self.out_any: dict[int, Fraction] = {}
        self.out_ne: dict = {}
        self.out_bp: dict[int, list] = {}
        self.att: dict[int, tuple] = {}
        for i in tree.postorder():
            self._vertex(i)

    def _keep(self, dev: int, other: int) -> KeepTable:
        key = (dev, other)
        if key not in self.keeps:
            self.keeps[key] = KeepTable(self.g, self.o, self.rule, dev, other)
        return self.keeps[key]

    def _pair(self, i: int, j: int) -> PairTable:
        if (i, j) not in self.pairs:
            self.pairs[(i, j)] = PairTable(
                self.g, i, j, self.g.weights[i], self.g.weights[j]
            )
        return self.pairs[(i, j)]

    def _vertex(self, i: int) -> None:
        g, o = self.g, self.o
        cap = g.weights[i]
        base = [self.singles[i].value(w) - self.payoff[i] for w in range(cap + 1)]
        tables = [base]
        bps: list[dict] = [dict()]
        for ch in self.tree.children[i]:
            prev = tables[-1]
            keep = self._keep(i, ch)
            pair = self._pair(i, ch)
            child_in = self.in_steps[ch][-1]
            cap_ch = g.weights[ch]
            out_child = self.out_any[ch]
            cur = []
            bp: dict = {}
            for w in range(cap + 1):
                best = NEG_INF
                pick = None
                for y in range(min(w, keep.cap) + 1):
                    kv = keep.value(y)
                    if kv == NEG_INF or prev[w - y] == NEG_INF:
                        continue
                    cand = prev[w - y] + kv + out_child
                    if cand > best:
                        best = cand
                        pick = ("out", y)
                for x in range(w + 1):
                    rest = prev[w - x]
                    if rest == NEG_INF:
                        continue
                    for z in range(cap_ch + 1):
                        cand = rest + pair.value(x, z) + child_in[cap_ch - z]
                        if cand > best:
                            best = cand
                            pick = ("in", x, z)
                cur.append(best)
                bp[w] = pick
            tables.append(cur)
            bps.append(bp)
        self.in_steps[i] = tables
        self.in_bp[i] = bps

        # attach value: i joins as the top of its component under an out parent
        kt_up = None
        att_val = self.in_steps[i][-1][cap]
        att_pick = 0
        parent = self._parent_of(i)
        if parent is not None:
            kt_up = self._keep(i, parent)
            best = NEG_INF
            pick = 0
            for y in range(min(cap, kt_up.cap) + 1):
                kv = kt_up.value(y)
                inv = self.in_steps[i][-1][cap - y]
                if kv == NEG_INF or inv == NEG_INF:
                    continue
                cand = inv + kv
                if cand > best:
                    best = cand
                    pick = y
            att_val = best
            att_pick = pick
        self.att[i] = (att_val, att_pick)

        kids = self.tree.children[i]
        contrib_any = []
        contrib_pick = []
        for ch in kids:
            att_c = self.att[ch][0]
            if att_c > self.out_any[ch]:
                contrib_any.append(att_c)
                contrib_pick.append("att")
            else:
                contrib_any.append(self.out_any[ch])
                contrib_pick.append("out")
        self.out_any[i] = sum(contrib_any, start=ZERO) if kids else ZERO
        best_ne = NEG_INF
        ne_pick = None
        total_any = self.out_any[i]
        for idx, ch in enumerate(kids):
            rest = total_any - contrib_any[idx]
            cand_att = self.att[ch][0]
            cand = rest + max(cand_att, self.out_ne.get(ch, NEG_INF))
            if cand > best_ne:
                best_ne = cand
                ne_pick = (idx, "att" if cand_att >= self.out_ne.get(ch, NEG_INF) else "ne")
        self.out_ne[i] = best_ne
        self.out_bp[i] = [contrib_pick, ne_pick]

    def _parent_of(self, i: int) -> int | None:
        for v, kids in self.tree.children.items():
            if i in kids:
                return v
        return None

    def best(self):
        r = self.tree.root
        top_in = self.in_steps[r][-1][self.g.weights[r]]
        return max(top_in, self.out_ne[r]), top_in >= self.out_ne[r]

    def members(self) -> frozenset[int]:
        """Deviating set achieving best(); walk the backpointers."""
        out: set[int] = set()
        r = self.tree.root
        _, use_in = self.best()
        if use_in:
            self._walk_in(r, self.g.weights[r], out)
        else:
            self._walk_out(r, out, need_ne=True)
        return frozenset(out)

    def _walk_in(self, i: int, w: int, out: set[int]) -> None:
        out.add(i)
        kids = self.tree.children[i]
        for step in range(len(kids), 0, -1):
            pick = self.in_bp[i][step][w]
            assert pick is not None
            ch = kids[step - 1]
            if pick[0] == "out":
                _, y = pick
                self._walk_out(ch, out, need_ne=False)
                w -= y
            else:
                _, x, z = pick
                self._walk_in(ch, self.g.weights[ch] - z, out)
                w -= x

    def _walk_att(self, i: int, out: set[int]) -> None:
        _, y = self.att[i]
        self._walk_in(i, self.g.weights[i] - y, out)

    def _walk_out(self, i: int, out: set[int], need_ne: bool) -> None:
        kids = self.tree.children[i]
        contrib_pick, ne_pick = self.out_bp[i]
        if not kids:
            return
        if need_ne:
            assert ne_pick is not None
            idx, kind = ne_pick
            for k, ch in enumerate(kids):
                if k == idx:
                    if kind == "att":
                        self._walk_att(ch, out)
                    else:
                        self._walk_out(ch, out, need_ne=True)
                else:
                    if contrib_pick[k] == "att":
                        self._walk_att(ch, out)
                    else:
                        self._walk_out(ch, out, need_ne=False)
        else:
            for k, ch in enumerate(kids):
                if contrib_pick[k] == "att":
                    self._walk_att(ch, out)
                else:
                    self._walk_out(ch, out, need_ne=False)


def max_excess_tree(
    g: GameDef, rule: LocalArbitrationRule, o: Outcome
) -> tuple[Fraction, frozenset[int]]:
    """Maximum excess over all nonempty subsets (and an achieving set)."""
    if not isinstance(rule, LocalArbitrationRule):
        raise UnsupportedRuleError(f"rule {rule.name} is not local")
    graph = require_two_ocf_tree(g)
    check_outcome_shape(g, o)
    per_comp = []
    for tree in rooted_forest(graph):
        dp = _CoreDp(g, o, rule, tree)
        value, _ = dp.best()
        per_comp.append((value, dp))
    positives = [(v, dp) for v, dp in per_comp if v > 0]
    if positives:
        total = sum((v for v, _ in positives), start=ZERO)
        members: set[int] = set()
        for _, dp in positives:
            members |= dp.members()
        return total, frozenset(members)
    value, dp = max(per_comp, key=lambda p: p[0])
    return value, dp.members()


def checkcore_tree(
    g: GameDef, rule: LocalArbitrationRule, o: Outcome
) -> CoreViolation | None:
    """None iff the outcome is stable; otherwise the worst violating set."""
    excess, members = max_excess_tree(g, rule, o)
    if excess <= 0:
        return None
    return CoreViolation(agents=members, excess=excess)


# ---------------------------------------------------------------------------
# Is-Stable


def _stability_cut(
    g: GameDef,
    cs: CoalitionStructure,
    deviators: frozenset[int],
    dev: Deviation,
    post_value: Fraction,
    rule: LocalArbitrationRule,
    candidate: Imputation,
    var_of: dict[tuple[int, int], int],
) -> tuple[dict[int, Fraction], Fraction]:
    """Linear cut p_S(x) - payments(x) >= const for the witnessed deviation.

    For the clamped optimistic rule the per-coalition branch (linear vs zero)
    is frozen at the candidate point; the resulting cut is implied by the true
    constraint and still separates the candidate.
    """
    n = g.n
    coeffs: dict[int, Fraction] = {}
    for (j, i), v in var_of.items():
        if i in deviators:
            coeffs[v] = coeffs.get(v, ZERO) + 1
    const = post_value
    clamped = isinstance(rule, OptimisticRule) and rule.clamped
    for j, c in enumerate(cs):
        sup = support(c)
        if not (sup & deviators) or sup <= deviators:
            continue
        d = dev.withdrawal(j, n)
        if rule.name == "conservative":
            continue
        if rule.name == "refined":
            if not any(d):
                for i in sup & deviators:
                    v = var_of[(j, i)]
                    coeffs[v] = coeffs.get(v, ZERO) - 1
            continue
        remainder = tuple(a - b for a, b in zip(c, d))
        base = g.charfun.value(remainder)
        if clamped:
            achieved = base - sum(
                (candidate[j][i] for i in sup - deviators), start=ZERO
            )
            if achieved < 0:
                continue  # zero branch active at the candidate
        const += base
        for i in sup - deviators:
            v = var_of[(j, i)]
            coeffs[v] = coeffs.get(v, ZERO) + 1
    return coeffs, const


def is_stable_tree(
    g: GameDef,
    rule: LocalArbitrationRule,
    cs: CoalitionStructure,
    max_rounds: int = 100_000,
) -> Imputation | None:
    """Find an imputation making the structure stable, or prove none exists.

    Cutting-plane loop: keep an LP of efficiency equalities plus accumulated
    stability cuts, solve exactly, and ask checkcore for a violated set at the
    candidate point; its witness deviation yields one new linear cut.  Each
    round adds a cut violated by the current candidate, and there are finitely
    many (set, deviation, branch) cuts, so the loop terminates.
    """
    if rule.name not in ("conservative", "refined", "optimistic", "optimistic-clamped"):
        raise UnsupportedRuleError(f"stability cuts are not linear for {rule.name!r}")
    require_two_ocf_tree(g)
    if not vec_leq(structure_weight(cs, g.n), g.weights):
        raise ContractViolation("structure exceeds agent endowments")
    n = g.n
    var_of: dict[tuple[int, int], int] = {}
    for j, c in enumerate(cs):
        for i in sorted(support(c)):
            var_of[(j, i)] = len(var_of)
    lp = LinearProgram(n_vars=len(var_of), objective=[ZERO] * len(var_of))
    for j, c in enumerate(cs):
        sup = sorted(support(c))
        if not sup:
            continue
        lp.add_row({var_of[(j, i)]: Fraction(1) for i in sup}, "=", g.charfun.value(c))

    for _ in range(max_rounds):
        sol = solve_lp(lp)
        if sol.status != "optimal":
            return None
        assert sol.x is not None
        imputation = []
        for j, c in enumerate(cs):
            x = [ZERO] * n
            for i in support(c):
                x[i] = sol.x[var_of[(j, i)]]
            imputation.append(tuple(x))
        candidate = tuple(imputation)
        outcome = Outcome(structure=cs, imputation=candidate)
        violation = checkcore_tree(g, rule, outcome)
        if violation is None:
            return candidate
        value, dev, post = arbval_tree(g, rule, outcome, violation.agents, with_witness=True)
        post_value = sum((g.charfun.value(c) for c in post), start=ZERO)
        coeffs, const = _stability_cut(
            g, cs, violation.agents, dev, post_value, rule, candidate, var_of
        )
        lp.add_row(coeffs, ">=", const)
    raise RuntimeError("cutting-plane loop failed to terminate within max_rounds")
