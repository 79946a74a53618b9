"""Brute-force reference solvers, exact at desk scale.

Everything here trades time for certainty: exhaustive enumeration of coalition
structures, deviations and agent subsets, guarded by an explicit budget so a
mistyped instance aborts with a count instead of running unbounded.  The
pseudo-polynomial solvers in :mod:`ocf.tree` and :mod:`ocf.treewidth` are
tested against these.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterator

from .arbitration import (
    ArbitrationRule,
    Deviation,
    OptimisticRule,
    UnsupportedRuleError,
    deviation_available,
)
from .core import (
    ZERO,
    Coalition,
    CoalitionStructure,
    ContractViolation,
    GameDef,
    Imputation,
    Outcome,
    reduce_structure_indices,
    structure_weight,
    support,
    vec_leq,
    zero_coalition,
)
from .covers import CoverTable
from .lp import LinearProgram, solve_lp


class BudgetExceededError(RuntimeError):
    """An enumeration would exceed the configured budget."""


@dataclass(frozen=True)
class EnumerationBudget:
    max_agents: int = 6
    max_weight: int = 4
    max_structures: int = 10_000_000

    def __post_init__(self) -> None:
        if self.max_agents < 1 or self.max_weight < 1 or self.max_structures < 1:
            raise ContractViolation("budget bounds must be positive")


DEFAULT_BUDGET = EnumerationBudget()


@dataclass(frozen=True)
class CoreViolation:
    """Witness that an outcome is not in the core."""

    agents: frozenset[int]
    excess: Fraction
    deviation: Deviation | None = None
    post: CoalitionStructure | None = None


def _check_cover_budget(g: GameDef, c: Coalition, budget: EnumerationBudget | None) -> None:
    if budget is None:
        return
    sup = support(c)
    if len(sup) > budget.max_agents:
        raise BudgetExceededError(
            f"support size {len(sup)} exceeds budget.max_agents={budget.max_agents}"
        )
    if any(w > budget.max_weight for w in c):
        raise BudgetExceededError(
            f"coalition weight {max(c)} exceeds budget.max_weight={budget.max_weight}"
        )


def _pad_fillers(atoms: list[Coalition], target: Coalition, n: int) -> CoalitionStructure:
    """Append one singleton filler per agent so the weight is exactly target."""
    used = structure_weight(tuple(atoms), n)
    out = list(atoms)
    for i in range(n):
        gap = target[i] - used[i]
        if gap > 0:
            filler = [0] * n
            filler[i] = gap
            out.append(tuple(filler))
    return tuple(out)


def superadditive_cover(
    g: GameDef, c: Coalition, budget: EnumerationBudget | None = DEFAULT_BUDGET
) -> tuple[Fraction, CoalitionStructure]:
    """Best value achievable from resources ``c``, with an achieving structure.

    Memoized recurrence over the stored positive-valued coalitions; the
    witness weighs exactly ``c`` (zero-value fillers pad the leftovers).
    Pass ``budget=None`` to lift the default desk-scale guard.
    """
    g.check_coalition(c)
    _check_cover_budget(g, c, budget)
    sup = sorted(support(c))
    if not sup:
        return ZERO, ()
    local_caps = tuple(c[i] for i in sup)
    atoms = []
    for a, v in g.charfun.atoms_within(frozenset(sup)):
        atoms.append((tuple(a[i] for i in sup), v))
    table = CoverTable(atoms, local_caps)
    value = table.value(local_caps)
    picked = []
    for a in table.witness_atoms(local_caps):
        full = [0] * g.n
        for i, w in zip(sup, a):
            full[i] = w
        picked.append(tuple(full))
    return value, _pad_fillers(picked, c, g.n)


def _nonzero_atoms_below(c: Coalition) -> list[Coalition]:
    """All nonzero integer vectors <= c, lexicographically ordered."""
    ranges = [range(w + 1) for w in c]
    return [v for v in product(*ranges) if any(v)]


def count_structures(
    g: GameDef, c: Coalition, cap: int | None = None
) -> int:
    """Number of coalition multisets with sum <= c, saturating at cap + 1."""
    g.check_coalition(c)
    atoms = _nonzero_atoms_below(c)
    limit = None if cap is None else cap + 1
    memo: dict[tuple[int, Coalition], int] = {}

    def count(idx: int, rem: Coalition) -> int:
        if idx == len(atoms):
            return 1
        key = (idx, rem)
        hit = memo.get(key)
        if hit is not None:
            return hit
        total = count(idx + 1, rem)
        a = atoms[idx]
        if (limit is None or total <= limit) and vec_leq(a, rem):
            total += count(idx, tuple(r - x for r, x in zip(rem, a)))
        if limit is not None and total > limit:
            total = limit
        memo[key] = total
        return total

    import sys

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, len(atoms) + 1000))
    try:
        return count(0, c)
    finally:
        sys.setrecursionlimit(old)


def enumerate_structures(
    g: GameDef, c: Coalition, budget: EnumerationBudget | None = DEFAULT_BUDGET
) -> Iterator[CoalitionStructure]:
    """Yield every multiset of nonzero coalitions with sum <= c.

    Structures come out as tuples sorted by the lexicographic atom order
    (the canonical multiset form), each exactly once, the empty structure
    first.  The precise multiset count is checked against the budget before
    anything is yielded.
    """
    g.check_coalition(c)
    if budget is not None:
        total = count_structures(g, c, cap=budget.max_structures)
        if total > budget.max_structures:
            raise BudgetExceededError(
                f"structure count exceeds budget.max_structures="
                f"{budget.max_structures} (count is at least {total})"
            )
    atoms = _nonzero_atoms_below(c)

    def rec(start: int, rem: Coalition, acc: list[Coalition]) -> Iterator[CoalitionStructure]:
        yield tuple(acc)
        for idx in range(start, len(atoms)):
            a = atoms[idx]
            if vec_leq(a, rem):
                acc.append(a)
                yield from rec(idx, tuple(r - x for r, x in zip(rem, a)), acc)
                acc.pop()

    return rec(0, c, [])


def _mixed_indices(o: Outcome, deviators: frozenset[int]) -> list[int]:
    out = []
    for j, c in enumerate(o.structure):
        sup = support(c)
        if (sup & deviators) and not sup <= deviators:
            out.append(j)
    return out


def _withdrawal_options(c: Coalition, deviators: frozenset[int]) -> list[Coalition]:
    """All withdrawal vectors from one coalition, zero vector first."""
    coords = sorted(support(c) & deviators)
    n = len(c)
    opts = []
    for combo in product(*[range(c[i] + 1) for i in coords]):
        w = [0] * n
        for i, amount in zip(coords, combo):
            w[i] = amount
        opts.append(tuple(w))
    return opts


def brute_arbval(
    g: GameDef,
    arb: ArbitrationRule,
    o: Outcome,
    deviators: frozenset[int],
    budget: EnumerationBudget | None = DEFAULT_BUDGET,
) -> tuple[Fraction, tuple[Deviation, CoalitionStructure]]:
    """Exact best deviation value for S by exhausting all withdrawal patterns.

    Post-deviation structures are optimized by the superadditive cover of the
    freed resources rather than enumerated, which is exact and much smaller.
    """
    n = g.n
    mixed = _mixed_indices(o, deviators)
    options = {j: _withdrawal_options(o.structure[j], deviators) for j in mixed}
    space = 1
    for opts in options.values():
        space *= len(opts)
    if budget is not None and space > budget.max_structures:
        raise BudgetExceededError(
            f"deviation space {space} exceeds budget.max_structures={budget.max_structures}"
        )
    caps = tuple(g.weights[i] if i in deviators else 0 for i in range(n))
    sup = sorted(support(caps))
    atoms = [
        (tuple(a[i] for i in sup), v) for a, v in g.charfun.atoms_within(deviators)
    ]
    table = CoverTable(atoms, tuple(caps[i] for i in sup)) if sup else None

    best: Fraction | None = None
    best_dev: Deviation | None = None
    best_avail: Coalition | None = None
    for combo in product(*[options[j] for j in mixed]):
        dev = Deviation(withdrawals={j: w for j, w in zip(mixed, combo) if any(w)})
        avail = deviation_available(g, o, deviators, dev)
        if table is not None:
            new_value = table.value(tuple(avail[i] for i in sup))
        else:
            new_value = ZERO
        payments = arb.deviation_payoffs(g, o, deviators, dev)
        total = new_value + sum(payments.values(), start=ZERO)
        if best is None or total > best:
            best = total
            best_dev = dev
            best_avail = avail
    assert best is not None and best_dev is not None and best_avail is not None
    picked = []
    if table is not None:
        for a in table.witness_atoms(tuple(best_avail[i] for i in sup)):
            full = [0] * n
            for i, w in zip(sup, a):
                full[i] = w
            picked.append(tuple(full))
    post = _pad_fillers(picked, best_avail, n)
    return best, (best_dev, post)


def iter_subsets(n: int) -> Iterator[frozenset[int]]:
    """Nonempty agent subsets in ascending bitmask order."""
    for mask in range(1, 1 << n):
        yield frozenset(i for i in range(n) if mask >> i & 1)


def brute_checkcore(
    g: GameDef,
    arb: ArbitrationRule,
    o: Outcome,
    budget: EnumerationBudget | None = DEFAULT_BUDGET,
) -> CoreViolation | None:
    """Scan all nonempty subsets for positive excess; None means in the core.

    Returns the subset with the maximum excess (first such subset in bitmask
    order on ties) together with its witness deviation.
    """
    if budget is not None and g.n > budget.max_agents:
        raise BudgetExceededError(
            f"n={g.n} exceeds budget.max_agents={budget.max_agents} (2^n subsets)"
        )
    best: CoreViolation | None = None
    for S in iter_subsets(g.n):
        value, (dev, post) = brute_arbval(g, arb, o, S, budget)
        excess = value - o.payoff_to_set(S)
        if excess > 0 and (best is None or excess > best.excess):
            best = CoreViolation(agents=S, excess=excess, deviation=dev, post=post)
    return best


def brute_max_excess(
    g: GameDef,
    arb: ArbitrationRule,
    o: Outcome,
    budget: EnumerationBudget | None = DEFAULT_BUDGET,
) -> tuple[Fraction, frozenset[int]]:
    """Maximum excess over all nonempty subsets, stable or not."""
    if budget is not None and g.n > budget.max_agents:
        raise BudgetExceededError(
            f"n={g.n} exceeds budget.max_agents={budget.max_agents} (2^n subsets)"
        )
    best_val: Fraction | None = None
    best_set: frozenset[int] = frozenset()
    for S in iter_subsets(g.n):
        value, _ = brute_arbval(g, arb, o, S, budget)
        excess = value - o.payoff_to_set(S)
        if best_val is None or excess > best_val:
            best_val = excess
            best_set = S
    assert best_val is not None
    return best_val, best_set


def _stability_deviations(
    g: GameDef, cs: CoalitionStructure, deviators: frozenset[int], rule: ArbitrationRule
) -> list[dict[int, Coalition]]:
    """Withdrawal profiles whose constraints jointly pin A* for the rule.

    Conservative payments never depend on the withdrawal, so only the full
    withdrawal (maximal freed resources) binds.  Refined payments only
    distinguish zero from nonzero withdrawal, so {keep all, withdraw all} per
    coalition suffices.  Optimistic needs every withdrawal level.
    """
    n = g.n
    mixed = [
        j
        for j, c in enumerate(cs)
        if (support(c) & deviators) and not support(c) <= deviators
    ]
    per: list[list[Coalition]] = []
    for j in mixed:
        c = cs[j]
        full = tuple(c[i] if i in deviators else 0 for i in range(n))
        if rule.name == "conservative":
            per.append([full])
        elif rule.name == "refined":
            opts = [zero_coalition(n)]
            if any(full):
                opts.append(full)
            per.append(opts)
        else:
            per.append(_withdrawal_options(c, deviators))
    out = []
    for combo in product(*per):
        out.append({j: w for j, w in zip(mixed, combo) if any(w)})
    return out


def brute_is_stable(
    g: GameDef,
    rule: ArbitrationRule,
    cs: CoalitionStructure,
    budget: EnumerationBudget | None = DEFAULT_BUDGET,
) -> Imputation | None:
    """Solve the full stability system for the structure exactly.

    Builds every efficiency equality, non-negativity bound and one linear
    stability constraint per (subset, withdrawal profile) pair, then hands the
    system to the exact LP solver.  Supported rules: conservative, refined,
    optimistic (either clamping).
    """
    if rule.name not in ("conservative", "refined", "optimistic", "optimistic-clamped"):
        raise UnsupportedRuleError(
            f"stability system is not linear for rule {rule.name!r}"
        )
    if budget is not None and g.n > budget.max_agents:
        raise BudgetExceededError(
            f"n={g.n} exceeds budget.max_agents={budget.max_agents}"
        )
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

    clamped = isinstance(rule, OptimisticRule) and rule.clamped
    cover_cache: dict[Coalition, Fraction] = {}

    def cover_value(avail: Coalition) -> Fraction:
        if avail not in cover_cache:
            cover_cache[avail], _ = superadditive_cover(g, avail, budget)
        return cover_cache[avail]

    committed = structure_weight(cs, n)
    for S in iter_subsets(n):
        own_idx = set(reduce_structure_indices(cs, S))
        own = structure_weight(tuple(cs[j] for j in own_idx), n)
        s_coeff: dict[int, Fraction] = {}
        for (j, i), v in var_of.items():
            if i in S:
                s_coeff[v] = s_coeff.get(v, ZERO) + 1
        for withdrawals in _stability_deviations(g, cs, S, rule):
            avail = []
            for i in range(n):
                if i in S:
                    freed = sum(w[i] for w in withdrawals.values())
                    avail.append(own[i] + (g.weights[i] - committed[i]) + freed)
                else:
                    avail.append(0)
            const = cover_value(tuple(avail))
            # linear payment terms per non-own coalition, by rule
            lin_parts: list[dict[int, Fraction]] = [dict()]
            if rule.name == "refined":
                lin = dict(lin_parts[0])
                for j, c in enumerate(cs):
                    if j in own_idx:
                        continue
                    if any(withdrawals.get(j, zero_coalition(n))):
                        continue
                    for i in support(c) & S:
                        v = var_of[(j, i)]
                        lin[v] = lin.get(v, ZERO) + 1
                lin_parts = [lin]
            elif rule.name.startswith("optimistic"):
                branch_rows: list[tuple[dict[int, Fraction], Fraction]] = [(dict(), ZERO)]
                for j, c in enumerate(cs):
                    if j in own_idx:
                        continue
                    if not support(c) & S:
                        # untouched and disjoint from S: pays zero under any
                        # efficient imputation, and efficiency rows are present
                        continue
                    d = withdrawals.get(j, zero_coalition(n))
                    remainder = tuple(a - b for a, b in zip(c, d))
                    base = g.charfun.value(remainder)
                    term: dict[int, Fraction] = {}
                    for i in support(c) - S:
                        term[var_of[(j, i)]] = Fraction(-1)
                    if clamped:
                        new_rows = []
                        for lin, cst in branch_rows:
                            merged = dict(lin)
                            for v, a in term.items():
                                merged[v] = merged.get(v, ZERO) + a
                            new_rows.append((merged, cst + base))
                            new_rows.append((lin, cst))
                        branch_rows = new_rows
                    else:
                        for idx, (lin, cst) in enumerate(branch_rows):
                            merged = dict(lin)
                            for v, a in term.items():
                                merged[v] = merged.get(v, ZERO) + a
                            branch_rows[idx] = (merged, cst + base)
                for lin, cst in branch_rows:
                    row = dict(s_coeff)
                    for v, a in lin.items():
                        row[v] = row.get(v, ZERO) - a
                    lp.add_row(row, ">=", const + cst)
                continue
            for lin in lin_parts:
                row = dict(s_coeff)
                for v, a in lin.items():
                    row[v] = row.get(v, ZERO) - a
                lp.add_row(row, ">=", const)

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
    return tuple(imputation)
