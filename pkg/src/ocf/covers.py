"""Superadditive-cover tables.

The cover of a resource vector is the best total value of a coalition multiset
using at most those resources.  Because unlisted coalitions are worth zero,
only the positive-valued stored coalitions ("atoms") ever matter, and leftover
resources can always idle in worthless filler coalitions.  That gives the
sparse recurrence

    best(r) = max(0, max over atoms a <= r of value(a) + best(r - a))

which this module evaluates bottom-up over the full box of resource vectors,
keeping one chosen atom per state so optimal multisets can be reconstructed.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product

from .core import ZERO, Coalition


class CoverTable:
    """Dense cover table over all resource vectors below ``caps``.

    ``atoms`` are (vector, value) pairs in the same (local) coordinate system
    as ``caps``; atoms exceeding the caps are unusable and dropped.  State
    count is prod(caps_i + 1); the caller is responsible for budget checks.
    """

    def __init__(self, atoms: list[tuple[Coalition, Fraction]], caps: Coalition):
        self.caps = tuple(caps)
        self.atoms = [(a, v) for a, v in atoms if all(x <= c for x, c in zip(a, caps))]
        self.value_at: dict[Coalition, Fraction] = {}
        self.choice: dict[Coalition, int | None] = {}
        self._fill()

    def _fill(self) -> None:
        ranges = [range(c + 1) for c in self.caps]
        # lexicographic enumeration is a linear extension of componentwise <=,
        # so best(r - a) is always ready before best(r)
        for state in product(*ranges):
            best = ZERO
            pick: int | None = None
            for idx, (a, v) in enumerate(self.atoms):
                ok = True
                for x, y in zip(a, state):
                    if x > y:
                        ok = False
                        break
                if not ok:
                    continue
                rest = tuple(y - x for x, y in zip(a, state))
                cand = v + self.value_at[rest]
                if cand > best:
                    best = cand
                    pick = idx
            self.value_at[state] = best
            self.choice[state] = pick

    def value(self, r: Coalition) -> Fraction:
        return self.value_at[tuple(r)]

    def witness_atoms(self, r: Coalition) -> list[Coalition]:
        """Atoms of one optimal multiset for ``r`` (resources may be left over)."""
        out = []
        state = tuple(r)
        while True:
            pick = self.choice[state]
            if pick is None:
                return out
            a, _ = self.atoms[pick]
            out.append(a)
            state = tuple(y - x for x, y in zip(a, state))


def state_count(caps: Coalition) -> int:
    total = 1
    for c in caps:
        total *= c + 1
    return total


def single_cover(
    atoms: list[tuple[int, Fraction]], cap: int
) -> tuple[list[Fraction], list[int | None]]:
    """1-d cover: best value of splitting w units of one agent, w = 0..cap.

    ``atoms`` are (units, value) pairs with units >= 1 and value > 0.
    Returns the value table and a chosen-atom index per state.
    """
    values: list[Fraction] = [ZERO] * (cap + 1)
    choice: list[int | None] = [None] * (cap + 1)
    for w in range(1, cap + 1):
        best = ZERO
        pick: int | None = None
        for idx, (units, v) in enumerate(atoms):
            if units <= w:
                cand = v + values[w - units]
                if cand > best:
                    best = cand
                    pick = idx
        values[w] = best
        choice[w] = pick
    return values, choice


def single_cover_witness(
    atoms: list[tuple[int, Fraction]], choice: list[int | None], w: int
) -> list[int]:
    """Unit sizes of one optimal split of w (leftovers idle)."""
    out = []
    while w > 0:
        pick = choice[w]
        if pick is None:
            return out
        units, _ = atoms[pick]
        out.append(units)
        w -= units
    return out
