"""Arbitration functions: what non-deviators pay a deviating set.

A deviation of a set S from an outcome withdraws resources from coalitions
that S shares with outsiders.  Each arbitration rule maps a withdrawal pattern
to per-coalition payments back to S:

* conservative  - deviators receive nothing, ever.
* refined       - an untouched coalition keeps paying S its recorded share;
                  a touched one pays nothing.
* optimistic    - each coalition pays its residual value after the withdrawal,
                  minus what the non-deviators were promised; optionally
                  clamped below at zero (both variants ship, see the rule's
                  ``clamped`` flag).
* sensitive     - like refined, but a coalition also refuses to pay if any of
                  its members was hurt by the deviation elsewhere.  Non-local:
                  the payment from one coalition depends on withdrawals from
                  others.  Hurt status is single-hop: sharing a coalition with
                  a hurt agent does not itself make an agent hurt.

Conservative, refined and optimistic are *local*: the payment from a coalition
depends only on that coalition's own withdrawal, its payoff vector, S and the
game.  Only local rules are accepted by the tree and treewidth solvers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .core import (
    ZERO,
    Coalition,
    CoalitionStructure,
    CharacteristicFunction,
    ContractViolation,
    GameDef,
    Outcome,
    PayoffVector,
    reduce_structure_indices,
    structure_weight,
    support,
    vec_leq,
    vec_sub,
    zero_coalition,
)


class UnsupportedRuleError(ValueError):
    """A solver was handed an arbitration rule it cannot handle."""


@dataclass(frozen=True)
class Deviation:
    """Withdrawals of a deviating set, keyed by coalition index.

    Keys index into the outcome's structure and must refer to coalitions
    outside CS|_S (coalitions fully owned by S are freely available and are
    never "withdrawn from").  A missing key means zero withdrawal.  Fully
    abandoning a coalition is expressed as withdrawing the deviators' entire
    contribution; there is no separate abandonment flag.
    """

    withdrawals: dict[int, Coalition] = field(default_factory=dict)

    def withdrawal(self, j: int, n: int) -> Coalition:
        return self.withdrawals.get(j, zero_coalition(n))

    def is_empty(self) -> bool:
        return all(all(w == 0 for w in d) for d in self.withdrawals.values())


def validate_deviation(o: Outcome, deviators: frozenset[int], dev: Deviation, n: int) -> None:
    """Raise ContractViolation unless ``dev`` is a legal deviation of S from o."""
    own = set(reduce_structure_indices(o.structure, deviators))
    for j, d in dev.withdrawals.items():
        if not (0 <= j < len(o.structure)):
            raise ContractViolation(f"withdrawal index {j} out of range")
        if j in own:
            raise ContractViolation(f"coalition {j} is owned by the deviators; nothing to withdraw")
        c = o.structure[j]
        if len(d) != n:
            raise ContractViolation(f"withdrawal {j} has wrong dimension")
        if any(w < 0 for w in d):
            raise ContractViolation(f"withdrawal {j} has a negative coordinate")
        if not vec_leq(d, c):
            raise ContractViolation(f"withdrawal {j} exceeds the coalition")
        if not support(d) <= deviators:
            raise ContractViolation(f"withdrawal {j} touches a non-deviator's contribution")


class ArbitrationRule:
    name: str = "abstract"
    is_local: bool = False

    def deviation_payoffs(
        self,
        game: GameDef,
        outcome: Outcome,
        deviators: frozenset[int],
        dev: Deviation,
    ) -> dict[int, Fraction]:
        """Payment to S from every coalition outside CS|_S, keyed by index."""
        raise NotImplementedError


class LocalArbitrationRule(ArbitrationRule):
    """Rule whose per-coalition payment sees only that coalition's withdrawal."""

    is_local = True

    def coalition_payoff(
        self,
        cf: CharacteristicFunction,
        c: Coalition,
        d: Coalition,
        xc: PayoffVector,
        deviators: frozenset[int],
    ) -> Fraction:
        raise NotImplementedError

    def deviation_payoffs(self, game, outcome, deviators, dev):
        n = game.n
        own = set(reduce_structure_indices(outcome.structure, deviators))
        out: dict[int, Fraction] = {}
        for j, c in enumerate(outcome.structure):
            if j in own:
                continue
            d = dev.withdrawal(j, n)
            out[j] = self.coalition_payoff(game.charfun, c, d, outcome.imputation[j], deviators)
        return out


class ConservativeRule(LocalArbitrationRule):
    name = "conservative"

    def coalition_payoff(self, cf, c, d, xc, deviators):
        return ZERO


class RefinedRule(LocalArbitrationRule):
    name = "refined"

    def coalition_payoff(self, cf, c, d, xc, deviators):
        if any(w != 0 for w in d):
            return ZERO
        return sum((xc[i] for i in deviators if i < len(xc)), start=ZERO)


class OptimisticRule(LocalArbitrationRule):
    """Residual value minus the non-deviators' recorded payoffs.

    The unclamped variant charges deviators the full marginal damage (the
    payment can be negative); the clamped variant floors it at zero
    per coalition.
    """

    def __init__(self, clamped: bool):
        self.clamped = clamped
        self.name = "optimistic-clamped" if clamped else "optimistic"

    def coalition_payoff(self, cf, c, d, xc, deviators):
        remainder = vec_sub(c, d)
        owed = sum((xc[i] for i in range(len(xc)) if i not in deviators), start=ZERO)
        pay = cf.value(remainder) - owed
        if self.clamped and pay < 0:
            return ZERO
        return pay


class SensitiveRule(ArbitrationRule):
    name = "sensitive"
    is_local = False

    def deviation_payoffs(self, game, outcome, deviators, dev):
        n = game.n
        own = set(reduce_structure_indices(outcome.structure, deviators))
        touched = {
            j
            for j, d in dev.withdrawals.items()
            if any(w != 0 for w in d)
        }
        hurt: set[int] = set()
        for j in touched:
            hurt |= support(outcome.structure[j])
        hurt -= deviators
        out: dict[int, Fraction] = {}
        for j, c in enumerate(outcome.structure):
            if j in own:
                continue
            if j in touched or (support(c) & hurt):
                out[j] = ZERO
            else:
                out[j] = sum((outcome.imputation[j][i] for i in deviators), start=ZERO)
        return out


CONSERVATIVE = ConservativeRule()
REFINED = RefinedRule()
OPTIMISTIC = OptimisticRule(clamped=False)
OPTIMISTIC_CLAMPED = OptimisticRule(clamped=True)
SENSITIVE = SensitiveRule()

_RULES = {
    r.name: r for r in (CONSERVATIVE, REFINED, OPTIMISTIC, OPTIMISTIC_CLAMPED, SENSITIVE)
}


def rule_from_name(name: str) -> ArbitrationRule:
    try:
        return _RULES[name]
    except KeyError:
        raise UnsupportedRuleError(f"unknown arbitration rule {name!r}") from None


def local_payoff(
    rule: LocalArbitrationRule,
    c: Coalition,
    d: Coalition,
    xc: PayoffVector,
    deviators: frozenset[int],
    cf: CharacteristicFunction,
) -> Fraction:
    """Single-coalition payment under a local rule, with precondition checks."""
    if not isinstance(rule, LocalArbitrationRule):
        raise UnsupportedRuleError(f"rule {rule.name} is not local")
    if not vec_leq(d, c):
        raise ContractViolation("withdrawal exceeds the coalition")
    if not support(d) <= deviators:
        raise ContractViolation("withdrawal touches a non-deviator's contribution")
    return rule.coalition_payoff(cf, c, d, xc, deviators)


def sensitive_payoffs(
    game: GameDef, o: Outcome, deviators: frozenset[int], dev: Deviation
) -> dict[int, Fraction]:
    """Per-coalition payments under the sensitive rule."""
    validate_deviation(o, deviators, dev, game.n)
    return SENSITIVE.deviation_payoffs(game, o, deviators, dev)


def deviation_available(
    game: GameDef, o: Outcome, deviators: frozenset[int], dev: Deviation
) -> Coalition:
    """Resources S may use after the deviation: own coalitions + unused + freed."""
    n = game.n
    committed = structure_weight(o.structure, n)
    own_idx = reduce_structure_indices(o.structure, deviators)
    own = structure_weight(tuple(o.structure[j] for j in own_idx), n)
    freed = [0] * n
    for d in dev.withdrawals.values():
        for i, w in enumerate(d):
            freed[i] += w
    avail = []
    for i in range(n):
        if i in deviators:
            unused = game.weights[i] - committed[i]
            avail.append(own[i] + unused + freed[i])
        else:
            avail.append(0)
    return tuple(avail)


def deviation_total(
    game: GameDef,
    o: Outcome,
    deviators: frozenset[int],
    dev: Deviation,
    arb: ArbitrationRule,
    post: CoalitionStructure,
) -> Fraction:
    """Total payoff S collects: value of the new structure plus arbitration.

    ``post`` must be buildable from S's own coalitions, unused weight and the
    withdrawn resources, and supported entirely inside S.
    """
    validate_deviation(o, deviators, dev, game.n)
    avail = deviation_available(game, o, deviators, dev)
    used = structure_weight(post, game.n)
    if not vec_leq(used, avail):
        raise ContractViolation(f"post structure uses {used}, only {avail} available")
    for c in post:
        if not support(c) <= deviators:
            raise ContractViolation("post structure contains a non-deviator")
    payments = arb.deviation_payoffs(game, o, deviators, dev)
    value = sum((game.charfun.value(c) for c in post), start=ZERO)
    return value + sum(payments.values(), start=ZERO)
