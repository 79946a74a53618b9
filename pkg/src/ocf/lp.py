"""Exact rational linear programming.

A dense two-phase tableau simplex over :class:`fractions.Fraction` with
Bland's anti-cycling rule, so every solve terminates and the returned vertex
is deterministic.  The final basis certifies row duals; for a maximization
with <= rows the duals are the usual non-negative shadow prices.

Problem shape: maximize c.x subject to rows (a, sense, b) with sense one of
"<=", ">=", "=", and x >= lower_bounds (zero by default).  Status is one of
"optimal", "infeasible", "unbounded".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .core import ZERO, ContractViolation

ONE = Fraction(1)

Row = tuple[list[Fraction], str, Fraction]


@dataclass
class LinearProgram:
    n_vars: int
    objective: list[Fraction]
    rows: list[Row] = field(default_factory=list)
    lower_bounds: list[Fraction] | None = None

    def add_row(self, coeffs: dict[int, Fraction], sense: str, rhs: Fraction) -> None:
        dense = [ZERO] * self.n_vars
        for j, v in coeffs.items():
            dense[j] = Fraction(v)
        self.rows.append((dense, sense, Fraction(rhs)))


@dataclass
class LpSolution:
    status: str
    x: tuple[Fraction, ...] | None = None
    objective_value: Fraction | None = None
    duals: tuple[Fraction, ...] | None = None


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve exactly; duals are reported against the rows as given."""
    n = lp.n_vars
    if len(lp.objective) != n:
        raise ContractViolation("objective length must equal n_vars")
    for coeffs, sense, _ in lp.rows:
        if len(coeffs) != n:
            raise ContractViolation("row width must equal n_vars")
        if sense not in ("<=", ">=", "="):
            raise ContractViolation(f"unknown sense {sense!r}")

    shift = [Fraction(v) for v in (lp.lower_bounds or [ZERO] * n)]
    if len(shift) != n:
        raise ContractViolation("lower_bounds length must equal n_vars")
    const = sum((c * s for c, s in zip(lp.objective, shift)), start=ZERO)

    # standardize: x' = x - lb >= 0, all rhs >= 0 (negating rows flips duals)
    std_rows: list[tuple[list[Fraction], str, Fraction, int]] = []
    for coeffs, sense, rhs in lp.rows:
        rhs2 = Fraction(rhs) - sum((a * s for a, s in zip(coeffs, shift)), start=ZERO)
        coeffs2 = [Fraction(a) for a in coeffs]
        mult = 1
        if rhs2 < 0:
            coeffs2 = [-a for a in coeffs2]
            rhs2 = -rhs2
            sense = {"<=": ">=", ">=": "<=", "=": "="}[sense]
            mult = -1
        std_rows.append((coeffs2, sense, rhs2, mult))

    m = len(std_rows)
    slack_of: dict[int, int] = {}
    art_of: dict[int, int] = {}
    ncols = n
    for i, (_, sense, _, _) in enumerate(std_rows):
        if sense == "<=":
            slack_of[i] = ncols
            ncols += 1
        elif sense == ">=":
            slack_of[i] = ncols  # surplus, coefficient -1
            ncols += 1
            art_of[i] = ncols
            ncols += 1
        else:
            art_of[i] = ncols
            ncols += 1

    tab = [[ZERO] * (ncols + 1) for _ in range(m)]
    basis = [0] * m
    for i, (coeffs, sense, rhs, _) in enumerate(std_rows):
        for j, a in enumerate(coeffs):
            tab[i][j] = a
        tab[i][ncols] = rhs
        if sense == "<=":
            tab[i][slack_of[i]] = ONE
            basis[i] = slack_of[i]
        elif sense == ">=":
            tab[i][slack_of[i]] = -ONE
            tab[i][art_of[i]] = ONE
            basis[i] = art_of[i]
        else:
            tab[i][art_of[i]] = ONE
            basis[i] = art_of[i]

    artificials = set(art_of.values())

    def run(cost: list[Fraction], banned: set[int]) -> str:
        # maintain the reduced-cost row; Bland: lowest-index entering column,
        # lowest-index basic variable among min-ratio rows
        red = list(cost) + [ZERO]
        for i in range(m):
            cb = cost[basis[i]]
            if cb != 0:
                for j in range(ncols + 1):
                    if tab[i][j] != 0:
                        red[j] -= cb * tab[i][j]
        while True:
            enter = -1
            for j in range(ncols):
                if j not in banned and red[j] > 0:
                    enter = j
                    break
            if enter < 0:
                return "optimal"
            leave = -1
            best_ratio: Fraction | None = None
            for i in range(m):
                a = tab[i][enter]
                if a > 0:
                    ratio = tab[i][ncols] / a
                    if best_ratio is None or ratio < best_ratio or (
                        ratio == best_ratio and basis[i] < basis[leave]
                    ):
                        best_ratio = ratio
                        leave = i
            if leave < 0:
                return "unbounded"
            piv = tab[leave][enter]
            row = tab[leave]
            if piv != 1:
                inv = ONE / piv
                for j in range(ncols + 1):
                    if row[j] != 0:
                        row[j] *= inv
            for i in range(m):
                if i != leave:
                    f = tab[i][enter]
                    if f != 0:
                        other = tab[i]
                        for j in range(ncols + 1):
                            if row[j] != 0:
                                other[j] -= f * row[j]
            f = red[enter]
            if f != 0:
                for j in range(ncols + 1):
                    if row[j] != 0:
                        red[j] -= f * row[j]
            basis[leave] = enter

    if artificials:
        phase1 = [ZERO] * ncols
        for j in artificials:
            phase1[j] = -ONE
        # artificials may leave the basis but never re-enter
        run(phase1, banned=artificials)
        infeas = sum((tab[i][ncols] for i in range(m) if basis[i] in artificials), start=ZERO)
        if infeas > 0:
            return LpSolution(status="infeasible")
        # degenerate artificials: pivot them out where a real column is usable
        for i in range(m):
            if basis[i] in artificials:
                for j in range(ncols):
                    if j not in artificials and tab[i][j] != 0:
                        piv = tab[i][j]
                        row = tab[i]
                        inv = ONE / piv
                        for jj in range(ncols + 1):
                            if row[jj] != 0:
                                row[jj] *= inv
                        for ii in range(m):
                            if ii != i and tab[ii][j] != 0:
                                f = tab[ii][j]
                                other = tab[ii]
                                for jj in range(ncols + 1):
                                    if row[jj] != 0:
                                        other[jj] -= f * row[jj]
                        basis[i] = j
                        break

    cost2 = [ZERO] * ncols
    for j in range(n):
        cost2[j] = Fraction(lp.objective[j])
    status = run(cost2, banned=artificials)
    if status == "unbounded":
        return LpSolution(status="unbounded")

    x = [ZERO] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = tab[i][ncols]
    value = sum((c * v for c, v in zip(lp.objective, x)), start=ZERO) + const
    x_full = tuple(v + s for v, s in zip(x, shift))

    # dual of row i reads off the reduced cost of its initial identity column
    y_red = [ZERO] * ncols
    for i in range(m):
        cb = cost2[basis[i]]
        if cb != 0:
            for j in range(ncols):
                if tab[i][j] != 0:
                    y_red[j] += cb * tab[i][j]
    duals = []
    for i, (_, sense, _, mult) in enumerate(std_rows):
        col = art_of[i] if i in art_of else slack_of[i]
        y = y_red[col]
        duals.append(mult * y)
    return LpSolution(
        status="optimal",
        x=x_full,
        objective_value=value,
        duals=tuple(duals),
    )
