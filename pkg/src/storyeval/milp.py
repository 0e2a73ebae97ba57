"""Exact linear programming over rationals, plus branch-and-bound for integers.

The token-budget solver needs exact lexicographic optima, which rules out
floating-point LP. This is a small dense two-phase simplex on
:class:`fractions.Fraction` with Bland's rule (so it terminates under
degeneracy), sized for allocation instances with tens of variables. All
variables are implicitly nonnegative; upper bounds go in as ordinary rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

LE = "le"
GE = "ge"
EQ = "eq"

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass(frozen=True)
class Row:
    """A linear constraint ``coeffs . x  <rel>  rhs`` over nonnegative x."""

    coeffs: tuple[Fraction, ...]
    rel: str
    rhs: Fraction


def row(coeffs: Iterable, rel: str, rhs) -> Row:
    return Row(tuple(Fraction(c) for c in coeffs), rel, Fraction(rhs))


def unit_row(n_vars: int, index: int, rel: str, rhs) -> Row:
    coeffs = [_ZERO] * n_vars
    coeffs[index] = _ONE
    return Row(tuple(coeffs), rel, Fraction(rhs))


class UnboundedProgram(RuntimeError):
    """The objective is unbounded below; allocation programs never are."""


def _pivot(tableau: list[list[Fraction]], basis: list[int], pr: int, pc: int) -> None:
    pivot_row = tableau[pr]
    inv = _ONE / pivot_row[pc]
    if inv != 1:
        tableau[pr] = pivot_row = [v * inv for v in pivot_row]
    for r, current in enumerate(tableau):
        if r == pr:
            continue
        factor = current[pc]
        if factor:
            tableau[r] = [a - factor * b for a, b in zip(current, pivot_row)]
    basis[pr] = pc


def _iterate(tableau: list[list[Fraction]], basis: list[int], cost: list[Fraction]) -> None:
    """Run simplex to optimality on the given reduced-cost row (minimization)."""
    m = len(basis)
    width = len(cost) - 1
    while True:
        pc = -1
        for j in range(width):
            if cost[j] < 0:
                pc = j
                break
        if pc < 0:
            return
        pr = -1
        best_ratio: Fraction | None = None
        for r in range(m):
            a = tableau[r][pc]
            if a > 0:
                ratio = tableau[r][-1] / a
                if best_ratio is None or ratio < best_ratio or (
                    ratio == best_ratio and basis[r] < basis[pr]
                ):
                    best_ratio = ratio
                    pr = r
        if pr < 0:
            raise UnboundedProgram()
        _pivot(tableau, basis, pr, pc)
        pivot_row = tableau[pr]
        factor = cost[pc]
        if factor:
            for j in range(len(cost)):
                cost[j] -= factor * pivot_row[j]


def solve_lp(
    objective: Sequence[Fraction], rows: Sequence[Row]
) -> tuple[Fraction, list[Fraction]] | None:
    """Minimize ``objective . x`` subject to ``rows`` and ``x >= 0``.

    Returns (optimal value, x) or None when infeasible.
    """
    n = len(objective)
    m = len(rows)

    # Normalize to rhs >= 0, then add one slack/surplus column per inequality
    # and one artificial column per GE/EQ row.
    norm: list[tuple[list[Fraction], str, Fraction]] = []
    for r in rows:
        coeffs = list(r.coeffs)
        rel, rhs = r.rel, r.rhs
        if rhs < 0:
            coeffs = [-c for c in coeffs]
            rhs = -rhs
            rel = {LE: GE, GE: LE, EQ: EQ}[rel]
        norm.append((coeffs, rel, rhs))

    n_slack = sum(1 for _, rel, _ in norm if rel != EQ)
    n_art = sum(1 for _, rel, _ in norm if rel != LE)
    width = n + n_slack + n_art
    tableau: list[list[Fraction]] = []
    basis: list[int] = []
    slack_at = n
    art_at = n + n_slack
    for coeffs, rel, rhs in norm:
        line = coeffs + [_ZERO] * (n_slack + n_art) + [rhs]
        if rel == LE:
            line[slack_at] = _ONE
            basis.append(slack_at)
            slack_at += 1
        elif rel == GE:
            line[slack_at] = -_ONE
            slack_at += 1
            line[art_at] = _ONE
            basis.append(art_at)
            art_at += 1
        else:
            line[art_at] = _ONE
            basis.append(art_at)
            art_at += 1
        tableau.append(line)

    art_start = n + n_slack

    # Phase 1: minimize the artificial sum.
    if n_art:
        cost = [_ZERO] * (width + 1)
        for j in range(art_start, width):
            cost[j] = _ONE
        for r, b in enumerate(basis):
            if b >= art_start:
                for j in range(width + 1):
                    cost[j] -= tableau[r][j]
        _iterate(tableau, basis, cost)
        if -cost[-1] != 0:
            return None
        # Pivot lingering artificials out of the basis where possible.
        for r, b in enumerate(basis):
            if b >= art_start:
                for j in range(art_start):
                    if tableau[r][j] != 0:
                        _pivot(tableau, basis, r, j)
                        break
        # Freeze artificial columns at zero so phase 2 cannot re-enter them.
        for line in tableau:
            for j in range(art_start, width):
                line[j] = _ZERO

    # Phase 2: the real objective.
    cost = [_ZERO] * (width + 1)
    for j in range(n):
        cost[j] = Fraction(objective[j])
    for r, b in enumerate(basis):
        factor = cost[b]
        if factor:
            for j in range(width + 1):
                cost[j] -= factor * tableau[r][j]
    _iterate(tableau, basis, cost)

    x = [_ZERO] * n
    for r, b in enumerate(basis):
        if b < n:
            x[b] = tableau[r][-1]
    value = sum(c * v for c, v in zip(objective, x))
    return value, x


def solve_milp(
    objective: Sequence[Fraction],
    rows: Sequence[Row],
    integer_vars: Iterable[int],
) -> tuple[Fraction, list[Fraction]] | None:
    """Minimize over x >= 0 with the listed variables integral.

    Plain branch-and-bound on the exact LP relaxation. The relaxation value
    is an exact lower bound, so pruning on the incumbent is safe.
    """
    int_vars = sorted(set(integer_vars))
    n = len(objective)
    best: tuple[Fraction, list[Fraction]] | None = None
    stack: list[list[Row]] = [list(rows)]
    while stack:
        node_rows = stack.pop()
        relaxed = solve_lp(objective, node_rows)
        if relaxed is None:
            continue
        value, x = relaxed
        if best is not None and value >= best[0]:
            continue
        branch_var = -1
        for i in int_vars:
            if x[i].denominator != 1:
                branch_var = i
                break
        if branch_var < 0:
            best = (value, x)
            continue
        floor = x[branch_var].numerator // x[branch_var].denominator
        stack.append(node_rows + [unit_row(n, branch_var, GE, floor + 1)])
        stack.append(node_rows + [unit_row(n, branch_var, LE, floor)])
    return best
