"""Exact phase-I simplex for small feasibility problems.

Only feasibility is ever needed here (pivot divisors, cone membership), so
there is no objective beyond driving the artificial variables to zero.
Bland's rule keeps it from cycling.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def nonnegative_solution(A: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """Some ``x >= 0`` with ``A x == b``, or None if there is none."""
    m = len(A)
    n = len(A[0]) if m else 0
    if m == 0:
        return [Fraction(0)] * n
    rows = []
    for i in range(m):
        row = [Fraction(x) for x in A[i]]
        rhs = Fraction(b[i])
        if rhs < 0:
            row = [-x for x in row]
            rhs = -rhs
        rows.append(row + [Fraction(int(i == k)) for k in range(m)] + [rhs])
    width = n + m
    basis = [n + i for i in range(m)]
    # reduced costs of the phase-I objective (sum of artificials)
    cost = [Fraction(0)] * (width + 1)
    for row in rows:
        for j in range(width + 1):
            cost[j] -= row[j]
    for i in range(m):
        cost[n + i] = Fraction(0)

    while True:
        entering = next((j for j in range(width) if cost[j] < 0), None)
        if entering is None:
            break
        best = None
        for i, row in enumerate(rows):
            a = row[entering]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:  # unbounded direction; cannot happen for phase I
            break
        _pivot(rows, cost, best[1], entering)
        basis[best[1]] = entering

    if -cost[-1] != 0:
        return None
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = rows[i][-1]
    return x


def _pivot(rows, cost, r, c):
    inv = 1 / rows[r][c]
    rows[r] = [x * inv for x in rows[r]]
    pr = rows[r]
    for i, row in enumerate(rows):
        if i != r and row[c] != 0:
            f = row[c]
            rows[i] = [a - f * p for a, p in zip(row, pr)]
    if cost[c] != 0:
        f = cost[c]
        cost[:] = [a - f * p for a, p in zip(cost, pr)]


def feasible_point(eq: Sequence[Sequence], eq_rhs: Sequence, ge: Sequence[Sequence]) -> list[Fraction] | None:
    """Some free vector ``x`` with ``eq x == eq_rhs`` and ``ge x >= 0``.

    Written in standard form with ``x = u - w`` and slacks ``s = ge x``.
    """
    n = len(eq[0]) if eq else len(ge[0])
    k = len(ge)
    A = []
    b = []
    for row, rhs in zip(eq, eq_rhs):
        A.append(list(row) + [-x for x in row] + [0] * k)
        b.append(rhs)
    for i, row in enumerate(ge):
        A.append(list(row) + [-x for x in row] + [-int(i == j) for j in range(k)])
        b.append(0)
    sol = nonnegative_solution(A, b)
    if sol is None:
        return None
    return [sol[i] - sol[n + i] for i in range(n)]


def in_cone(generators: Sequence[Sequence], target: Sequence) -> list[Fraction] | None:
    """Nonnegative coefficients expressing ``target`` in the generators, or None."""
    if not generators:
        return [] if not any(target) else None
    dim = len(target)
    A = [[g[i] for g in generators] for i in range(dim)]
    return nonnegative_solution(A, target)
