"""Exact linear algebra on the Neron-Severi lattice.

Classes are plain tuples of ``int`` (lattice classes) or ``Fraction``
(rational classes such as pivot divisors), written in a fixed lattice basis.
Nothing in here touches floating point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

Vector = tuple  # tuple of int or Fraction


@dataclass(frozen=True)
class IntersectionForm:
    """Symmetric integer Gram matrix of the intersection pairing."""

    gram: tuple
    _diag: tuple | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        gram = tuple(tuple(int(x) for x in row) for row in self.gram)
        object.__setattr__(self, "gram", gram)
        n = len(gram)
        diagonal = all(gram[i][j] == 0 for i in range(n) for j in range(n) if i != j)
        object.__setattr__(self, "_diag", tuple(gram[i][i] for i in range(n)) if diagonal else None)

    @property
    def rank(self) -> int:
        return len(self.gram)

    @classmethod
    def diagonal(cls, entries: Iterable[int]) -> "IntersectionForm":
        entries = list(entries)
        n = len(entries)
        return cls(tuple(tuple(entries[i] if i == j else 0 for j in range(n)) for i in range(n)))

    def dot(self, a: Sequence, b: Sequence):
        if len(a) != self.rank or len(b) != self.rank:
            raise ValueError(f"dimension mismatch: {len(a)}, {len(b)} vs rank {self.rank}")
        if self._diag is not None:
            return sum(d * x * y for d, x, y in zip(self._diag, a, b))
        total = 0
        for i, x in enumerate(a):
            if x:
                row = self.gram[i]
                total += x * sum(g * y for g, y in zip(row, b))
        return total

    def square(self, a: Sequence):
        return self.dot(a, a)

    def covector(self, a: Sequence) -> tuple:
        """Row ``a^T G`` so that ``a . b == sum(covector(a)[i] * b[i])``."""
        if self._diag is not None:
            return tuple(d * x for d, x in zip(self._diag, a))
        n = self.rank
        return tuple(sum(a[i] * self.gram[i][j] for i in range(n)) for j in range(n))

    def gram_of(self, classes: Sequence[Sequence]) -> list[list]:
        return [[self.dot(a, b) for b in classes] for a in classes]


def intersect(form: IntersectionForm, a: Sequence, b: Sequence) -> Fraction:
    """Exact intersection number ``a^T G b``."""
    return Fraction(form.dot(a, b))


# ---------------------------------------------------------------------------
# negative definiteness


class NegDefState:
    """Incremental LDL^T factorisation of a negative definite Gram matrix.

    ``extend`` adds one more class given its products with the classes already
    present; it costs O(k^2) for k classes and returns ``None`` as soon as the
    enlarged matrix stops being negative definite.
    """

    __slots__ = ("rows", "pivots")

    def __init__(self, rows: tuple = (), pivots: tuple = ()):
        self.rows = rows
        self.pivots = pivots

    def __len__(self):
        return len(self.pivots)

    def extend(self, products: Sequence, self_product) -> "NegDefState | None":
        k = len(self.pivots)
        if len(products) != k:
            raise ValueError("need one product per class already in the state")
        if not any(products):
            # orthogonal to everything so far: the new pivot is the diagonal entry
            if self_product >= 0:
                return None
            return NegDefState(self.rows + ((Fraction(0),) * k,), self.pivots + (Fraction(self_product),))
        y = []
        for i in range(k):
            acc = Fraction(products[i])
            row = self.rows[i]
            for j in range(i):
                if row[j]:
                    acc -= row[j] * y[j]
            y.append(acc)
        d = Fraction(self_product)
        new_row = []
        for j in range(k):
            lj = y[j] / self.pivots[j]
            new_row.append(lj)
            d -= lj * y[j]
        if d >= 0:
            return None
        return NegDefState(self.rows + (tuple(new_row),), self.pivots + (d,))


def is_negative_definite(form: IntersectionForm, classes: Sequence[Sequence]) -> bool:
    """True iff the Gram matrix of ``classes`` is negative definite.

    Equivalent to the leading principal minors alternating in sign, starting
    negative; the pivots of the LDL^T factorisation are the ratios of
    consecutive minors.
    """
    state = NegDefState()
    for i, c in enumerate(classes):
        state = state.extend([form.dot(c, classes[j]) for j in range(i)], form.square(c))
        if state is None:
            return False
    return True


def gram_is_negative_definite(gram: Sequence[Sequence]) -> bool:
    state = NegDefState()
    for i in range(len(gram)):
        state = state.extend(gram[i][:i], gram[i][i])
        if state is None:
            return False
    return True


def leading_minors(gram: Sequence[Sequence]) -> list[Fraction]:
    return [determinant([row[:k] for row in gram[:k]]) for k in range(1, len(gram) + 1)]


# ---------------------------------------------------------------------------
# rational matrix helpers


def determinant(matrix: Sequence[Sequence]) -> Fraction:
    m = [[Fraction(x) for x in row] for row in matrix]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if m[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            m[c], m[p] = m[p], m[c]
            det = -det
        det *= m[c][c]
        inv = 1 / m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] * inv
            if f:
                m[r] = [a - f * b for a, b in zip(m[r], m[c])]
    return det


def rank(vectors: Sequence[Sequence]) -> int:
    return len(row_echelon(vectors)[0])


def row_echelon(vectors: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over Q; returns (nonzero rows, pivot columns)."""
    m = [[Fraction(x) for x in row] for row in vectors]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def solve(matrix: Sequence[Sequence], rhs: Sequence) -> list[Fraction] | None:
    """One exact solution of ``matrix @ x == rhs`` (free variables set to 0), or None."""
    aug = [list(row) + [b] for row, b in zip(matrix, rhs)]
    n = len(matrix[0]) if matrix else 0
    rows, pivots = row_echelon(aug)
    if pivots and pivots[-1] == n:
        return None
    x = [Fraction(0)] * n
    for row, c in zip(rows, pivots):
        x[c] = row[n]
    return x


def nullspace(matrix: Sequence[Sequence], ncols: int | None = None) -> list[list[Fraction]]:
    """Basis of ``{x : matrix @ x == 0}``."""
    if ncols is None:
        ncols = len(matrix[0])
    if not matrix:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    rows, pivots = row_echelon(matrix)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, c in zip(rows, pivots):
            v[c] = -row[f]
        basis.append(v)
    return basis


def inverse(matrix: Sequence[Sequence]) -> list[list[Fraction]]:
    n = len(matrix)
    aug = [list(row) + [int(i == j) for j in range(n)] for i, row in enumerate(matrix)]
    rows, pivots = row_echelon(aug)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [row[n:] for row in rows]


def primitive(v: Sequence) -> tuple[int, ...]:
    """Scale a rational vector to the primitive integer vector on the same ray."""
    fr = [Fraction(x) for x in v]
    den = 1
    for x in fr:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in fr]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        return tuple(ints)
    return tuple(x // g for x in ints)


def as_fractions(v: Sequence) -> tuple[Fraction, ...]:
    return tuple(Fraction(x) for x in v)


def inertia(gram: Sequence[Sequence]) -> tuple[int, int, int]:
    """(positive, negative, zero) counts of a symmetric rational matrix.

    Sylvester's law: diagonalise by symmetric elimination. When every
    remaining diagonal entry vanishes but an off-diagonal one does not, the
    congruence ``e_i -> e_i + e_j`` manufactures a nonzero pivot.
    """
    m = [[Fraction(x) for x in row] for row in gram]
    n = len(m)
    pos = neg = 0
    active = list(range(n))
    while active:
        p = next((i for i in active if m[i][i] != 0), None)
        if p is None:
            pair = next(((i, j) for i in active for j in active if i != j and m[i][j] != 0), None)
            if pair is None:
                break
            i, j = pair
            for k in range(n):
                m[i][k] += m[j][k]
            for k in range(n):
                m[k][i] += m[k][j]
            p = i
        d = m[p][p]
        if d > 0:
            pos += 1
        else:
            neg += 1
        active.remove(p)
        for i in active:
            f = m[i][p] / d
            if f:
                for k in active:
                    m[i][k] -= f * m[p][k]
        for i in active:
            m[i][p] = m[p][i] = Fraction(0)
    return pos, neg, n - pos - neg


# ---------------------------------------------------------------------------
# integer lattices


def hermite_rows(vectors: Sequence[Sequence[int]]) -> list[list[int]]:
    """Row-style Hermite normal form: a basis of the Z-span of ``vectors``."""
    m = [list(int(x) for x in v) for v in vectors]
    if not m:
        return []
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        rows = [i for i in range(r, len(m)) if m[i][c] != 0]
        if not rows:
            continue
        # Euclid on column c among the remaining rows
        while True:
            rows = [i for i in range(r, len(m)) if m[i][c] != 0]
            if len(rows) <= 1:
                break
            piv = min(rows, key=lambda i: abs(m[i][c]))
            for i in rows:
                if i != piv:
                    q = m[i][c] // m[piv][c]
                    m[i] = [a - q * b for a, b in zip(m[i], m[piv])]
        if not rows:
            continue
        p = rows[0]
        m[r], m[p] = m[p], m[r]
        if m[r][c] < 0:
            m[r] = [-x for x in m[r]]
        for i in range(r):
            q = m[i][c] // m[r][c]
            if q:
                m[i] = [a - q * b for a, b in zip(m[i], m[r])]
        r += 1
    return [row for row in m[:r] if any(row)]


def orthocomplement_basis(form: IntersectionForm, e: Sequence[int]) -> list[tuple[int, ...]]:
    """Integral basis of ``e^perp`` for a class with ``e.e == -1``.

    Uses the splitting ``v = p(v) - (v.e) e`` with ``p(v) = v + (v.e) e``;
    the images of the standard basis vectors generate ``e^perp`` and Hermite
    reduction turns them into a basis.
    """
    if form.square(e) != -1:
        raise ValueError(f"class {tuple(e)} has self-intersection {form.square(e)}, expected -1")
    n = form.rank
    ce = form.covector(e)
    gens = []
    for i in range(n):
        # p(e_i) = e_i + (e_i . e) e
        t = ce[i]
        gens.append([int(i == j) + t * e[j] for j in range(n)])
    basis = hermite_rows(gens)
    if len(basis) != n - 1:
        raise ArithmeticError("orthogonal complement has unexpected rank")
    return [tuple(b) for b in basis]


def validate_lattice(form: IntersectionForm) -> list[str]:
    """All violations of symmetry, unimodularity and signature (1, rho-1)."""
    g = form.gram
    n = len(g)
    problems = []
    if any(len(row) != n for row in g):
        return ["gram matrix is not square"]
    if any(g[i][j] != g[j][i] for i in range(n) for j in range(i)):
        problems.append("gram matrix is not symmetric")
        return problems
    det = determinant(g)
    if abs(det) != 1:
        problems.append(f"determinant {det}, not unimodular")
    pos, neg, zero = inertia(g)
    if (pos, neg, zero) != (1, n - 1, 0):
        if zero:
            problems.append(f"signature ({pos},{neg}) with {zero}-dimensional radical")
        else:
            problems.append(f"signature ({pos},{neg})")
    return problems
