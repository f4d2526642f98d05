"""Zariski chamber supports: enumeration, classification and census.

A chamber is determined by its support Null(P), a set of negative curves
with negative definite Gram matrix. Supports are enumerated depth first in
lexicographic order of curve indices; a subset is only extended while it
stays negative definite, which is valid because negative definiteness
passes to subsets.

The census classifies each finite support by the surface obtained after
blowing it down. For a set of disjoint (-1)-curves the pushed-forward
negative curves are read off without contracting anything:
``C'^2 = C^2 + sum (C.E)^2`` and ``K'.C' = K.C - sum C.E``. These numbers
already determine the name of every standard target, so only one
representative per class is contracted for real (and checked against the
prediction). Supports whose target has no standard name are contracted one
by one.
"""
from __future__ import annotations

from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Iterator, Sequence

import numpy as np

from .lattice import NegDefState
from .surfaces import SurfaceError, SurfaceModel, contract_set, identify_invariants
from .values import INFINITE, format_volume, is_infinite


@dataclass(frozen=True, order=True)
class ChamberSupport:
    """Sorted indices into ``surface.negative_curves``."""

    indices: tuple = ()

    def __post_init__(self):
        idx = tuple(sorted(set(int(i) for i in self.indices)))
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def classes(self, surface: SurfaceModel) -> list[tuple]:
        return [surface.negative_curves[i] for i in self.indices]

    def names(self, surface: SurfaceModel) -> list[str]:
        return [surface.curve_names()[i] for i in self.indices]


@dataclass(frozen=True)
class CensusRow:
    size: int
    target: str | None
    count: int
    volume: object = None

    @property
    def finite(self) -> bool:
        return self.target is not None


def _row_order(row: CensusRow):
    return (row.size, row.target is None, row.target or "", format_volume(row.volume) if row.volume is not None else "")


@dataclass(frozen=True)
class ChamberCensus:
    """Chamber counts grouped by (support size, contraction target, volume).

    ``target`` is ``None`` for supports containing a curve that is not a
    (-1)-curve; those chambers have infinite volume.
    """

    label: str
    rank: int
    rows: tuple = field(default_factory=tuple)

    @property
    def total(self) -> int:
        return sum(r.count for r in self.rows)

    def counts_by_size(self) -> dict[int, int]:
        out = defaultdict(int)
        for r in self.rows:
            out[r.size] += r.count
        return dict(sorted(out.items()))

    def counts_by_target(self) -> list[tuple[str | None, int]]:
        out = defaultdict(int)
        for r in self.rows:
            out[r.target] += r.count
        return sorted(out.items(), key=lambda kv: (kv[0] is None, kv[0] or ""))

    def row(self, size: int, target: str | None) -> CensusRow | None:
        found = [r for r in self.rows if r.size == size and r.target == target]
        if len(found) > 1:
            raise LookupError(f"several rows for size {size} and target {target}")
        return found[0] if found else None

    def finite_count(self) -> int:
        return sum(r.count for r in self.rows if r.finite)

    def merge(self, other: "ChamberCensus") -> "ChamberCensus":
        acc = defaultdict(int)
        for r in self.rows + other.rows:
            acc[r.size, r.target, r.volume] += r.count
        rows = [CensusRow(s, t, c, v) for (s, t, v), c in acc.items()]
        return ChamberCensus(self.label, self.rank, tuple(sorted(rows, key=_row_order)))


# ---------------------------------------------------------------------------
# enumeration


def _gram(surface: SurfaceModel) -> list[list[int]]:
    curves = surface.negative_curves
    covs = [surface.form.covector(c) for c in curves]
    return [[sum(a * b for a, b in zip(cv, d)) for d in curves] for cv in covs]


def _compatibility(G: Sequence[Sequence[int]]) -> list[int]:
    """Bitset of later curves j such that {i, j} is negative definite."""
    n = len(G)
    out = []
    for i in range(n):
        m = 0
        for j in range(i + 1, n):
            if G[i][i] * G[j][j] - G[i][j] * G[j][i] > 0:
                m |= 1 << j
        out.append(m)
    return out


def _walk(G, compat, firsts, max_size) -> Iterator[tuple]:
    """Nonempty negative definite subsets whose smallest index is in ``firsts``."""
    if max_size < 1:
        return
    stack = []
    for i in firsts:
        if G[i][i] >= 0:
            continue
        stack.append(((i,), NegDefState().extend((), G[i][i]), compat[i]))
        while stack:
            members, state, cand = stack.pop()
            yield members
            if len(members) == max_size:
                continue
            children = []
            while cand:
                low = cand & -cand
                j = low.bit_length() - 1
                cand ^= low
                row = G[j]
                new = state.extend([row[m] for m in members], row[j])
                if new is not None:
                    children.append((members + (j,), new, cand & compat[j]))
            # reversed so that the stack pops in lexicographic order
            stack.extend(reversed(children))


def negative_definite_subsets(gram: Sequence[Sequence[int]], max_size: int | None = None) -> Iterator[tuple]:
    """Index tuples of the negative definite principal submatrices, the empty one first."""
    G = [list(row) for row in gram]
    bound = len(G) if max_size is None else max_size
    yield ()
    yield from _walk(G, _compatibility(G), range(len(G)), bound)


def enumerate_supports(surface: SurfaceModel, max_size: int | None = None) -> Iterator[ChamberSupport]:
    """Every negative definite subset of the negative curves, each once, in lexicographic order."""
    bound = surface.rank - 1 if max_size is None else min(max_size, surface.rank - 1)
    G = _gram(surface)
    yield ChamberSupport(())
    for members in _walk(G, _compatibility(G), range(len(G)), bound):
        yield ChamberSupport(members)


def _check_support(surface: SurfaceModel, support) -> ChamberSupport:
    if not isinstance(support, ChamberSupport):
        support = ChamberSupport(tuple(support))
    n = len(surface.negative_curves)
    if any(i < 0 or i >= n for i in support.indices):
        raise SurfaceError(f"invalid support: indices must lie in 0..{n - 1}")
    G = _gram(surface)
    state = NegDefState()
    for k, i in enumerate(support.indices):
        state = state.extend([G[i][j] for j in support.indices[:k]], G[i][i])
        if state is None:
            raise SurfaceError("invalid support: Gram matrix is not negative definite")
    return support


def classify_support(surface: SurfaceModel, support) -> tuple[bool, int, str | None]:
    """``(finite, size, target)``; the target is None for infinite chambers."""
    support = _check_support(surface, support)
    s = len(support)
    flags = _minus_one_flags(surface)
    if not all(flags[i] for i in support.indices):
        return False, s, None
    return True, s, contract_set(surface, support.classes(surface)).identity


def _minus_one_flags(surface: SurfaceModel) -> list[bool]:
    return [sq == -1 and k == -1 for sq, k in zip(surface.squares, surface.canonical_degrees)]


# ---------------------------------------------------------------------------
# census


@dataclass(frozen=True)
class _Job:
    """Plain data handed to enumeration workers (surfaces carry closures)."""

    gram: tuple
    degrees: tuple
    rank: int
    K2: object
    max_size: int
    firsts: tuple


def _predicted_label(job: _Job, key) -> str:
    s, n_neg, n_odd, low = key
    if n_odd == 0:
        squares, degrees = [-1] * n_neg, [-1] * n_neg
    else:
        # any list that is not all (-1, -1) and carries the smallest square first
        squares = [low] + [-1] * (n_neg - 1)
        degrees = [0] + [-1] * (n_neg - 1)
    return identify_invariants(job.rank - s, job.K2 + s, squares, degrees)


def _census_worker(job: _Job):
    """Counts per signature, a representative per signature, and the
    supports whose target needs an individual contraction."""
    G = job.gram
    n = len(G)
    compat = _compatibility(G)
    flags = [G[i][i] == -1 and job.degrees[i] == -1 for i in range(n)]
    sq0 = np.array([G[i][i] for i in range(n)], dtype=np.int64)
    kc0 = np.array(job.degrees, dtype=np.int64)
    M1 = np.array(G, dtype=np.int64)
    M2 = M1 * M1
    counts = defaultdict(int)
    reps = {}
    custom = []
    labels = {}
    for members in _walk(G, compat, job.firsts, job.max_size):
        s = len(members)
        if not all(flags[i] for i in members):
            key = (s, "inf")
        else:
            idx = list(members)
            sq = sq0 + M2[idx].sum(axis=0)
            neg = sq < 0
            n_neg = int(np.count_nonzero(neg))
            if n_neg:
                kc = kc0 - M1[idx].sum(axis=0)
                n_odd = int(np.count_nonzero(neg & ((sq != -1) | (kc != -1))))
                low = int(sq.min())
            else:
                n_odd, low = 0, 0
            key = (s, n_neg, n_odd, low)
            if key not in labels:
                labels[key] = _predicted_label(job, key)
            if labels[key] == "custom":
                custom.append(members)
                continue
        counts[key] += 1
        if key not in reps:
            reps[key] = members
    return dict(counts), reps, custom


def _split(n: int, workers: int) -> list[tuple]:
    # round robin: early first indices own the largest subtrees
    return [tuple(range(w, n, workers)) for w in range(workers) if w < n]


def census(surface: SurfaceModel, volumes: bool = True, workers: int = 1, max_size: int | None = None) -> ChamberCensus:
    """Count chambers by (support size, target); with ``volumes`` also attach chamber volumes."""
    from .volumes import nef_volume

    bound = surface.rank - 1 if max_size is None else min(max_size, surface.rank - 1)
    G = tuple(tuple(row) for row in _gram(surface))
    n = len(G)
    base = _Job(G, tuple(surface.canonical_degrees), surface.rank, surface.K2, bound, ())
    jobs = [
        _Job(base.gram, base.degrees, base.rank, base.K2, bound, part) for part in _split(n, max(1, workers))
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_census_worker, jobs))
    else:
        results = [_census_worker(job) for job in jobs]

    counts = defaultdict(int)
    reps = {}
    custom = []
    for part_counts, part_reps, part_custom in results:
        for key, c in part_counts.items():
            counts[key] += c
            if key not in reps or part_reps[key] < reps[key]:
                reps[key] = part_reps[key]
        custom.extend(part_custom)

    rho = surface.rank
    rows = defaultdict(int)

    def pyramid(s, target_surface):
        if not volumes:
            return None
        vol = nef_volume(target_surface)
        if is_infinite(vol):
            return INFINITE
        return Fraction(factorial(rho - s), factorial(rho)) * vol

    # the nef chamber is the empty support
    rows[0, surface.identity, pyramid(0, surface)] += 1
    for key, c in counts.items():
        s = key[0]
        if key[1] == "inf":
            rows[s, None, INFINITE if volumes else None] += c
            continue
        rep = ChamberSupport(reps[key])
        target = contract_set(surface, rep.classes(surface))
        predicted = _predicted_label(base, key)
        if target.identity != predicted:
            raise AssertionError(
                f"signature predicted {predicted} but contracting {rep.names(surface)} gives {target.identity}"
            )
        rows[s, predicted, pyramid(s, target)] += c
    for members in custom:
        rep = ChamberSupport(members)
        target = contract_set(surface, rep.classes(surface))
        rows[len(members), target.identity, pyramid(len(members), target)] += 1
    out = [CensusRow(s, t, c, v) for (s, t, v), c in rows.items()]
    return ChamberCensus(surface.label, rho, tuple(sorted(out, key=_row_order)))
