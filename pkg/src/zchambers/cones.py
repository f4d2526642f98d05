"""Independent volume oracle: exact dual cones and anticanonical slice volumes.

Nothing here knows about contractions or pivot divisors. The nef cone is
computed from the Mori generators by double description, its anticanonical
slice is cut into simplices by a pulling triangulation, and the simplices
are measured by determinants in lattice coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial, gcd
from typing import Sequence

from .lattice import IntersectionForm, determinant, primitive, rank, row_echelon
from .values import INFINITE

DEFAULT_ORACLE_RANK = 7


class OracleInfeasible(RuntimeError):
    """The oracle refuses a surface above its configured rank bound."""


class DegenerateCone(ValueError):
    """Generators that do not span a pointed, full-dimensional cone."""


@dataclass(frozen=True)
class RationalCone:
    rays: tuple

    @property
    def dim(self) -> int:
        return rank(self.rays) if self.rays else 0


@dataclass(frozen=True)
class SlicePolytope:
    """Origin together with one vertex ``r / (antiK . r)`` per ray."""

    vertices: tuple


def _primitive_int(v):
    g = 0
    for x in v:
        g = gcd(g, x)
    return tuple(x // g for x in v) if g > 1 else tuple(v)


def extreme_rays(inequalities: Sequence[Sequence[int]], dim: int) -> list[tuple[int, ...]]:
    """Extremal rays of ``{x : a . x >= 0 for every row a}`` (standard dot product).

    Double description with integer rays and combinatorial adjacency.
    The cone must be pointed, i.e. the rows must have full rank.
    """
    rows = []
    seen = set()
    for a in inequalities:
        p = primitive(a)
        if any(p) and p not in seen:
            seen.add(p)
            rows.append(p)
    # initial simplicial cone from dim independent rows
    basis_idx = []
    echelon = []
    for i, a in enumerate(rows):
        if rank(echelon + [list(a)]) > len(echelon):
            echelon.append(list(a))
            basis_idx.append(i)
            if len(basis_idx) == dim:
                break
    if len(basis_idx) < dim:
        raise DegenerateCone("inequalities do not define a pointed cone")
    B = [rows[i] for i in basis_idx]
    inv = _inverse_columns(B)
    rays = []
    zeros = []
    for j in range(dim):
        rays.append(primitive(inv[j]))
        z = 0
        for k, i in enumerate(basis_idx):
            if k != j:
                z |= 1 << i
        zeros.append(z)
    done = set(basis_idx)
    for i, a in enumerate(rows):
        if i in done:
            continue
        bit = 1 << i
        vals = [sum(x * y for x, y in zip(a, r)) for r in rays]
        pos = [k for k, v in enumerate(vals) if v > 0]
        neg = [k for k, v in enumerate(vals) if v < 0]
        zer = [k for k, v in enumerate(vals) if v == 0]
        new_rays = []
        new_zeros = []
        for p in pos:
            for q in neg:
                common = zeros[p] & zeros[q]
                if common.bit_count() < dim - 2:
                    continue
                if any(
                    (zeros[t] & common) == common for t in range(len(rays)) if t != p and t != q
                ):
                    continue
                vp, vq = vals[p], -vals[q]
                r = tuple(vq * x + vp * y for x, y in zip(rays[p], rays[q]))
                new_rays.append(_primitive_int(r))
                new_zeros.append(common | bit)
        keep = pos + zer
        zer_set = set(zer)
        rays = [rays[k] for k in keep] + new_rays
        zeros = [zeros[k] | (bit if k in zer_set else 0) for k in keep] + new_zeros
        done.add(i)
    return rays


def _inverse_columns(B):
    """Columns of ``B^{-1}``: column j is tight on every row of B but row j."""
    n = len(B)
    aug = [list(row) + [int(i == j) for j in range(n)] for i, row in enumerate(B)]
    rows, _ = row_echelon(aug)
    inv = [row[n:] for row in rows]
    return [[inv[i][j] for i in range(n)] for j in range(n)]


def dual_cone(form: IntersectionForm, generators: Sequence[Sequence]) -> RationalCone:
    """Extremal rays of ``{x : x . g >= 0 for all generators g}`` under the form."""
    n = form.rank
    if not generators:
        raise DegenerateCone("no generators")
    if rank(generators) < n:
        raise DegenerateCone("generators do not span the whole space; the dual contains a line")
    covectors = [primitive(form.covector(primitive(g))) for g in generators]
    rays = extreme_rays(covectors, n)
    if not rays or rank(rays) < n:
        raise DegenerateCone("generator cone is not pointed")
    return RationalCone(tuple(sorted(rays, reverse=True)))


def facet_incidence(form: IntersectionForm, rays: Sequence[Sequence]) -> list[int]:
    """For each facet of ``cone(rays)``, the bitmask of rays lying on it."""
    normals = dual_cone(form, rays).rays
    masks = []
    for y in normals:
        cy = form.covector(y)
        m = 0
        for k, r in enumerate(rays):
            if sum(a * b for a, b in zip(cy, r)) == 0:
                m |= 1 << k
        masks.append(m)
    return masks


def _members(mask: int) -> list[int]:
    out = []
    k = 0
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return out


def pulling_triangulation(rays: Sequence[Sequence], facets: Sequence[int], last: bool = False) -> list[tuple]:
    """Triangulate a full-dimensional pointed cone into simplicial cones.

    Pull a ray of the current face, and cone it over the triangulations of
    the facets of that face that miss it. ``last`` switches which ray is
    pulled, giving a second, generally different triangulation.
    """
    n = len(rays[0])
    rank_cache = {}

    def face_rank(mask):
        if mask not in rank_cache:
            rank_cache[mask] = rank([rays[k] for k in _members(mask)]) if mask else 0
        return rank_cache[mask]

    def triangulate(mask, dim):
        members = _members(mask)
        if len(members) == dim:
            return [tuple(members)]
        apex = members[-1] if last else members[0]
        subfaces = set()
        for f in facets:
            sub = mask & f
            if sub != mask and not (sub >> apex) & 1 and face_rank(sub) == dim - 1:
                subfaces.add(sub)
        out = []
        for sub in subfaces:
            for simplex in triangulate(sub, dim - 1):
                out.append(simplex + (apex,))
        return out

    full = (1 << len(rays)) - 1
    return triangulate(full, n)


def slice_volume(form: IntersectionForm, cone: RationalCone, antiK: Sequence, last: bool = False):
    """Lattice-normalised volume of ``conv(0, r / (antiK . r))``.

    Infinite as soon as some ray fails to meet the hyperplane ``antiK = 1``.
    """
    rays = [tuple(r) for r in cone.rays]
    n = form.rank
    heights = [form.dot(antiK, r) for r in rays]
    if any(h <= 0 for h in heights):
        return INFINITE
    if not rays or rank(rays) < n:
        return Fraction(0)
    facets = facet_incidence(form, rays)
    # drop rays that are not extremal in cone(rays)
    extremal = [k for k in range(len(rays)) if n == 1 or _smallest_face_rank(rays, facets, k) == 1]
    if len(extremal) < len(rays):
        rays = [rays[k] for k in extremal]
        heights = [heights[k] for k in extremal]
        facets = facet_incidence(form, rays)
    scaled = [[Fraction(x, h) for x in r] for r, h in zip(rays, heights)]
    total = Fraction(0)
    for simplex in pulling_triangulation(rays, facets, last=last):
        total += abs(determinant([scaled[k] for k in simplex]))
    return total / factorial(n)


def _smallest_face_rank(rays, facets, k):
    # the smallest face through ray k is a ray exactly when k is extremal
    common = -1
    for f in facets:
        if (f >> k) & 1:
            common &= f
    if common == -1:
        return len(rays[0])
    return rank([rays[j] for j in range(len(rays)) if (common >> j) & 1])


def simplicial_volume(form: IntersectionForm, rays: Sequence[Sequence], antiK: Sequence):
    """``|det(scaled rays)| / rho!`` for a simplicial cone."""
    heights = [form.dot(antiK, r) for r in rays]
    if any(h <= 0 for h in heights):
        return INFINITE
    scaled = [[Fraction(x, h) for x in r] for r, h in zip(rays, heights)]
    return abs(determinant(scaled)) / factorial(form.rank)


def slice_polytope(form: IntersectionForm, cone: RationalCone, antiK: Sequence) -> SlicePolytope:
    verts = [tuple(Fraction(0) for _ in range(form.rank))]
    for r in cone.rays:
        h = form.dot(antiK, r)
        if h > 0:
            verts.append(tuple(Fraction(x, h) for x in r))
    return SlicePolytope(tuple(verts))


# ---------------------------------------------------------------------------
# surface-level oracles


def _check_rank(surface, max_rank):
    bound = DEFAULT_ORACLE_RANK if max_rank is None else max_rank
    if surface.rank > bound:
        raise OracleInfeasible(f"oracle infeasible: rank {surface.rank} exceeds bound {bound}")


def nef_cone(surface) -> RationalCone:
    return dual_cone(surface.form, surface.mori_generators)


def nef_volume_oracle(surface, max_rank: int | None = None):
    _check_rank(surface, max_rank)
    return slice_volume(surface.form, nef_cone(surface), surface.anticanonical)


def chamber_volume_oracle(surface, support: Sequence[Sequence], max_rank: int | None = None):
    """Volume of the cone spanned by the face of the nef cone cut out by the
    support together with the support curves themselves."""
    support = [tuple(c) for c in support]
    for c in support:
        if surface.dot(c, c) <= -2:
            return INFINITE
    _check_rank(surface, max_rank)
    nef = nef_cone(surface)
    face = [r for r in nef.rays if all(surface.dot(r, c) == 0 for c in support)]
    return slice_volume(surface.form, RationalCone(tuple(face) + tuple(support)), surface.anticanonical)
