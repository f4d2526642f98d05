"""Nef cone and chamber volumes by blowing down (-1)-curves.

The nef volume of a surface with big anticanonical class is
``(1/rho) * sum_E (D.E) * vol(Nef(blow-down of E))`` over its (-1)-curves,
for any nef class ``D`` on the hyperplane ``-K = 1`` that is orthogonal to
every extremal ray of the Mori cone other than the (-1)-curves. A chamber
whose support is ``s`` disjoint (-1)-curves has volume
``(rho - s)!/rho!`` times the nef volume of the blow-down of its support.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Sequence

from . import lp
from .cones import DegenerateCone, dual_cone, slice_volume
from .lattice import NegDefState, solve
from .surfaces import (
    Memo,
    SurfaceError,
    SurfaceModel,
    contract,
    contract_set,
    extremal_generators,
    is_minus_one_curve,
    memo_key,
    minus_one_curves,
)
from .values import INFINITE, is_infinite

log = logging.getLogger(__name__)

NEF_MEMO = Memo()


class PivotInfeasible(ArithmeticError):
    """No admissible pivot divisor exists for the surface."""


class NotBig(ValueError):
    """The Zariski decomposition found no big positive part."""


def _dot(surface, a, b):
    return surface.form.dot(a, b)


def _frac(v):
    return tuple(Fraction(x) for x in v)


def _support_classes(surface: SurfaceModel, support) -> list[tuple]:
    """Accept a ChamberSupport, a list of indices or a list of classes."""
    idx = getattr(support, "indices", None)
    if idx is not None:
        return [surface.negative_curves[i] for i in idx]
    out = []
    for item in support:
        if isinstance(item, int):
            out.append(surface.negative_curves[item])
        else:
            out.append(tuple(item))
    return out


# ---------------------------------------------------------------------------
# Zariski decomposition


@dataclass(frozen=True)
class ZariskiPair:
    P: tuple
    N: tuple
    support: tuple  # indices into surface.negative_curves
    coefficients: tuple  # coefficient of each support curve in N

    def certificate(self, surface: SurfaceModel) -> list[str]:
        """Violated Zariski conditions, empty when the pair is valid."""
        problems = []
        curves = [surface.negative_curves[i] for i in self.support]
        for c in curves:
            if _dot(surface, self.P, c) != 0:
                problems.append(f"P.C != 0 for support curve {c}")
        for g in surface.mori_generators:
            if _dot(surface, self.P, g) < 0:
                problems.append(f"P is negative on Mori generator {g}")
        if any(a < 0 for a in self.coefficients):
            problems.append("negative coefficient in N")
        state = NegDefState()
        for i, c in enumerate(curves):
            state = state.extend([_dot(surface, c, curves[j]) for j in range(i)], _dot(surface, c, c))
            if state is None:
                problems.append("support is not negative definite")
                break
        return problems


def zariski_decompose(surface: SurfaceModel, D: Sequence) -> ZariskiPair:
    """Fujita's iteration: grow the support by curves meeting ``P`` negatively."""
    D = _frac(D)
    curves = surface.negative_curves
    support: list[int] = []
    coeffs: list[Fraction] = []
    P = D
    while True:
        bad = [k for k, c in enumerate(curves) if k not in support and _dot(surface, P, c) < 0]
        if not bad:
            break
        support.extend(bad)
        if len(support) > surface.rank - 1:
            raise NotBig("not big/pseudo-effective: negative part would exceed rho - 1 curves")
        gram = [[_dot(surface, curves[i], curves[j]) for j in support] for i in support]
        state = NegDefState()
        for i in range(len(support)):
            state = state.extend(gram[i][:i], gram[i][i])
            if state is None:
                raise NotBig("not big/pseudo-effective: support lost negative definiteness")
        rhs = [_dot(surface, D, curves[j]) for j in support]
        coeffs = solve(gram, rhs)
        P = tuple(
            d - sum(a * curves[i][m] for a, i in zip(coeffs, support)) for m, d in enumerate(D)
        )
    order = sorted(range(len(support)), key=lambda t: support[t])
    support = [support[t] for t in order]
    coeffs = [coeffs[t] for t in order] if coeffs else []
    N = tuple(d - p for d, p in zip(D, P))
    pair = ZariskiPair(P, N, tuple(support), tuple(coeffs))
    if any(a < 0 for a in pair.coefficients):
        raise NotBig("not big/pseudo-effective: negative coefficient in the negative part")
    if any(_dot(surface, P, g) < 0 for g in surface.mori_generators):
        raise NotBig("not big/pseudo-effective: positive part is not nef")
    if _dot(surface, P, P) <= 0:
        raise NotBig("not big: positive part has non-positive self-intersection")
    return pair


def chamber_of(surface: SurfaceModel, D: Sequence):
    from .chambers import ChamberSupport

    return ChamberSupport(zariski_decompose(surface, D).support)


# ---------------------------------------------------------------------------
# bigness and pivots


def is_anticanonical_big(surface: SurfaceModel) -> bool:
    """``-K`` is big iff it is positive on every nonzero nef class."""
    antiK = surface.anticanonical
    gens = surface.mori_generators
    if gens and all(_dot(surface, antiK, g) > 0 for g in gens):
        return True  # -K is ample
    try:
        rays = dual_cone(surface.form, gens).rays
    except DegenerateCone as exc:
        raise SurfaceError(f"degenerate Mori cone: {exc}") from None
    return all(_dot(surface, antiK, r) > 0 for r in rays)


@dataclass(frozen=True)
class PivotDivisor:
    D: tuple

    def violations(self, surface: SurfaceModel, constrained=None) -> list[str]:
        D = self.D
        problems = []
        if _dot(surface, surface.anticanonical, D) != 1:
            problems.append("-K.D != 1")
        for g in surface.mori_generators:
            if _dot(surface, D, g) < 0:
                problems.append(f"D is negative on Mori generator {g}")
        if _dot(surface, D, D) < 0:
            problems.append("D^2 < 0")
        if constrained is None:
            constrained = non_minus_one_extremal_rays(surface)
        for c in constrained:
            if _dot(surface, D, c) != 0:
                problems.append(f"D.C != 0 for extremal ray {c}")
        return problems


def non_minus_one_extremal_rays(surface: SurfaceModel) -> list[tuple]:
    rays = extremal_generators(surface.form, surface.mori_generators, surface.negative_curves)
    return [r for r in rays if not is_minus_one_curve(surface, r)]


def pivot_divisor(surface: SurfaceModel) -> PivotDivisor:
    """A certified pivot divisor.

    First candidate: the normalised part of ``-K`` orthogonal to the
    constrained rays, ``-K + sum mu_C C`` with ``D.C = 0``; for a del Pezzo
    surface this is ``-K / K^2``. If that is not nef, fall back to an exact
    feasibility search over the slice of the nef cone.
    """
    antiK = surface.anticanonical
    T = non_minus_one_extremal_rays(surface)
    cand = _positive_part_candidate(surface, antiK, T)
    if cand is not None and not cand.violations(surface, T):
        return cand
    cov = surface.form.covector
    eq = [list(cov(c)) for c in T] + [list(cov(antiK))]
    rhs = [0] * len(T) + [1]
    ge = [list(cov(g)) for g in surface.mori_generators]
    x = lp.feasible_point(eq, rhs, ge)
    if x is None:
        raise PivotInfeasible(f"pivot infeasible on {surface.label}")
    piv = PivotDivisor(tuple(x))
    problems = piv.violations(surface, T)
    if problems:
        raise PivotInfeasible(f"pivot infeasible on {surface.label}: {'; '.join(problems)}")
    return piv


def _positive_part_candidate(surface, antiK, T):
    if T:
        gram = [[_dot(surface, a, b) for a in T] for b in T]
        rhs = [-_dot(surface, antiK, c) for c in T]
        mu = solve(gram, rhs)
        if mu is None:
            return None
        D = tuple(
            Fraction(k) + sum(m * c[i] for m, c in zip(mu, T)) for i, k in enumerate(antiK)
        )
    else:
        D = _frac(antiK)
    h = _dot(surface, antiK, D)
    if h <= 0:
        return None
    return PivotDivisor(tuple(x / h for x in D))


# ---------------------------------------------------------------------------
# volumes


def base_volume(surface: SurfaceModel):
    """Nef volume by direct slicing, for rho <= 2 or surfaces without (-1)-curves."""
    n = surface.rank
    if n > 2 and minus_one_curves(surface):
        raise SurfaceError("base_volume needs rho <= 2 or a surface without (-1)-curves")
    antiK = surface.anticanonical
    if n == 1:
        g = surface.mori_generators[0]
        h = (1,) if surface.form.gram[0][0] * g[0] > 0 else (-1,)
        t = _dot(surface, antiK, h)
        return INFINITE if t <= 0 else Fraction(1, t)
    if n == 2:
        gens = extremal_generators(surface.form, surface.mori_generators, surface.negative_curves)
        if len(gens) != 2:
            raise SurfaceError("rank-2 Mori cone must have two extremal rays")
        rays = []
        for g, other in ((gens[0], gens[1]), (gens[1], gens[0])):
            a, b = surface.form.covector(g)
            r = (b, -a)
            if _dot(surface, r, other) < 0:
                r = (-b, a)
            rays.append(r)
        heights = [_dot(surface, antiK, r) for r in rays]
        if any(t <= 0 for t in heights):
            return INFINITE
        (x1, y1), (x2, y2) = rays
        return abs(Fraction(x1 * y2 - x2 * y1, heights[0] * heights[1])) / 2
    # no (-1)-curves at higher rank: the slice has no pyramid decomposition to recurse on
    return slice_volume(surface.form, dual_cone(surface.form, surface.mori_generators), antiK)


def nef_volume(surface: SurfaceModel, pivot: PivotDivisor | None = None, memo: bool = True,
               fault: bool = False, trail: list | None = None):
    """Nef cone volume by recursion over the (-1)-curves.

    ``pivot`` overrides the pivot at the top level only (it is still
    certified). ``fault`` corrupts the pivot on purpose, for harness tests.
    ``trail``, if given, collects ``(label, pivot, [(E, D.E, target)])``.
    """
    use_memo = memo and pivot is None and not fault and trail is None and NEF_MEMO.enabled
    key = memo_key(surface) if use_memo else None
    if key is not None:
        hit = NEF_MEMO.get(key)
        if hit is not None:
            return hit
    if not is_anticanonical_big(surface):
        value = INFINITE
    else:
        minus = minus_one_curves(surface)
        if surface.rank <= 2 or not minus:
            value = base_volume(surface)
        else:
            if pivot is None:
                pivot = pivot_divisor(surface)
            if fault:
                D = list(pivot.D)
                k = next(i for i, x in enumerate(D) if x)
                D[k] = -D[k]
                pivot = PivotDivisor(tuple(D))
            else:
                problems = pivot.violations(surface)
                if problems:
                    raise PivotInfeasible("; ".join(problems))
            total = Fraction(0)
            steps = []
            for e in minus:
                w = _dot(surface, pivot.D, e)
                if w == 0:
                    continue
                child, _ = contract(surface, e)
                sub = nef_volume(child, memo=memo, fault=fault)
                if is_infinite(sub):
                    value = INFINITE
                    break
                total += w * sub
                steps.append((e, w, child.label))
            else:
                value = total / surface.rank
            if trail is not None:
                trail.append((surface.label, pivot, steps))
    if key is not None:
        value = NEF_MEMO.put(key, value)
    return value


def chamber_volume(surface: SurfaceModel, support):
    """Volume of the chamber with the given support."""
    curves = _support_classes(surface, support)
    state = NegDefState()
    for i, c in enumerate(curves):
        state = state.extend([_dot(surface, c, curves[j]) for j in range(i)], _dot(surface, c, c))
        if state is None:
            raise SurfaceError("invalid support: Gram matrix is not negative definite")
    if any(not is_minus_one_curve(surface, c) for c in curves):
        return INFINITE
    s = len(curves)
    target = contract_set(surface, curves)
    vol = nef_volume(target)
    if is_infinite(vol):
        return INFINITE
    return Fraction(factorial(surface.rank - s), factorial(surface.rank)) * vol


def census_with_volumes(surface: SurfaceModel, workers: int = 1):
    from .chambers import census

    return census(surface, volumes=True, workers=workers)
