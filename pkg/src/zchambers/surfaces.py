"""Surface models at the lattice level and the blow-down engine.

A surface is recorded by its Neron-Severi lattice, canonical class, the
classes of its negative curves and a generating set of its Mori cone.
Contracting a (-1)-curve ``E`` identifies the Neron-Severi lattice of the
blow-down with ``E^perp`` via ``p(v) = v + (v.E) E``.
"""
from __future__ import annotations

import itertools
import re
import json
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import factorial
from typing import Callable, Iterable, Sequence

from . import lp
from .lattice import (
    IntersectionForm,
    inertia,
    orthocomplement_basis,
    primitive,
    rank,
    validate_lattice,
)

# number of (-1)-curves on the del Pezzo surface S_r
MINUS_ONE_COUNTS = {1: 1, 2: 3, 3: 6, 4: 10, 5: 16, 6: 27, 7: 56, 8: 240}

FAMILIES = ("projective-plane", "quadric", "hirzebruch", "del-pezzo", "line-blowup", "infinitely-near")

_ALIASES = {
    "p2": "projective-plane",
    "projective-plane": "projective-plane",
    "p1xp1": "quadric",
    "quadric": "quadric",
    "hirzebruch": "hirzebruch",
    "f": "hirzebruch",
    "del-pezzo": "del-pezzo",
    "dp": "del-pezzo",
    "s": "del-pezzo",
    "line-blowup": "line-blowup",
    "xl": "line-blowup",
    "infinitely-near": "infinitely-near",
    "xinf": "infinitely-near",
}


class SurfaceError(ValueError):
    """Invalid surface data or an illegal operation on a surface."""


@dataclass(frozen=True, eq=False)
class SurfaceModel:
    form: IntersectionForm
    canonical: tuple
    negative_curves: tuple
    mori_source: object = field(repr=False)  # tuple of classes, or a zero-argument callable
    label: str = "custom"
    basis_names: tuple = ()
    aliases: tuple = ()  # (name, index into negative_curves)

    @property
    def rank(self) -> int:
        return self.form.rank

    @property
    def K2(self) -> int:
        return self.form.square(self.canonical)

    @property
    def anticanonical(self) -> tuple:
        return tuple(-x for x in self.canonical)

    @cached_property
    def mori_generators(self) -> tuple:
        src = self.mori_source
        if callable(src):
            src = src()
        return tuple(tuple(g) for g in src)

    @cached_property
    def squares(self) -> tuple:
        """Self-intersections of the negative curves."""
        return tuple(self.form.square(c) for c in self.negative_curves)

    @cached_property
    def canonical_degrees(self) -> tuple:
        """``K.C`` for each negative curve."""
        cov = self.form.covector(self.canonical)
        return tuple(sum(a * b for a, b in zip(cov, c)) for c in self.negative_curves)

    @cached_property
    def identity(self) -> str:
        return identify(self)

    @cached_property
    def structure(self):
        return structure_key(self)

    def dot(self, a, b):
        return self.form.dot(a, b)

    def class_name(self, v: Sequence) -> str:
        return format_class(v, self.basis_names or default_basis_names(self.rank))

    def curve_names(self) -> list[str]:
        names = [self.class_name(c) for c in self.negative_curves]
        for alias, idx in self.aliases:
            names[idx] = f"{alias} = {names[idx]}"
        return names


@dataclass(frozen=True)
class ContractionStep:
    """Blow-down of one (-1)-curve ``E``.

    ``basis`` lists the pullbacks of the lattice basis of the blow-down;
    ``project`` sends a class ``v`` upstairs to the coordinates of
    ``p(v) = v + (v.E) E`` in that basis.
    """

    contracted: tuple
    basis: tuple
    pivot_columns: tuple
    _form: IntersectionForm = field(repr=False)

    def embed(self, y: Sequence) -> tuple:
        n = len(self.contracted)
        out = [0] * n
        for c, b in zip(y, self.basis):
            if c:
                for j in range(n):
                    out[j] += c * b[j]
        return tuple(out)

    def split(self, v: Sequence) -> tuple:
        """``p(v)`` as a class upstairs."""
        t = self._form.dot(v, self.contracted)
        return tuple(x + t * e for x, e in zip(v, self.contracted))

    def project(self, v: Sequence) -> tuple:
        w = self.split(v)
        coords = []
        # basis is in echelon form; peel off one pivot column at a time
        for b, p in zip(self.basis, self.pivot_columns):
            x, d = w[p], b[p]
            c = x // d if isinstance(x, int) and x % d == 0 else Fraction(x) / d
            coords.append(c)
            if c:
                w = tuple(a - c * y for a, y in zip(w, b))
        if any(w):
            raise ArithmeticError("class does not lie in the span of the complement basis")
        return tuple(coords)

    def embed_matrix(self) -> list[list[int]]:
        """rho x (rho-1) integer matrix of the pullback."""
        n = len(self.contracted)
        return [[b[i] for b in self.basis] for i in range(n)]

    def project_matrix(self) -> list[list]:
        """(rho-1) x rho matrix of ``project``."""
        n = len(self.contracted)
        cols = [self.project(tuple(int(i == j) for j in range(n))) for i in range(n)]
        return [[cols[j][i] for j in range(n)] for i in range(n - 1)]


# ---------------------------------------------------------------------------
# formatting helpers


def default_basis_names(n: int) -> tuple:
    return tuple(f"e{i}" for i in range(n))


def blowup_basis_names(r: int) -> tuple:
    return ("L",) + tuple(f"E{i}" for i in range(1, r + 1))


def format_class(v: Sequence, names: Sequence[str]) -> str:
    parts = []
    for c, name in zip(v, names):
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        coef = "" if mag == 1 else f"{mag}"
        parts.append((sign, f"{coef}{name}"))
    if not parts:
        return "0"
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, term in parts[1:]:
        out += sign + term
    return out


_TERM = re.compile(r"\s*([+-]?)\s*(\d*)\s*\*?\s*([A-Za-z_][A-Za-z0-9_]*)\s*")


def parse_class(text: str, names: Sequence[str]) -> tuple:
    """Inverse of :func:`format_class`, e.g. ``"2L-E1-E2"``."""
    index = {n.lower(): i for i, n in enumerate(names)}
    v = [0] * len(names)
    pos = 0
    text = text.strip()
    if not text:
        raise SurfaceError("empty class expression")
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise SurfaceError(f"cannot parse class {text!r}")
        sign, coef, name = m.groups()
        if pos > 0 and not sign:
            raise SurfaceError(f"cannot parse class {text!r}: missing operator before {name}")
        if name.lower() not in index:
            raise SurfaceError(f"unknown basis element {name!r} in {text!r}")
        v[index[name.lower()]] += (-1 if sign == "-" else 1) * (int(coef) if coef else 1)
        pos = m.end()
    return tuple(v)


def resolve_curve(surface: "SurfaceModel", token: str) -> int:
    """Index of a negative curve given as an index, an alias or a class expression."""
    token = token.strip()
    if re.fullmatch(r"\d+", token):
        i = int(token)
        if i >= len(surface.negative_curves):
            raise SurfaceError(f"curve index {i} out of range 0..{len(surface.negative_curves) - 1}")
        return i
    key = token.replace("\u0303", "tilde").replace("~", "tilde").lower()
    for alias, idx in surface.aliases:
        if alias.lower() == key:
            return idx
    v = parse_class(token, surface.basis_names or default_basis_names(surface.rank))
    try:
        return surface.negative_curves.index(v)
    except ValueError:
        raise SurfaceError(f"{token} is not one of the negative curves of {surface.label}") from None


# ---------------------------------------------------------------------------
# constructors


def _blowup_form(r: int) -> IntersectionForm:
    return IntersectionForm.diagonal([1] + [-1] * r)


def del_pezzo_minus_one_curves(r: int) -> list[tuple]:
    """All (d; m_1..m_r) with d^2 - sum m^2 = -1 and 3d - sum m = 1, d <= 6.

    The bound is complete: Cauchy-Schwarz on sum m = 3d - 1 against
    sum m^2 = d^2 + 1 with r <= 8 terms forces d <= 6.
    """
    found = []

    def extend(prefix, left_sum, left_sq, slots, d):
        if slots == 0:
            if left_sum == 0 and left_sq == 0:
                found.append((d,) + tuple(-m for m in prefix))
            return
        lo = -1 if d == 0 else 0
        for m in range(lo, d + 1):
            sq = left_sq - m * m
            if sq < 0:
                if m > 0:
                    break
                continue
            rest = left_sum - m
            # sum of remaining (slots-1) entries, each with |m_i| <= d, bounded by their squares
            if rest * rest > (slots - 1) * sq:
                continue
            extend(prefix + (m,), rest, sq, slots - 1, d)

    for d in range(0, 7):
        extend((), 3 * d - 1, d * d + 1, r, d)
    found.sort(key=lambda v: (v[0], tuple(-x if v[0] == 0 else x for x in v[1:])))
    return found


def _descriptor(spec) -> tuple[str, int | None]:
    if isinstance(spec, str):
        name, _, arg = spec.strip().partition(":")
        key = name.strip().lower()
        if key not in _ALIASES:
            raise SurfaceError(f"unknown surface family {name!r}")
        if arg.strip():
            try:
                return _ALIASES[key], int(arg)
            except ValueError:
                raise SurfaceError(f"bad parameter {arg!r} for {name}") from None
        return _ALIASES[key], None
    family, param = spec
    if family not in _ALIASES:
        raise SurfaceError(f"unknown surface family {family!r}")
    return _ALIASES[family], param


def make_surface(spec, param: int | None = None) -> SurfaceModel:
    """Build a named family: ``make_surface("del-pezzo:3")`` or ``make_surface("del-pezzo", 3)``."""
    if isinstance(spec, str) and param is not None:
        spec = (spec, param)
    family, r = _descriptor(spec)
    if family == "projective-plane":
        form = IntersectionForm(((1,),))
        return SurfaceModel(form, (-3,), (), ((1,),), "P2", ("L",))
    if family == "quadric":
        form = IntersectionForm(((0, 1), (1, 0)))
        return SurfaceModel(form, (-2, -2), (), ((1, 0), (0, 1)), "P1xP1", ("f1", "f2"))
    if r is None:
        raise SurfaceError(f"family {family} needs a parameter, e.g. {family}:2")
    if family == "hirzebruch":
        if r < 0:
            raise SurfaceError("hirzebruch surface needs e >= 0")
        form = IntersectionForm(((-r, 1), (1, 0)))
        neg = ((1, 0),) if r > 0 else ()
        return SurfaceModel(form, (-2, -(r + 2)), neg, ((1, 0), (0, 1)), f"F_{r}", ("C0", "f"))
    if family == "del-pezzo":
        if not 1 <= r <= 8:
            raise SurfaceError(f"del Pezzo surface S_r needs 1 <= r <= 8, got {r}")
        curves = tuple(del_pezzo_minus_one_curves(r))
        mori = curves if r >= 2 else ((0, 1), (1, -1))
        return SurfaceModel(_blowup_form(r), (-3,) + (1,) * r, curves, mori, f"S_{r}", blowup_basis_names(r))
    if family == "line-blowup":
        if r < 1:
            raise SurfaceError("line-blowup needs r >= 1")
        ltilde = (1,) + (-1,) * r
        exc = tuple(tuple(int(j == i) for j in range(r + 1)) for i in range(1, r + 1))
        neg = ((ltilde,) if r >= 2 else ()) + exc
        aliases = (("Ltilde", 0),) if r >= 2 else ()
        return SurfaceModel(
            _blowup_form(r), (-3,) + (1,) * r, neg, (ltilde,) + exc, f"X_L^{r}", blowup_basis_names(r), aliases
        )
    if family == "infinitely-near":
        if r < 2:
            raise SurfaceError("infinitely-near needs r >= 2")
        neg = []
        for k in range(1, r):
            v = [0] * (r + 1)
            v[k], v[k + 1] = 1, -1
            neg.append(tuple(v))
        neg.append(tuple(int(j == r) for j in range(r + 1)))
        neg.append((1,) + (-1,) * r)
        neg = tuple(neg)
        aliases = (("E_r", r - 1), ("Ltilde", r))
        return SurfaceModel(
            _blowup_form(r), (-3,) + (1,) * r, neg, neg, f"X_{r}^inf", blowup_basis_names(r), aliases
        )
    raise SurfaceError(f"unknown family {family}")  # pragma: no cover


# ---------------------------------------------------------------------------
# validation and custom input


def surface_violations(surface: SurfaceModel, check_mori: bool = True) -> list[str]:
    problems = list(validate_lattice(surface.form))
    n = surface.rank
    if len(surface.canonical) != n:
        problems.append("canonical class has wrong length")
        return problems
    seen = set()
    for c in surface.negative_curves:
        if len(c) != n:
            problems.append(f"curve {c} has wrong length")
            continue
        c2 = surface.dot(c, c)
        kc = surface.dot(surface.canonical, c)
        if c2 >= 0:
            problems.append(f"curve {c} has self-intersection {c2} >= 0")
        if (c2 + kc) % 2 != 0 or c2 + kc < -2:
            problems.append(f"curve {c} violates adjunction: C^2 + K.C = {c2 + kc}")
        if tuple(c) in seen:
            problems.append(f"curve {c} listed twice")
        seen.add(tuple(c))
    curves = surface.negative_curves
    for i, j in itertools.combinations(range(len(curves)), 2):
        if surface.dot(curves[i], curves[j]) < 0:
            problems.append(f"distinct curves {curves[i]} and {curves[j]} meet negatively")
    if check_mori:
        gens = surface.mori_generators
        if any(len(g) != n for g in gens):
            problems.append("Mori generator of wrong length")
        elif not gens or rank(gens) != n:
            problems.append("Mori generators do not span a full-dimensional cone")
        elif _contains_line(gens):
            problems.append("Mori generators span a cone containing a line")
    return problems


def _contains_line(gens) -> bool:
    # pointed iff 0 is not a nontrivial nonnegative combination: fix sum of coefficients to 1
    dim = len(gens[0])
    A = [[g[i] for g in gens] for i in range(dim)] + [[1] * len(gens)]
    b = [0] * dim + [1]
    return lp.nonnegative_solution(A, b) is not None


def validate_surface(surface: SurfaceModel) -> SurfaceModel:
    problems = surface_violations(surface)
    if problems:
        raise SurfaceError("; ".join(problems))
    return surface


def surface_from_dict(data: dict) -> SurfaceModel:
    try:
        n = int(data["rank"])
        gram = [[int(x) for x in row] for row in data["gram"]]
        canonical = tuple(int(x) for x in data["canonical"])
        neg = tuple(tuple(int(x) for x in c) for c in data.get("negative_curves", []))
        mori = data.get("mori_generators")
        mori = neg if mori is None else tuple(tuple(int(x) for x in g) for g in mori)
        label = str(data.get("label", "custom"))
        names = tuple(data.get("basis_names", ())) or default_basis_names(n)
    except (KeyError, TypeError, ValueError) as exc:
        raise SurfaceError(f"malformed surface description: {exc}") from None
    if len(gram) != n or any(len(row) != n for row in gram):
        raise SurfaceError(f"gram matrix is not {n}x{n}")
    surface = SurfaceModel(IntersectionForm(tuple(map(tuple, gram))), canonical, neg, mori, label, names)
    return validate_surface(surface)


def load_surface(path) -> SurfaceModel:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SurfaceError(f"cannot read {path}: {exc}") from None
    if not isinstance(data, dict):
        raise SurfaceError("surface file must hold a JSON object")
    return surface_from_dict(data)


def surface_to_dict(surface: SurfaceModel) -> dict:
    return {
        "rank": surface.rank,
        "gram": [list(row) for row in surface.form.gram],
        "canonical": list(surface.canonical),
        "negative_curves": [list(c) for c in surface.negative_curves],
        "mori_generators": [list(g) for g in surface.mori_generators],
        "label": surface.label,
        "basis_names": list(surface.basis_names),
    }


# ---------------------------------------------------------------------------
# (-1)-curves and contraction


def is_minus_one_curve(surface: SurfaceModel, c: Sequence) -> bool:
    return surface.dot(c, c) == -1 and surface.dot(surface.canonical, c) == -1


def minus_one_curves(surface: SurfaceModel) -> list[tuple]:
    """(-1)-curves among the negative curves.

    For the built-in del Pezzo surfaces the negative curves are exactly the
    output of :func:`del_pezzo_minus_one_curves`.
    """
    return [
        c
        for c, sq, k in zip(surface.negative_curves, surface.squares, surface.canonical_degrees)
        if sq == -1 and k == -1
    ]


def contraction_step(surface: SurfaceModel, e: Sequence) -> ContractionStep:
    basis = orthocomplement_basis(surface.form, e)
    pivots = tuple(next(j for j, x in enumerate(b) if x != 0) for b in basis)
    return ContractionStep(tuple(e), tuple(basis), pivots, surface.form)


def contract(surface: SurfaceModel, e: Sequence) -> tuple[SurfaceModel, ContractionStep]:
    """Blow down the (-1)-curve ``e``."""
    e = tuple(e)
    if e not in surface.negative_curves or not is_minus_one_curve(surface, e):
        raise SurfaceError(f"{surface.class_name(e)} is not a (-1)-curve of {surface.label}")
    step = contraction_step(surface, e)
    basis = step.basis
    gram = tuple(tuple(surface.dot(a, b) for b in basis) for a in basis)
    form = IntersectionForm(gram)
    canonical = step.project(surface.canonical)
    kept = []
    kept_aliases = []
    squares = []
    degrees = []
    alias_of = {idx: name for name, idx in surface.aliases}
    cov_e = surface.form.covector(e)
    for i, (c, sq, k) in enumerate(zip(surface.negative_curves, surface.squares, surface.canonical_degrees)):
        if c == e:
            continue
        t = sum(a * b for a, b in zip(cov_e, c))
        if sq + t * t >= 0:
            continue
        if i in alias_of:
            kept_aliases.append((alias_of[i], len(kept)))
        kept.append(step.project(c))
        squares.append(sq + t * t)
        degrees.append(k - t)
    negative = tuple(kept)

    def mori():
        images = []
        for g in surface.mori_generators:
            if tuple(g) == e:
                continue
            img = step.project(g)
            if any(img):
                images.append(img)
        return extremal_generators(form, images, negative)

    child = SurfaceModel(form, canonical, negative, mori, "custom", default_basis_names(form.rank), tuple(kept_aliases))
    # pushforward rule: C'^2 = C^2 + (C.E)^2 and K'.C' = K.C - C.E
    child.__dict__["squares"] = tuple(squares)
    child.__dict__["canonical_degrees"] = tuple(degrees)
    label = child.identity
    if label != "custom":
        child = SurfaceModel(form, canonical, negative, mori, label, child.basis_names, child.aliases)
        child.__dict__.update(squares=tuple(squares), canonical_degrees=tuple(degrees), identity=label)
    return child, step


def contract_set(surface: SurfaceModel, curves: Sequence[Sequence], trail: list | None = None) -> SurfaceModel:
    """Blow down a set of pairwise disjoint (-1)-curves, one at a time.

    If ``trail`` is a list, the ``(surface, step)`` pairs are appended to it.
    """
    curves = [tuple(c) for c in curves]
    for c in curves:
        if not is_minus_one_curve(surface, c):
            raise SurfaceError(f"{surface.class_name(c)} is not a (-1)-curve")
    for a, b in itertools.combinations(curves, 2):
        if surface.dot(a, b) != 0:
            raise SurfaceError(
                f"{surface.class_name(a)} and {surface.class_name(b)} meet with multiplicity {surface.dot(a, b)}"
            )
    current = surface
    pending = curves
    while pending:
        e, pending = pending[0], pending[1:]
        current_next, step = contract(current, e)
        if trail is not None:
            trail.append((current, step))
        pending = [step.project(c) for c in pending]
        current = current_next
    return current


# ---------------------------------------------------------------------------
# Mori cone bookkeeping


def extremal_generators(form: IntersectionForm, generators: Iterable[Sequence], negative_curves=()) -> tuple:
    """Reduce a generating set of a Mori cone to its extremal rays.

    Irreducible negative curves always span extremal rays, and a class of
    positive square inside the Mori cone is big and hence interior, so only
    the square-zero (and unlisted negative) generators need a cone-membership
    test.
    """
    gens = []
    seen = set()
    for g in generators:
        p = primitive(g)
        if any(p) and p not in seen:
            seen.add(p)
            gens.append(p)
    if len(gens) <= 1 or form.rank == 1:
        return tuple(gens)
    negative = {primitive(c) for c in negative_curves}
    keep = []
    undecided = []
    for g in gens:
        sq = form.square(g)
        if g in negative:
            keep.append(g)
        elif sq > 0:
            continue
        else:
            undecided.append(g)
    if undecided:
        neg_gens = [g for g in gens if g in negative]
        pair_sums = set()
        if len(neg_gens) <= 120:
            for a, b in itertools.combinations(neg_gens, 2):
                pair_sums.add(primitive(tuple(x + y for x, y in zip(a, b))))
        for g in undecided:
            if g in pair_sums:
                continue
            others = [h for h in gens if h != g]
            if lp.in_cone(others, g) is None:
                keep.append(g)
    order = {g: i for i, g in enumerate(gens)}
    return tuple(sorted(keep, key=order.__getitem__))


# ---------------------------------------------------------------------------
# identification


def identify_invariants(rank: int, K2, squares: Sequence, degrees: Sequence) -> str:
    """Name from (rho, K^2, self-intersections and K-degrees of the negative curves)."""
    if rank == 1 and K2 == 9:
        return "P2"
    if rank == 2 and K2 == 8:
        if not squares:
            return "P1xP1"
        if len(squares) == 1:
            e = -squares[0]
            return "S_1" if e == 1 else f"F_{e}"
    r = rank - 1
    if 2 <= r <= 8 and K2 == 9 - r and len(squares) == MINUS_ONE_COUNTS[r]:
        if all(s == -1 for s in squares) and all(k == -1 for k in degrees):
            return f"S_{r}"
    return "custom"


_FAMILY_KEYS = {}


def _family_key(family: str, r: int):
    if (family, r) not in _FAMILY_KEYS:
        _FAMILY_KEYS[family, r] = make_surface(family, r).structure
    return _FAMILY_KEYS[family, r]


def identify(surface: SurfaceModel) -> str:
    """Name a surface from lattice invariants, or ``"custom"``.

    Besides P2, P1xP1, F_e and S_r this recognises the line and chain
    blow-ups by their configuration of negative curves.
    """
    label = identify_invariants(surface.rank, surface.K2, surface.squares, surface.canonical_degrees)
    if label != "custom":
        return label
    r = surface.rank - 1
    if r >= 3 and surface.K2 == 9 - r and len(surface.squares) == r + 1 and surface.structure is not None:
        if surface.structure == _family_key("line-blowup", r):
            return f"X_L^{r}"
        if surface.structure == _family_key("infinitely-near", r):
            return f"X_{r}^inf"
    elif r == 2 and len(surface.squares) == 3 and surface.structure == _family_key("infinitely-near", 2):
        return "X_2^inf"
    return "custom"


NAMED_PATTERN = ("P2", "P1xP1", "S_", "F_")


def is_named(label: str) -> bool:
    return label != "custom" and label.startswith(NAMED_PATTERN)


# ---------------------------------------------------------------------------
# structural keys for memoisation of unnamed surfaces

_CANON_LIMIT = 12
_SEARCH_LIMIT = 40320


def structure_key(surface: SurfaceModel):
    """Isomorphism-invariant key of (rho, K^2, labelled Gram graph of negative curves).

    Vertices carry (C^2, K.C); edges carry C.C'. The canonical form is the
    lexicographically least relabelled matrix over all orderings compatible
    with the colour-refined partition; interchangeable twins are not
    permuted. Returns None when the search would be too large.
    """
    curves = surface.negative_curves
    n = len(curves)
    if n > _CANON_LIMIT:
        return None
    G = [[surface.dot(a, b) for b in curves] for a in curves]
    k = [surface.dot(surface.canonical, c) for c in curves]
    first = [(G[i][i], k[i]) for i in range(n)]
    ids = {c: idx for idx, c in enumerate(sorted(set(first)))}
    colours = [ids[c] for c in first]
    while True:
        sig = [
            (colours[i], tuple(sorted((colours[j], G[i][j]) for j in range(n) if j != i)))
            for i in range(n)
        ]
        ids = {s: idx for idx, s in enumerate(sorted(set(sig)))}
        new = [ids[s] for s in sig]
        stable = len(set(new)) == len(set(colours))
        colours = new
        if stable:
            break
    cells = {}
    for i, c in enumerate(colours):
        cells.setdefault(c, []).append(i)
    ordered_cells = [cells[c] for c in sorted(cells)]

    def twins(cell):
        for a, b in itertools.combinations(cell, 2):
            if G[a][a] != G[b][b] or k[a] != k[b]:
                return False
            if any(G[a][j] != G[b][j] for j in range(n) if j not in (a, b)):
                return False
        return True

    choices = []
    total = 1
    for cell in ordered_cells:
        if len(cell) > 1 and not twins(cell):
            total *= factorial(len(cell))
            choices.append(list(itertools.permutations(cell)))
        else:
            choices.append([tuple(cell)])
    if total > _SEARCH_LIMIT:
        return None
    best = None
    for combo in itertools.product(*choices):
        order = [i for part in combo for i in part]
        mat = tuple(tuple(G[i][j] for j in order) for i in order)
        if best is None or mat < best:
            best = mat
    ks = tuple(k[i] for i in (i for cell in ordered_cells for i in cell))
    return (surface.rank, surface.K2, ks, best)


class Memo:
    """Read-mostly map with locked insertion; first writer wins."""

    def __init__(self):
        self._data = {}
        self._lock = threading.Lock()
        self.enabled = True

    def get(self, key):
        if not self.enabled or key is None:
            return None
        return self._data.get(key)

    def put(self, key, value):
        if not self.enabled or key is None:
            return value
        with self._lock:
            return self._data.setdefault(key, value)

    def clear(self):
        with self._lock:
            self._data.clear()

    def __len__(self):
        return len(self._data)


def memo_key(surface: SurfaceModel):
    label = surface.identity
    if is_named(label):
        return ("named", label)
    key = surface.structure
    return None if key is None else ("structure", key)


def signature_check(surface: SurfaceModel) -> tuple[int, int, int]:
    return inertia(surface.form.gram)
