import json
from collections import Counter
from itertools import combinations, permutations, product

import pytest
from hypothesis import given
from hypothesis import strategies as st

from zchambers.surfaces import (
    MINUS_ONE_COUNTS,
    SurfaceError,
    SurfaceModel,
    contract,
    contract_set,
    del_pezzo_minus_one_curves,
    identify,
    make_surface,
    minus_one_curves,
    parse_class,
    resolve_curve,
    structure_key,
    surface_from_dict,
    surface_to_dict,
    surface_violations,
)


def brute_minus_one_classes(r, dmax=3):
    """(-1)-classes dL - sum m_i E_i with d <= dmax found by exhaustive search."""
    out = set()
    for d in range(0, dmax + 1):
        lo = -1 if d == 0 else 0
        for ms in product(range(lo, d + 1), repeat=r):
            if d * d - sum(m * m for m in ms) == -1 and 3 * d - sum(ms) == 1:
                out.add((d,) + tuple(-m for m in ms))
    return out


@pytest.mark.parametrize("r", range(1, 9))
def test_minus_one_counts(r):
    assert len(del_pezzo_minus_one_curves(r)) == MINUS_ONE_COUNTS[r] == [1, 3, 6, 10, 16, 27, 56, 240][r - 1]


@pytest.mark.parametrize("r", range(1, 6))
def test_minus_one_curves_match_exhaustive_search(r):
    # below r = 6 every (-1)-class has degree at most 2
    assert set(del_pezzo_minus_one_curves(r)) == brute_minus_one_classes(r)


def test_s2_intersection_matrix_matches_reference():
    S2 = make_surface("del-pezzo:2")
    curves = S2.negative_curves
    reference = [[-1, 1, 1], [1, -1, 0], [1, 0, -1]]
    grams = {
        tuple(tuple(S2.dot(curves[i], curves[j]) for j in p) for i in p) for p in permutations(range(3))
    }
    assert tuple(map(tuple, reference)) in grams


@pytest.mark.parametrize(
    "spec,rho,K2",
    [("p2", 1, 9), ("p1xp1", 2, 8), ("hirzebruch:3", 2, 8), ("del-pezzo:5", 6, 4),
     ("line-blowup:4", 5, 5), ("infinitely-near:3", 4, 6), ("line-blowup:10", 11, -1)],
)
def test_constructors(spec, rho, K2):
    X = make_surface(spec)
    assert X.rank == rho and X.K2 == K2
    assert surface_violations(X) == []


def test_constructor_spellings_agree():
    assert make_surface("del-pezzo", 3).negative_curves == make_surface("del-pezzo:3").negative_curves
    assert make_surface(("hirzebruch", 2)).label == "F_2"


@pytest.mark.parametrize("bad", ["del-pezzo:9", "del-pezzo:0", "foo:2", "hirzebruch", "infinitely-near:1", "del-pezzo:x"])
def test_constructor_errors(bad):
    with pytest.raises(SurfaceError):
        make_surface(bad)


def test_line_blowup_curves():
    X = make_surface("line-blowup:3")
    names = X.curve_names()
    assert names[0].startswith("Ltilde")
    assert X.squares[0] == -2
    assert len(minus_one_curves(X)) == 3


def test_infinitely_near_curves():
    X = make_surface("infinitely-near:4")
    assert sorted(X.squares) == [-3, -2, -2, -2, -1]
    assert [c for c in X.negative_curves if X.dot(c, c) == -1] == [(0, 0, 0, 0, 1)]


@pytest.mark.parametrize("r", range(3, 9))
def test_del_pezzo_contraction_lands_on_smaller_del_pezzo(r):
    X = make_surface("del-pezzo", r)
    for e in X.negative_curves[:3] + X.negative_curves[-2:]:
        Y, step = contract(X, e)
        assert Y.identity == f"S_{r - 1}" and Y.rank == r
        assert len(Y.negative_curves) == MINUS_ONE_COUNTS[r - 1]


def test_s2_contractions():
    X = make_surface("del-pezzo:2")
    targets = Counter(contract(X, e)[0].identity for e in X.negative_curves)
    assert targets == Counter({"S_1": 2, "P1xP1": 1})
    assert contract(X, (1, -1, -1))[0].identity == "P1xP1"


def test_family_contractions():
    X = make_surface("line-blowup:5")
    assert contract(X, X.negative_curves[3])[0].identity == "X_L^4"
    Y = make_surface("infinitely-near:4")
    assert contract(Y, Y.negative_curves[resolve_curve(Y, "E_r")])[0].identity == "X_3^inf"
    Z = make_surface("infinitely-near:2")
    F2 = contract(Z, (1, -1, -1))[0]
    assert F2.identity == "F_2" and F2.squares == (-2,)


def test_contraction_step_is_an_isometry_on_the_complement():
    X = make_surface("del-pezzo:4")
    e = X.negative_curves[7]
    Y, step = contract(X, e)
    for a, b in combinations(X.negative_curves, 2):
        pa, pb = step.split(a), step.split(b)
        assert Y.dot(step.project(a), step.project(b)) == X.dot(pa, pb)
        assert step.embed(step.project(a)) == pa
    assert Y.dot(Y.canonical, Y.canonical) == X.K2 + 1


def test_contract_rejects_non_minus_one():
    X = make_surface("line-blowup:3")
    with pytest.raises(SurfaceError):
        contract(X, X.negative_curves[0])
    S = make_surface("del-pezzo:3")
    with pytest.raises(SurfaceError):
        contract_set(S, [(0, 1, 0, 0), (1, -1, -1, 0)])


def _disjoint_subsets(X, size):
    curves = X.negative_curves
    return [s for s in combinations(range(len(curves)), size)
            if all(X.dot(curves[i], curves[j]) == 0 for i, j in combinations(s, 2))]


S5 = make_surface("del-pezzo:5")
S5_SUPPORTS = [s for k in range(1, 5) for s in _disjoint_subsets(S5, k)]


def _invariants(Y):
    return (Y.identity, Y.rank, Y.K2, tuple(sorted(zip(Y.squares, Y.canonical_degrees))), structure_key(Y))


@given(st.sampled_from(S5_SUPPORTS))
def test_contract_set_is_order_independent_on_s5(support):
    curves = [S5.negative_curves[i] for i in support]
    results = {_invariants(contract_set(S5, list(p))) for p in permutations(curves)}
    assert len(results) == 1
    (label, rho, K2, *_), = results
    assert rho == 6 - len(support) and K2 == 4 + len(support)


def test_json_round_trip():
    for spec in ["del-pezzo:3", "line-blowup:4", "infinitely-near:3", "hirzebruch:2"]:
        X = make_surface(spec)
        Y = surface_from_dict(json.loads(json.dumps(surface_to_dict(X))))
        assert Y.form.gram == X.form.gram and Y.negative_curves == X.negative_curves
        assert set(Y.mori_generators) == set(X.mori_generators)
        assert identify(Y) == identify(X)


@pytest.mark.parametrize(
    "data,needle",
    [
        ({"rank": 2, "gram": [[2, 0], [0, -1]], "canonical": [-3, 1], "negative_curves": [[0, 1]]}, "unimodular"),
        ({"rank": 2, "gram": [[1, 0], [0, -1]], "canonical": [-3, 1], "negative_curves": [[1, 1]]}, "self-intersection"),
        ({"rank": 2, "gram": [[1, 0]], "canonical": [-3, 1]}, "2x2"),
        ({"gram": [[1]]}, "malformed"),
        ({"rank": 2, "gram": [[1, 0], [0, -1]], "canonical": [-3, 1], "negative_curves": [[0, 1]],
          "mori_generators": [[0, 1], [0, -1]]}, "Mori"),
    ],
)
def test_custom_surface_validation(data, needle):
    with pytest.raises(SurfaceError, match=needle):
        surface_from_dict(data)


def test_structure_key_ignores_curve_order():
    X = make_surface("line-blowup:4")
    perm = list(reversed(X.negative_curves))
    Y = SurfaceModel(X.form, X.canonical, tuple(perm), X.mori_generators, "custom", X.basis_names)
    assert structure_key(X) == structure_key(Y) is not None
    assert identify(Y) == "X_L^4"
    assert structure_key(make_surface("infinitely-near:4")) != structure_key(X)


def test_identify_names():
    assert [identify(make_surface(s)) for s in ["p2", "p1xp1", "hirzebruch:0", "hirzebruch:1", "hirzebruch:3"]] == [
        "P2", "P1xP1", "P1xP1", "S_1", "F_3"]
    assert identify(make_surface("line-blowup:2")) == "S_2"


def test_parse_and_resolve():
    names = ("L", "E1", "E2", "E3")
    assert parse_class("2L-E1-E2-E3", names) == (2, -1, -1, -1)
    assert parse_class("L - 2E3", names) == (1, 0, 0, -2)
    for bad in ["", "L E1", "2L-F1", "+-"]:
        with pytest.raises(SurfaceError):
            parse_class(bad, names)
    X = make_surface("line-blowup:3")
    assert resolve_curve(X, "Ltilde") == resolve_curve(X, "L̃") == resolve_curve(X, "L-E1-E2-E3") == 0
    assert resolve_curve(X, "E2") == 2 and resolve_curve(X, "3") == 3
    with pytest.raises(SurfaceError):
        resolve_curve(X, "L")
    with pytest.raises(SurfaceError):
        resolve_curve(X, "9")
