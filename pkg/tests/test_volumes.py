from fractions import Fraction
from math import factorial

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from zchambers.chambers import ChamberSupport, enumerate_supports
from zchambers.cones import nef_volume_oracle
from zchambers.lattice import is_negative_definite
from zchambers.surfaces import SurfaceError, contract_set, make_surface
from zchambers.values import INFINITE, is_infinite
from zchambers.volumes import (
    NEF_MEMO,
    NotBig,
    PivotDivisor,
    PivotInfeasible,
    chamber_of,
    chamber_volume,
    is_anticanonical_big,
    nef_volume,
    non_minus_one_extremal_rays,
    pivot_divisor,
    zariski_decompose,
)

F = Fraction
DP_NEF = [F(1, 12), F(1, 72), F(1, 288), F(1, 720), F(1, 1080), F(1, 840), F(1, 240), F(1, 9)]


@pytest.mark.parametrize("r", range(1, 9))
def test_del_pezzo_nef_volumes(r):
    assert nef_volume(make_surface("del-pezzo", r)) == DP_NEF[r - 1]


def test_derenthal_factor():
    # alpha(S_r) = (r + 1) * Vol(Nef(S_r)) for the degrees where alpha is classically known
    alpha = {r: (r + 1) * nef_volume(make_surface("del-pezzo", r)) for r in (6, 7, 8)}
    assert alpha == {6: F(1, 120), 7: F(1, 30), 8: F(1)}


@pytest.mark.parametrize("e", range(0, 7))
def test_hirzebruch_nef_volume(e):
    assert nef_volume(make_surface("hirzebruch", e)) == F(1, 4 * (e + 2))


def test_memo_does_not_change_values():
    X = make_surface("del-pezzo:5")
    with_memo = nef_volume(X)
    NEF_MEMO.enabled = False
    try:
        assert nef_volume(X) == with_memo
        assert nef_volume(make_surface("line-blowup:4"), memo=False) == nef_volume(make_surface("line-blowup:4"))
    finally:
        NEF_MEMO.enabled = True


PIVOT_SPECS = [f"del-pezzo:{r}" for r in range(1, 9)] + [f"line-blowup:{r}" for r in range(1, 11)] + [
    f"infinitely-near:{r}" for r in range(2, 11)] + ["hirzebruch:1"]


@pytest.mark.parametrize("spec", PIVOT_SPECS)
def test_pivot_certificates(spec):
    X = make_surface(spec)
    D = pivot_divisor(X)
    assert D.violations(X) == []
    assert X.dot(X.anticanonical, D.D) == 1
    assert all(X.dot(D.D, g) >= 0 for g in X.mori_generators)
    assert X.dot(D.D, D.D) >= 0
    assert all(X.dot(D.D, c) == 0 for c in non_minus_one_extremal_rays(X))


def test_pivot_infeasible_without_minus_one_rays():
    # both extremal rays of F_3 are constrained, which forces D = 0
    with pytest.raises(PivotInfeasible):
        pivot_divisor(make_surface("hirzebruch:3"))


def test_pivot_recorded_in_trail_is_certified():
    X = make_surface("infinitely-near:5")
    trail = []
    nef_volume(X, trail=trail)
    (label, piv, steps), = trail
    assert piv.violations(X) == []
    assert piv.D == (F(1, 2),) + (F(-1, 10),) * 5


def test_fiber_class_must_be_orthogonal_to_the_pivot():
    S1 = make_surface("del-pezzo:1")
    wrong = PivotDivisor(tuple(F(x, 8) for x in S1.anticanonical))
    assert any("extremal ray" in p for p in wrong.violations(S1))
    assert pivot_divisor(S1).D == (F(1, 2), F(-1, 2))


@pytest.mark.parametrize("r", range(3, 7))
def test_pivot_independence_on_line_blowups(r):
    X = make_surface("line-blowup", r)
    alternative = PivotDivisor((F(1, 2), F(-1, 2)) + (F(0),) * (r - 1))  # (L - E1)/2
    assert alternative.violations(X) == []
    assert alternative.D != pivot_divisor(X).D
    assert nef_volume(X, pivot=alternative) == nef_volume(X, memo=False)


S3 = make_surface("del-pezzo:3")


@given(st.lists(st.integers(-3, 3), min_size=4, max_size=4), st.integers(1, 40))
def test_pivot_independence_on_s3(v, scale):
    # -K/6 moved inside the hyperplane -K = 1 stays an admissible pivot while it is nef
    base = [F(x, 6) for x in S3.anticanonical]
    shift = [F(x) for x in v]
    t = S3.dot(S3.anticanonical, shift)
    shift = [s - t * F(k, 6) for s, k in zip(shift, S3.anticanonical)]
    D = tuple(b + s / (60 * scale) for b, s in zip(base, shift))
    pivot = PivotDivisor(D)
    assume(pivot.violations(S3) == [])
    assert nef_volume(S3, pivot=pivot) == F(1, 288)


def test_injected_fault_changes_the_answer():
    X = make_surface("del-pezzo:3")
    assert nef_volume(X, memo=False, fault=True) != F(1, 288)


@pytest.mark.parametrize("spec", ["line-blowup:9", "line-blowup:10", "infinitely-near:10"])
def test_anticanonical_big_with_nonpositive_degree(spec):
    X = make_surface(spec)
    assert X.K2 <= 0 or spec == "infinitely-near:10"
    assert is_anticanonical_big(X)


# ---------------------------------------------------------------------------
# Zariski decomposition


def _check_pair(X, D, pair):
    assert pair.certificate(X) == []
    assert tuple(p + n for p, n in zip(pair.P, pair.N)) == tuple(F(x) for x in D)
    curves = [X.negative_curves[i] for i in pair.support]
    N = [sum(a * c[k] for a, c in zip(pair.coefficients, curves)) for k in range(X.rank)]
    assert tuple(N) == pair.N
    assert all(a > 0 for a in pair.coefficients)
    assert all(X.dot(pair.P, c) == 0 for c in curves)
    assert all(X.dot(pair.P, g) >= 0 for g in X.mori_generators)
    assert is_negative_definite(X.form, curves)
    assert X.dot(pair.P, pair.P) > 0


def _big_classes(X):
    # -K is big on both test surfaces; big + effective is big
    n = len(X.mori_generators)
    return st.tuples(st.integers(1, 3), st.lists(st.integers(0, 8), min_size=n, max_size=n)).map(
        lambda t: tuple(
            t[0] * k + sum(a * g[i] for a, g in zip(t[1], X.mori_generators)) for i, k in enumerate(X.anticanonical)
        )
    )


XL3 = make_surface("line-blowup:3")


@settings(max_examples=1000)
@given(_big_classes(S3))
def test_zariski_certificates_on_s3(D):
    _check_pair(S3, D, zariski_decompose(S3, D))


@settings(max_examples=1000)
@given(_big_classes(XL3))
def test_zariski_certificates_on_line_blowup(D):
    pair = zariski_decompose(XL3, D)
    _check_pair(XL3, D, pair)
    assert chamber_of(XL3, D) == ChamberSupport(pair.support)


def test_zariski_examples():
    XL2 = make_surface("line-blowup:2")
    pair = zariski_decompose(XL2, (3, -2, -2))
    assert pair.P == (2, -1, -1) and pair.N == (1, -1, -1) and pair.coefficients == (1,)
    pair = zariski_decompose(XL3, (3, -2, -2, -2))
    assert pair.P == (F(3, 2), F(-1, 2), F(-1, 2), F(-1, 2)) and pair.coefficients == (F(3, 2),)
    assert zariski_decompose(S3, (3, -1, -1, -1)).support == ()


@pytest.mark.parametrize("D", [(0, 1, 0, 0), (-1, 0, 0, 0), (1, -1, 0, 0)])
def test_non_big_classes_are_rejected(D):
    with pytest.raises(NotBig):
        zariski_decompose(S3, D)


# ---------------------------------------------------------------------------
# chamber volumes


def test_chamber_volume_examples():
    S4 = make_surface("del-pezzo:4")
    assert chamber_volume(S4, [(0, 1, 0, 0, 0), (0, 0, 1, 0, 0), (0, 0, 0, 1, 0)]) == F(1, 720)
    X = make_surface("line-blowup:5")
    assert chamber_volume(X, ChamberSupport((1, 2))) == F(1, 17280)
    assert chamber_volume(XL3, [0]) is INFINITE
    with pytest.raises(SurfaceError):
        chamber_volume(S3, [(0, 1, 0, 0), (1, -1, -1, 0)])


@pytest.mark.parametrize("spec", ["del-pezzo:4", "line-blowup:4", "infinitely-near:3"])
def test_volume_identity_on_every_finite_chamber(spec):
    X = make_surface(spec)
    for S in enumerate_supports(X):
        vol = chamber_volume(X, S)
        if is_infinite(vol):
            continue
        target = contract_set(X, S.classes(X))
        s = len(S)
        assert vol * F(factorial(X.rank), factorial(X.rank - s)) == nef_volume(target)


@pytest.mark.parametrize("spec", ["del-pezzo:2", "line-blowup:3", "infinitely-near:3"])
def test_small_nef_volumes_agree_with_oracle(spec):
    X = make_surface(spec)
    assert nef_volume(X) == nef_volume_oracle(X)
