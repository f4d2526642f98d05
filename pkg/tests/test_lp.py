from fractions import Fraction
from itertools import product

from hypothesis import given
from hypothesis import strategies as st

from zchambers.lp import feasible_point, in_cone, nonnegative_solution

coef = st.integers(min_value=-3, max_value=3)


def brute_in_cone(gens, target, bound=4):
    # an integer witness is in particular a rational one, so "None" must survive this search
    for c in product(range(bound + 1), repeat=len(gens)):
        if all(sum(ci * g[k] for ci, g in zip(c, gens)) == target[k] for k in range(len(target))):
            return True
    return False


@given(st.lists(st.lists(coef, min_size=3, max_size=3), min_size=1, max_size=3),
       st.lists(st.integers(0, 3), min_size=3, max_size=3))
def test_in_cone_finds_witness_for_constructed_targets(gens, weights):
    weights = weights[: len(gens)]
    target = [sum(w * g[k] for w, g in zip(weights, gens)) for k in range(3)]
    x = in_cone(gens, target)
    assert x is not None
    assert all(v >= 0 for v in x)
    assert [sum(v * g[k] for v, g in zip(x, gens)) for k in range(3)] == target


@given(st.lists(st.lists(coef, min_size=2, max_size=2), min_size=1, max_size=3),
       st.lists(coef, min_size=2, max_size=2))
def test_in_cone_negative_answers_are_right(gens, target):
    x = in_cone(gens, target)
    if x is None:
        assert not brute_in_cone(gens, target)
    else:
        assert [sum(v * g[k] for v, g in zip(x, gens)) for k in range(2)] == target


def test_nonnegative_solution_examples():
    assert nonnegative_solution([[1, 1]], [1]) is not None
    assert nonnegative_solution([[1, 1]], [-1]) is None
    x = nonnegative_solution([[1, -1], [0, 1]], [0, 2])
    assert x == [2, 2]


def test_feasible_point_free_variables():
    # x + y = 1 with x >= y >= 0
    x = feasible_point([[1, 1]], [1], [[1, -1], [0, 1]])
    assert x is not None and x[0] + x[1] == 1 and x[0] >= x[1] >= 0
    x = feasible_point([[2, 1]], [Fraction(1, 3)], [[-1, 0]])
    assert x is not None and 2 * x[0] + x[1] == Fraction(1, 3) and x[0] <= 0
    assert feasible_point([[1, 1]], [1], [[-1, 0], [0, -1]]) is None
