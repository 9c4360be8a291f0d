import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from verinfer.algebra import get_profile
from verinfer.poly import (
    MultilinearPoly,
    UnivariatePoly,
    eq_table,
    eval_from_points,
    fold_evaluate,
    lagrange_basis,
    next_pow2,
    to_bits,
)

F = get_profile("test").scalar_field
p = F.modulus
elem = st.integers(min_value=0, max_value=p - 1)


def test_next_pow2():
    assert [next_pow2(n) for n in (1, 2, 3, 5, 8, 9)] == [1, 2, 4, 8, 8, 16]


def test_to_bits_is_little_endian():
    assert to_bits(6, 3) == (0, 1, 1)


@given(st.integers(min_value=1, max_value=5).flatmap(lambda v: st.tuples(st.just(v), st.lists(elem, min_size=1 << v, max_size=1 << v))))
def test_mle_agrees_on_hypercube(case):
    v, vals = case
    S = MultilinearPoly.from_values(F, vals)
    for b in range(1 << v):
        assert S.evaluate(list(to_bits(b, v))) == vals[b]


@given(st.lists(elem, min_size=8, max_size=8), st.lists(elem, min_size=3, max_size=3))
def test_mle_evaluation_paths_agree(vals, u):
    S = MultilinearPoly.from_values(F, vals)
    direct = sum(vals[b] * lagrange_basis(F, u, to_bits(b, 3)) for b in range(8)) % p
    assert S.evaluate(u) == direct == fold_evaluate(F, vals, u)
    eq = eq_table(F, u)
    assert sum(a * b for a, b in zip(eq, vals)) % p == direct


@given(st.lists(elem, min_size=8, max_size=8), elem, st.lists(elem, min_size=2, max_size=2))
def test_restrict_first_var(vals, r, rest):
    S = MultilinearPoly.from_values(F, vals)
    assert S.restrict_first_var(r).evaluate(rest) == S.evaluate([r] + rest)


@given(st.lists(elem, min_size=5, max_size=5))
def test_mle_pads_to_power_of_two(vals):
    S = MultilinearPoly.from_values(F, vals)
    assert S.num_vars == 3
    assert S.evaluate([1, 1, 1]) == 0


@given(st.lists(elem, min_size=1, max_size=5), elem)
def test_univariate_interpolation(coeffs, x):
    d = len(coeffs) - 1
    f = lambda t: sum(c * pow(t, i, p) for i, c in enumerate(coeffs)) % p  # noqa: E731
    evals = [f(t) for t in range(d + 1)]
    assert eval_from_points(F, evals, x) == f(x)
    poly = UnivariatePoly.interpolate(F, evals)
    assert poly.degree <= d


def test_lagrange_basis_is_indicator():
    for b in range(4):
        for c in range(4):
            assert lagrange_basis(F, to_bits(b, 2), to_bits(c, 2)) == (b == c)
    assert math.prod([1]) == 1
