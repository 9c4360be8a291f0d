import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from verinfer.algebra import FieldElement, get_profile, profile_by_id
from verinfer.errors import InverseOfZero, PointNotOnCurve, ProfileError

TEST = get_profile("test")
MAIN = get_profile("main")
F = TEST.scalar_field
elems = st.integers(min_value=0, max_value=F.modulus - 1)


def test_test_curve_parameters():
    assert TEST.base_field.modulus == 65479
    assert TEST.order == 65353
    assert len(TEST.enumerate_points()) == TEST.order


def test_profiles_round_trip_by_id():
    for c in (TEST, MAIN):
        assert profile_by_id(c.pid) is c or profile_by_id(c.pid).order == c.order
    with pytest.raises(ProfileError):
        get_profile("nope")


@given(elems, elems, elems)
def test_field_axioms(a, b, c):
    assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
    assert F.add(a, F.neg(a)) == 0
    assert F.sub(F.add(a, b), b) == a


@given(elems.filter(bool))
def test_inverse(a):
    assert F.mul(a, F.inv(a)) == 1


def test_inverse_of_zero():
    with pytest.raises(InverseOfZero):
        F.inv(0)


@given(st.lists(elems.filter(bool), min_size=1, max_size=20))
def test_batch_inverse(values):
    assert F.batch_inv(values) == [F.inv(v) for v in values]


@given(st.integers(min_value=-(F.modulus // 2), max_value=F.modulus // 2))
def test_signed_lift(v):
    assert F.signed(F.lift(v)) == v


@given(elems)
def test_scalar_encoding(a):
    assert F.decode(F.encode(a)) == a


def test_field_element_operators():
    a, b = FieldElement(5, F), FieldElement(7, F)
    assert int(a * b) == 35
    assert int(a - b) == F.modulus - 2


@settings(max_examples=40)
@given(st.integers(min_value=0, max_value=TEST.order - 1), st.integers(min_value=0, max_value=TEST.order - 1))
def test_scalar_mul_is_homomorphic(j, k):
    G = TEST.hash_to_point(b"t", 0)
    assert TEST.add(TEST.scalar_mul(G, j), TEST.scalar_mul(G, k)) == TEST.scalar_mul(G, (j + k) % TEST.order)
    assert TEST.scalar_mul(G, TEST.order).infinity


@settings(max_examples=20)
@given(st.integers(min_value=1, max_value=MAIN.order - 1))
def test_point_encoding_round_trip(k):
    P = MAIN.scalar_mul(MAIN.hash_to_point(b"t", 1), k)
    assert MAIN.contains(P)
    assert MAIN.decode_point(MAIN.encode_point(P)) == P


def test_decode_rejects_off_curve():
    P = MAIN.hash_to_point(b"t", 2)
    data = bytearray(MAIN.encode_point(P))
    for x in range(1, 50):
        data[-1] ^= x
        try:
            Q = MAIN.decode_point(bytes(data))
        except (PointNotOnCurve, ValueError):
            continue
        assert MAIN.contains(Q)


def test_msm_matches_naive():
    pts = TEST.sample_generators(5, b"msm")
    ks = [3, 17, 0, 65000, 9]
    naive = TEST.scalar_mul(pts[0], ks[0])
    for P, k in zip(pts[1:], ks[1:]):
        naive = TEST.add(naive, TEST.scalar_mul(P, k))
    assert TEST.msm(ks, pts) == naive


def test_generators_are_deterministic_and_distinct():
    a = MAIN.sample_generators(4, b"g")
    assert a == MAIN.sample_generators(4, b"g")
    assert len({MAIN.encode_point(P) for P in a}) == 4
