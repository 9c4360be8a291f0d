import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from verinfer.algebra import get_profile
from verinfer.commit import CommitKey
from verinfer.errors import DomainTooLarge, EntryNotInTable, MagnitudeOverflow, ShapeMismatch
from verinfer.gadgets import (
    CommittedVector,
    LinearClaim,
    LookupClaim,
    MatMulClaim,
    ReluClaim,
    build_function_table,
    decompose,
    linear_forward,
    matmul,
    multiplicities,
    prove_linear,
    prove_lookup,
    prove_matmul,
    prove_relu,
    range_table,
    relu,
    rescale,
    verify_linear,
    verify_lookup,
    verify_matmul,
    verify_relu,
)
from verinfer.rand import Csprng
from verinfer.transcript import Transcript

CURVE = get_profile("test")
F = CURVE.scalar_field
KEY = CommitKey.setup(CURVE, 64)
small = st.integers(min_value=-50, max_value=50)


def _vec(values, seed=0, size=None):
    return CommittedVector.create(KEY, values, Csprng(("vec", seed)), size=size)


def _flat(M):
    return [v for row in M for v in row]


# --- arithmetic oracles -----------------------------------------------------


@given(st.integers(min_value=-(10**6), max_value=10**6), st.sampled_from([1, 2, 4, 16, 256]))
def test_rescale_rounds_half_up(v, scale):
    y = rescale(v, scale)
    assert scale * y - scale / 2 <= v < scale * y + scale / 2
    assert -(scale // 2) <= v - scale * y <= scale - 1 - scale // 2


def test_rescale_ties():
    assert rescale(8, 16) == 1
    assert rescale(-8, 16) == 0
    assert rescale(24, 16) == 2


@given(st.integers(min_value=-(2**12) + 1, max_value=2**12 - 1))
def test_decompose_recomposes(v):
    bits = decompose(v, 12)
    assert all(b in (0, 1) for b in bits)
    mag = sum(b << (12 - k) for k, b in enumerate(bits[1:], start=1))
    assert mag == abs(v)
    assert bits[0] == (v >= 0)


def test_decompose_overflow():
    with pytest.raises(MagnitudeOverflow):
        decompose(16, 4)


@given(st.lists(st.lists(small, min_size=3, max_size=3), min_size=2, max_size=2), st.lists(st.lists(small, min_size=2, max_size=2), min_size=3, max_size=3))
def test_matmul_oracle(A, B):
    C = matmul(A, B)
    assert C == [[sum(A[i][k] * B[k][j] for k in range(3)) for j in range(2)] for i in range(2)]


# --- matmul -------------------------------------------------------------------


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_matmul_proof(seed):
    R = random.Random(seed)
    n = 4
    A = [[R.randint(-9, 9) for _ in range(n)] for _ in range(n)]
    B = [[R.randint(-9, 9) for _ in range(n)] for _ in range(n)]
    C = matmul(A, B)
    cA, cB, cC = _vec(_flat(A), 1), _vec(_flat(B), 2), _vec(_flat(C), 3)
    rng = Csprng(seed)
    proof = prove_matmul(KEY, cA, cB, cC, (n, n, n), Transcript(F, b"m"), rng)
    claim = MatMulClaim(cA.commitment, cB.commitment, cC.commitment, (n, n, n))
    assert verify_matmul(KEY, claim, proof, Transcript(F, b"m")).ok
    C[R.randrange(n)][R.randrange(n)] += 1
    cX = _vec(_flat(C), 4)
    proof = prove_matmul(KEY, cA, cB, cX, (n, n, n), Transcript(F, b"m"), rng)
    claim = MatMulClaim(cA.commitment, cB.commitment, cX.commitment, (n, n, n))
    assert not verify_matmul(KEY, claim, proof, Transcript(F, b"m")).ok


def test_rectangular_matmul():
    A = [[1, 2, 3, 4], [5, 6, 7, 8]]
    B = [[1], [0], [-1], [2]]
    cA, cB, cC = _vec(_flat(A)), _vec(_flat(B), 1), _vec(_flat(matmul(A, B)), 2)
    proof = prove_matmul(KEY, cA, cB, cC, (2, 4, 1), Transcript(F, b"m"), Csprng(0))
    assert verify_matmul(KEY, MatMulClaim(cA.commitment, cB.commitment, cC.commitment, (2, 4, 1)), proof, Transcript(F, b"m")).ok


# --- relu ---------------------------------------------------------------------


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(min_value=-255, max_value=255), min_size=4, max_size=4))
def test_relu_proof(vals):
    z = _vec(vals, 5, size=4)
    a, proof = prove_relu(KEY, z, 8, Transcript(F, b"r"), Csprng(1))
    assert [F.signed(v) for v in a.values] == relu(vals)
    assert verify_relu(KEY, ReluClaim(z.commitment, a.commitment, 4, 8), proof, Transcript(F, b"r")).ok


def test_relu_rejects_wrong_output():
    vals = [-3, 4, 0, -1]
    z = _vec(vals, 6, size=4)
    bad = _vec([0, 5, 0, 0], 7, size=4)
    a, proof = prove_relu(KEY, z, 8, Transcript(F, b"r"), Csprng(1), a=bad)
    assert not verify_relu(KEY, ReluClaim(z.commitment, a.commitment, 4, 8), proof, Transcript(F, b"r")).ok


def test_relu_shape_mismatch():
    z = _vec([1, 2], 8, size=2)
    with pytest.raises(Exception):
        prove_relu(KEY, z, 8, Transcript(F, b"r"), Csprng(1), bits=[[1] * 9])


# --- lookup -------------------------------------------------------------------


def test_multiplicities_oracle():
    T = range_table(-2, 2)
    rows = [(0,), (1,), (0,), (-2,)]
    assert multiplicities(T, rows) == [1, 0, 2, 1, 0]
    with pytest.raises(EntryNotInTable):
        multiplicities(T, [(3,)])


def test_function_table_and_cap():
    T = build_function_table("sigmoid", (-4, 3), 4)
    assert T.apply([-4, 0, 3]) == [1, 2, 3]
    with pytest.raises(EntryNotInTable):
        T.apply([9])
    with pytest.raises(DomainTooLarge):
        range_table(0, 1 << 30)
    with pytest.raises(ValueError):
        build_function_table("nonsense", (0, 1), 1)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(min_value=-4, max_value=3), min_size=1, max_size=8))
def test_lookup_proof(inputs):
    T = build_function_table("sigmoid", (-4, 3), 4)
    rows = [(x, T.apply([x])[0]) for x in inputs]
    size = 1 << max(1, (len(rows) - 1).bit_length())
    cols = [_vec([r[c] for r in rows], 10 + c, size=size) for c in range(2)]
    claim = LookupClaim(tuple(c.commitment for c in cols), len(rows), size, T)
    proof = prove_lookup(KEY, T, cols, len(rows), Transcript(F, b"l"), Csprng(2))
    assert verify_lookup(KEY, claim, proof, Transcript(F, b"l")).ok


def test_lookup_rejects_wrong_output_column():
    T = build_function_table("sigmoid", (-4, 3), 4)
    rows = [(0, T.apply([0])[0] + 1), (1, T.apply([1])[0])]
    cols = [_vec([r[c] for r in rows], 20 + c, size=2) for c in range(2)]
    claim = LookupClaim(tuple(c.commitment for c in cols), 2, 2, T)
    with pytest.raises(EntryNotInTable):
        prove_lookup(KEY, T, cols, 2, Transcript(F, b"l"), Csprng(2))
    hint = multiplicities(T, [rows[1]])
    forged = prove_lookup(KEY, T, cols, 2, Transcript(F, b"l"), Csprng(2), multiplicities_hint=hint)
    assert not verify_lookup(KEY, claim, forged, Transcript(F, b"l")).ok


# --- linear -------------------------------------------------------------------


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_linear_proof(seed):
    R = random.Random(seed)
    out_dim, in_dim, scale = 2, 4, 16
    W = [[R.randint(-40, 40) for _ in range(in_dim)] for _ in range(out_dim)]
    b = [R.randint(-300, 300) for _ in range(out_dim)]
    x = [R.randint(-40, 40) for _ in range(in_dim)]
    _, y_ref, rem = linear_forward(W, b, x, scale)
    assert all(-8 <= r <= 7 for r in rem)
    cW, cb, cx = _vec(_flat(W), 1), _vec(b, 2, size=out_dim), _vec(x, 3, size=in_dim)
    y, proof = prove_linear(KEY, cW, cb, cx, (out_dim, in_dim), scale, Transcript(F, b"lin"), Csprng(seed))
    assert [F.signed(v) for v in y.values] == y_ref
    claim = LinearClaim(cW.commitment, cb.commitment, cx.commitment, y.commitment, (out_dim, in_dim), scale)
    assert verify_linear(KEY, claim, proof, Transcript(F, b"lin")).ok
    off = _vec([y_ref[0] + 1, y_ref[1]], 4, size=out_dim)
    claim = LinearClaim(cW.commitment, cb.commitment, cx.commitment, off.commitment, (out_dim, in_dim), scale)
    assert not verify_linear(KEY, claim, proof, Transcript(F, b"lin")).ok


def test_linear_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        prove_linear(KEY, _vec([1, 2]), _vec([1]), _vec([1, 2]), (2, 2), 16, Transcript(F, b"lin"), Csprng(0))
