import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from verinfer.algebra import get_profile
from verinfer.commit import (
    CommitKey,
    OpeningProof,
    commit_scalar,
    commit_vector,
    extract_witness,
    inner,
    prove_opening,
    verify_opening,
)
from verinfer.errors import WitnessInconsistent
from verinfer.rand import Csprng
from verinfer.transcript import Transcript

CURVE = get_profile("test")
F = CURVE.scalar_field
KEY = CommitKey.setup(CURVE, 8)
elem = st.integers(min_value=0, max_value=F.modulus - 1)
vec = st.lists(elem, min_size=4, max_size=4)


def _statement(S, y, r_S=11, r_t=22):
    t = inner(F, S, y)
    return t, commit_vector(KEY, S, r_S), commit_scalar(KEY, t, r_t)


@settings(max_examples=50)
@given(vec, vec, elem, elem)
def test_commitment_is_additively_homomorphic(a, b, ra, rb):
    ca, cb = commit_vector(KEY, a, ra), commit_vector(KEY, b, rb)
    s = [(x + y) % F.modulus for x, y in zip(a, b)]
    assert CURVE.add(ca.point, cb.point) == commit_vector(KEY, s, (ra + rb) % F.modulus).point


@settings(max_examples=30)
@given(vec, vec, st.integers(min_value=0, max_value=2**32))
def test_opening_complete_and_serializable(S, y, seed):
    t, c_S, c_t = _statement(S, y)
    proof = prove_opening(KEY, S, 11, t, 22, y, Transcript(F, b"t"), Csprng(seed), c_S=c_S, c_t=c_t)
    assert verify_opening(KEY, c_S, c_t, y, proof, Transcript(F, b"t"))
    again = OpeningProof.from_bytes(proof.to_bytes(CURVE), CURVE)
    assert verify_opening(KEY, c_S, c_t, y, again, Transcript(F, b"t"))


def test_prover_refuses_wrong_inner_product_and_verifier_rejects_it():
    S, y = [1, 2, 3, 4], [5, 6, 7, 8]
    t, c_S, c_t = _statement(S, y)
    with pytest.raises(WitnessInconsistent):
        prove_opening(KEY, S, 11, t + 1, 22, y, Transcript(F, b"t"), Csprng(1))
    proof = prove_opening(KEY, S, 11, t, 22, y, Transcript(F, b"t"), Csprng(1), c_S=c_S, c_t=c_t)
    c_bad = commit_scalar(KEY, t + 1, 22)
    assert not verify_opening(KEY, c_S, c_bad, y, proof, Transcript(F, b"t"))


def test_opening_rejects_other_domain_and_point():
    S, y = [1, 2, 3, 4], [5, 6, 7, 8]
    t, c_S, c_t = _statement(S, y)
    proof = prove_opening(KEY, S, 11, t, 22, y, Transcript(F, b"t"), Csprng(2), c_S=c_S, c_t=c_t)
    assert not verify_opening(KEY, c_S, c_t, y, proof, Transcript(F, b"other"))
    assert not verify_opening(KEY, c_S, c_t, [5, 6, 7, 9], proof, Transcript(F, b"t"))
    bad = dataclasses.replace(proof, e=(proof.e + 1) % F.modulus)
    assert not verify_opening(KEY, c_S, c_t, y, bad, Transcript(F, b"t"))


def test_extraction_from_two_challenges():
    S, y = [9, 8, 7, 6], [1, 0, 1, 0]
    t, c_S, c_t = _statement(S, y)
    proofs = [
        prove_opening(KEY, S, 11, t, 22, y, Transcript.interactive(F, b"x", s), Csprng(b"coins"), c_S=c_S, c_t=c_t)
        for s in (1, 2)
    ]
    assert proofs[0].e != proofs[1].e
    assert extract_witness(F, *proofs) == (S, 11, 22)


def test_setup_is_deterministic():
    assert CommitKey.setup(CURVE, 4).g == CommitKey.setup(CURVE, 4).g
    assert KEY.capacity >= 8
