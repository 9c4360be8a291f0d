import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from verinfer.algebra import get_profile
from verinfer.errors import DegreeExceeded, DimensionMismatch
from verinfer.poly import MultilinearPoly, to_bits
from verinfer.rand import Csprng
from verinfer.sumcheck import SumCheckInstance, SumCheckProof, sumcheck_prove, sumcheck_verify
from verinfer.encoding import Reader, Writer
from verinfer.transcript import Transcript

CURVE = get_profile("test")
F = CURVE.scalar_field
p = F.modulus


def _factors(v, k, seed):
    rng = Csprng(seed)
    return tuple(MultilinearPoly(F, v, tuple(rng.randbelow(p) for _ in range(1 << v))) for _ in range(k))


def _naive(factors, terms):
    v = factors[0].num_vars
    total = 0
    for b in range(1 << v):
        vals = [f.evals[b] for f in factors]
        total += sum(c * math.prod(vals[i] for i in idx) for c, idx in terms)
    return total % p


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=5), st.integers(min_value=1, max_value=3), st.integers(min_value=0, max_value=10**6))
def test_honest_prover_accepted(v, d, seed):
    factors = _factors(v, d, seed)
    terms = ((1, tuple(range(d))), (7, (0,)))
    H = _naive(factors, terms)
    inst = SumCheckInstance(F, factors, terms, H)
    assert inst.hypercube_sum() == H
    proof = sumcheck_prove(inst, Transcript(F, b"s"))
    assert proof.num_rounds == v
    res = sumcheck_verify(H, proof, Transcript(F, b"s"), field=F, num_vars=v, terms=terms)
    assert res.ok


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=5), st.integers(min_value=1, max_value=3), st.integers(min_value=0, max_value=10**6), st.integers(min_value=1, max_value=p - 1))
def test_wrong_claim_rejected_under_fiat_shamir(v, d, seed, delta):
    factors = _factors(v, d, seed)
    terms = ((1, tuple(range(d))),)
    wrong = (_naive(factors, terms) + delta) % p
    proof = sumcheck_prove(SumCheckInstance(F, factors, terms, wrong), Transcript(F, b"s"), Csprng(seed))
    assert not sumcheck_verify(wrong, proof, Transcript(F, b"s"), field=F, num_vars=v, terms=terms).ok


def test_proof_serialization_round_trip():
    factors = _factors(3, 2, 1)
    terms = ((1, (0, 1)),)
    H = _naive(factors, terms)
    proof = sumcheck_prove(SumCheckInstance(F, factors, terms, H), Transcript(F, b"s"))
    w = Writer()
    proof.write(w, F)
    again = SumCheckProof.read(Reader(w.getvalue()), CURVE)
    assert sumcheck_verify(H, again, Transcript(F, b"s"), field=F, num_vars=3, terms=terms).ok


def test_instance_validation():
    with pytest.raises(DimensionMismatch):
        SumCheckInstance(F, (), ((1, ()),), 0)
    with pytest.raises(DimensionMismatch):
        SumCheckInstance(F, _factors(2, 1, 0) + _factors(3, 1, 0), ((1, (0,)),), 0)
    with pytest.raises(DimensionMismatch):
        SumCheckInstance(F, _factors(2, 1, 0), ((1, (3,)),), 0)
    with pytest.raises(DegreeExceeded):
        SumCheckInstance(F, _factors(2, 1, 0), ((1, (0,) * 64),), 0)


def test_to_bits_matches_hypercube_order():
    f = _factors(3, 1, 9)[0]
    assert all(f.evaluate(list(to_bits(b, 3))) == f.evals[b] for b in range(8))
