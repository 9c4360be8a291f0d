"""ReLU by sign/magnitude bit decomposition.

Per element, with M = sum_{k=1..Q} 2^(Q-k) z_k:

    E = (2 z_0 - 1) M - z + r (z_0 M - a) + sum_{i=0..Q} r^(i+2) z_i (z_i - 1)

must vanish.  All elements are batched into one zero-check
sum_b beta(u, b) E(b) = 0 at a random u.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..algebra import GroupPoint
from ..commit import CommitKey, PedersenCommitment
from ..encoding import Reader, Writer
from ..errors import DimensionMismatch, MagnitudeOverflow
from ..poly import MultilinearPoly, eq_table, lagrange_basis, log2_exact
from ..rand import Csprng
from ..sumcheck import (
    Committed,
    Derived,
    Public,
    SumCheckInstance,
    SumCheckProof,
    SumCheckResult,
    sumcheck_prove,
    sumcheck_verify,
)
from ..transcript import Transcript
from .common import CommittedVector, dims

DEFAULT_BITS = 32

# factor layout: eq, z, a, z_0 .. z_Q, M
EQ, Z, A, BIT0 = 0, 1, 2, 3


def relu(values):
    return [max(0, v) for v in values]


def decompose(v: int, Q: int) -> list[int]:
    """[z_0, z_1..z_Q]: sign bit (1 for v >= 0) then magnitude bits, most significant first."""
    if abs(v) >= 1 << Q:
        raise MagnitudeOverflow(f"|{v}| needs more than {Q} bits")
    mag = abs(v)
    return [1 if v >= 0 else 0] + [(mag >> (Q - k)) & 1 for k in range(1, Q + 1)]


def _terms(field, Q: int, r: int) -> tuple:
    p = field.modulus
    M = BIT0 + Q + 1
    terms = [
        (2, (EQ, BIT0, M)),
        (p - 1, (EQ, M)),
        (p - 1, (EQ, Z)),
        (r, (EQ, BIT0, M)),
        ((p - r) % p, (EQ, A)),
    ]
    w = r * r % p
    for i in range(Q + 1):
        terms.append((w, (EQ, BIT0 + i, BIT0 + i)))
        terms.append(((p - w) % p, (EQ, BIT0 + i)))
        w = w * r % p
    return tuple(terms)


def _magnitude(field, Q: int):
    p = field.modulus
    weights = [pow(2, Q - k, p) for k in range(1, Q + 1)]

    def derive(point, evals):
        return sum(wk * evals[BIT0 + k] for k, wk in enumerate(weights, start=1)) % p

    return derive


@dataclass(frozen=True)
class ReluClaim:
    c_z: PedersenCommitment
    c_a: PedersenCommitment
    size: int
    Q: int


@dataclass(frozen=True)
class ReluProof:
    c_bits: tuple[GroupPoint, ...]
    sumcheck: SumCheckProof

    def write(self, w: Writer, field) -> None:
        w.points(self.c_bits)
        self.sumcheck.write(w, field)

    @classmethod
    def read(cls, r: Reader, curve) -> ReluProof:
        return cls(tuple(r.points(curve)), SumCheckProof.read(r, curve))


def _challenges(tr: Transcript, claim: ReluClaim, c_bits):
    tr.absorb(b"relu/shape", dims(claim.size, claim.Q))
    tr.absorb_point(b"relu/z", claim.c_z.point)
    tr.absorb_point(b"relu/a", claim.c_a.point)
    for c in c_bits:
        tr.absorb_point(b"relu/bit", c)
    r = tr.challenge(b"relu/r")
    u = tr.challenges(b"relu/u", log2_exact(claim.size))
    return r, u


def prove_relu(
    key: CommitKey,
    z: CommittedVector,
    Q: int,
    transcript: Transcript,
    rng: Csprng,
    a: CommittedVector | None = None,
    *,
    bits: Sequence[Sequence[int]] | None = None,
) -> tuple[CommittedVector, ReluProof]:
    """Return the committed output ``max(0, z)`` and the proof.

    ``a`` may be supplied when the output is already committed (e.g. it is the next
    layer's input); otherwise it is committed here.  ``bits`` replaces the computed
    decomposition, one ``[z_0, z_1..z_Q]`` row per element; soundness harnesses use
    it to commit to non-boolean or non-recomposing bits.
    """
    f = key.field
    n = len(z)
    signed = [f.signed(v) for v in z.values]
    if bits is None:
        bits = [decompose(v, Q) for v in signed]
    elif len(bits) != n or any(len(b) != Q + 1 for b in bits):
        raise DimensionMismatch("one row of Q+1 bits per element expected")
    if a is None:
        a = CommittedVector.create(key, relu(signed), rng, size=n)
    bit_vecs = [CommittedVector.create(key, [b[i] for b in bits], rng, size=n) for i in range(Q + 1)]
    claim = ReluClaim(z.commitment, a.commitment, n, Q)
    c_bits = tuple(bv.point for bv in bit_vecs)
    r, u = _challenges(transcript, claim, c_bits)
    nv = log2_exact(n)
    mags = [sum(b[k] << (Q - k) for k in range(1, Q + 1)) for b in bits]
    factors = [
        MultilinearPoly(f, nv, tuple(eq_table(f, u))),
        MultilinearPoly(f, nv, z.values),
        MultilinearPoly(f, nv, a.values),
        *(MultilinearPoly(f, nv, bv.values) for bv in bit_vecs),
        MultilinearPoly(f, nv, tuple(mags)),
    ]
    inst = SumCheckInstance(f, tuple(factors), _terms(f, Q, r), 0)
    sources = [None, z.opening(key), a.opening(key), *(bv.opening(key) for bv in bit_vecs), None]
    return a, ReluProof(c_bits, sumcheck_prove(inst, transcript, rng, sources))


def verify_relu(key: CommitKey, claim: ReluClaim, proof: ReluProof, transcript: Transcript) -> SumCheckResult:
    f = key.field
    Q = claim.Q
    if len(proof.c_bits) != Q + 1:
        return SumCheckResult(False, "relu bit count")
    r, u = _challenges(transcript, claim, proof.c_bits)
    n = claim.size
    checks = [
        Public(lambda point: lagrange_basis(f, u, point)),
        Committed(key, claim.c_z),
        Committed(key, claim.c_a),
        *(Committed(key, PedersenCommitment(c, n)) for c in proof.c_bits),
        Derived(_magnitude(f, Q)),
    ]
    return sumcheck_verify(
        0, proof.sumcheck, transcript, field=f, num_vars=log2_exact(n), terms=_terms(f, Q, r), checks=checks
    )
