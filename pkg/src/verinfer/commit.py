"""Pedersen vector commitments and the opening / inner-product protocol.

``Commit(S, r) = h^r * prod g_i^{S_i}`` in multiplicative notation; here the group
is written additively, so it is ``r*h + sum S_i*g_i``.  The opening protocol proves
knowledge of ``S`` and ``t`` behind ``c_S`` and ``c_t = Commit(t, r_t) = h^{r_t} g^t``
with ``<S, y> = t`` for a public ``y``, without revealing ``S``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .algebra import CurveProfile, GroupPoint, PrimeField
from .encoding import Reader, Writer
from .errors import DecodingError, DimensionMismatch, WitnessInconsistent
from .poly import eq_table
from .rand import Csprng
from .transcript import Transcript

GENERATOR_TAG = b"verinfer/pedersen/v1"
OPENING_MAGIC = b"ZKOP"
OPENING_VERSION = 1


@dataclass(frozen=True)
class CommitKey:
    """Public generators ``h, g, g_1..g_d``; prefix-stable in ``d``."""

    curve: CurveProfile
    h: GroupPoint
    g: GroupPoint
    gs: tuple[GroupPoint, ...]

    @classmethod
    def setup(cls, curve: CurveProfile, d: int, tag: bytes = GENERATOR_TAG) -> CommitKey:
        gens = curve.sample_generators(d + 2, tag)
        curve.precompute(gens)
        return cls(curve, gens[0], gens[1], tuple(gens[2:]))

    @property
    def field(self) -> PrimeField:
        return self.curve.scalar_field

    @property
    def capacity(self) -> int:
        return len(self.gs)


@dataclass(frozen=True)
class PedersenCommitment:
    point: GroupPoint
    dimension: int

    # multiplicative notation to match the usual presentation
    def __mul__(self, other: PedersenCommitment) -> PedersenCommitment:
        return PedersenCommitment(self.point + other.point, max(self.dimension, other.dimension))

    def __truediv__(self, other: PedersenCommitment) -> PedersenCommitment:
        return PedersenCommitment(self.point - other.point, max(self.dimension, other.dimension))

    def __pow__(self, e: int) -> PedersenCommitment:
        return PedersenCommitment(int(e) * self.point, self.dimension)

    def to_bytes(self) -> bytes:
        return self.point.to_bytes()


def commit_vector(key: CommitKey, S: Sequence[int], r_S: int) -> PedersenCommitment:
    if len(S) > key.capacity:
        raise DimensionMismatch(f"vector of length {len(S)} exceeds key capacity {key.capacity}")
    point = key.curve.msm([r_S, *S], [key.h, *key.gs[: len(S)]])
    return PedersenCommitment(point, len(S))


def commit_scalar(key: CommitKey, t: int, r_t: int) -> PedersenCommitment:
    return PedersenCommitment(key.curve.msm([r_t, t], [key.h, key.g]), 1)


def inner(field: PrimeField, a: Sequence[int], b: Sequence[int]) -> int:
    if len(a) != len(b):
        raise DimensionMismatch("inner product of vectors of different length")
    return sum(x * y for x, y in zip(a, b)) % field.modulus


@dataclass(frozen=True)
class OpeningProof:
    c_D: GroupPoint
    c_Dy: GroupPoint
    e: int
    S_prime: tuple[int, ...]
    r_S_prime: int
    r_t_prime: int

    def write(self, w: Writer, field: PrimeField) -> None:
        w.point(self.c_D).point(self.c_Dy).scalar(field, self.e)
        w.scalars(field, self.S_prime).scalar(field, self.r_S_prime).scalar(field, self.r_t_prime)

    @classmethod
    def read(cls, r: Reader, curve: CurveProfile) -> OpeningProof:
        f = curve.scalar_field
        return cls(r.point(curve), r.point(curve), r.scalar(f), tuple(r.scalars(f)), r.scalar(f), r.scalar(f))

    def to_bytes(self, curve: CurveProfile) -> bytes:
        w = Writer().raw(OPENING_MAGIC).u8(OPENING_VERSION).u8(curve.pid)
        self.write(w, curve.scalar_field)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes, curve: CurveProfile) -> OpeningProof:
        r = Reader(data)
        if r.raw(4) != OPENING_MAGIC or r.u8() != OPENING_VERSION:
            raise DecodingError("not an opening proof")
        if r.u8() != curve.pid:
            raise DecodingError("opening proof for another profile")
        proof = cls.read(r, curve)
        r.done()
        return proof


def _absorb_statement(tr: Transcript, c_S: GroupPoint, c_t: GroupPoint, y: Sequence[int]) -> None:
    tr.absorb_point(b"alg1/c_S", c_S)
    tr.absorb_point(b"alg1/c_t", c_t)
    tr.absorb(b"alg1/dim", len(y).to_bytes(4, "big"))


def prove_opening(
    key: CommitKey,
    S: Sequence[int],
    r_S: int,
    t: int,
    r_t: int,
    y: Sequence[int],
    transcript: Transcript,
    rng: Csprng,
    *,
    c_S: PedersenCommitment | None = None,
    c_t: PedersenCommitment | None = None,
) -> OpeningProof:
    f = key.field
    p = f.modulus
    if len(S) != len(y):
        raise DimensionMismatch("witness and public vector differ in length")
    if inner(f, S, y) != t % p:
        raise WitnessInconsistent("<S, y> != t")
    if c_S is None:
        c_S = commit_vector(key, S, r_S)
    if c_t is None:
        c_t = commit_scalar(key, t, r_t)
    _absorb_statement(transcript, c_S.point, c_t.point, y)
    D = [rng.randbelow(p) for _ in S]
    r1 = rng.randbelow(p)
    r2 = rng.randbelow(p)
    c_D = commit_vector(key, D, r1).point
    c_Dy = commit_scalar(key, inner(f, D, y), r2).point
    transcript.absorb_point(b"alg1/c_D", c_D)
    transcript.absorb_point(b"alg1/c_Dy", c_Dy)
    e = transcript.challenge(b"alg1/e")
    S_prime = tuple((s * e + d) % p for s, d in zip(S, D))
    return OpeningProof(c_D, c_Dy, e, S_prime, (r_S * e + r1) % p, (r_t * e + r2) % p)


def verify_opening(
    key: CommitKey,
    c_S: PedersenCommitment,
    c_t: PedersenCommitment,
    y: Sequence[int],
    proof: OpeningProof,
    transcript: Transcript,
    *,
    public_t: int | None = None,
) -> bool:
    """Both checks of the opening protocol.

    ``public_t`` says that ``c_t = g^t`` with a zero blind, which lets ``c_t^e`` be
    computed as the fixed-base product ``g^(t e)``.
    """
    curve = key.curve
    f = key.field
    p = f.modulus
    if len(proof.S_prime) != len(y) or len(y) > key.capacity:
        return False
    _absorb_statement(transcript, c_S.point, c_t.point, y)
    transcript.absorb_point(b"alg1/c_D", proof.c_D)
    transcript.absorb_point(b"alg1/c_Dy", proof.c_Dy)
    e = transcript.challenge(b"alg1/e")
    if e != proof.e:
        return False
    # c_{S'} == c_S^e * c_D
    lhs = commit_vector(key, proof.S_prime, proof.r_S_prime).point
    if lhs != curve.scalar_mul(c_S.point, e) + proof.c_D:
        return False
    # c_{t'} == c_t^e * c_<D,y>, with t' recomputed by the verifier
    t_prime = inner(f, proof.S_prime, y)
    if public_t is not None:
        lhs = curve.msm([proof.r_t_prime, (t_prime - e * public_t) % p], [key.h, key.g])
        return lhs == proof.c_Dy
    lhs = commit_scalar(key, t_prime, proof.r_t_prime).point
    return lhs == curve.scalar_mul(c_t.point, e) + proof.c_Dy


def extract_witness(field: PrimeField, p1: OpeningProof, p2: OpeningProof) -> tuple[list[int], int, int]:
    """Recover ``(S, r_S, r_t)`` from two accepting transcripts with ``e1 != e2``.

    Solves ``S'_k = S e_k + D`` (and the blinding analogues) for the unknowns.
    """
    p = field.modulus
    if p1.e == p2.e:
        raise ValueError("extraction needs distinct challenges")
    inv = pow(p1.e - p2.e, -1, p)
    S = [(a - b) * inv % p for a, b in zip(p1.S_prime, p2.S_prime)]
    r_S = (p1.r_S_prime - p2.r_S_prime) * inv % p
    r_t = (p1.r_t_prime - p2.r_t_prime) * inv % p
    return S, r_S, r_t


# ---------------------------------------------------------------------------
# evaluation proofs: opening <S, y> for a public y with the value t revealed
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalProof:
    """Claimed ``t = <S, y>`` plus an opening proof with ``c_t = g^t``."""

    value: int
    opening: OpeningProof

    def write(self, w: Writer, field: PrimeField) -> None:
        w.scalar(field, self.value)
        self.opening.write(w, field)

    @classmethod
    def read(cls, r: Reader, curve: CurveProfile) -> EvalProof:
        return cls(r.scalar(curve.scalar_field), OpeningProof.read(r, curve))


def prove_inner_product(
    key: CommitKey,
    S: Sequence[int],
    r_S: int,
    c_S: PedersenCommitment,
    y: Sequence[int],
    transcript: Transcript,
    rng: Csprng,
) -> EvalProof:
    t = inner(key.field, S, y)
    transcript.absorb_scalars(b"eval/value", [t])
    opening = prove_opening(key, S, r_S, t, 0, y, transcript, rng, c_S=c_S, c_t=commit_scalar(key, t, 0))
    return EvalProof(t, opening)


def verify_inner_product(
    key: CommitKey, c_S: PedersenCommitment, y: Sequence[int], proof: EvalProof, transcript: Transcript
) -> bool:
    transcript.absorb_scalars(b"eval/value", [proof.value])
    c_t = commit_scalar(key, proof.value, 0)
    return verify_opening(key, c_S, c_t, y, proof.opening, transcript, public_t=proof.value)


def prove_mle_eval(key, S, r_S, c_S, u, transcript, rng) -> EvalProof:
    """Open the multilinear extension of the committed table at ``u``: y = beta(u, .)."""
    y = eq_table(key.field, u)
    if len(S) != len(y):
        raise DimensionMismatch("table length must be 2^len(u)")
    return prove_inner_product(key, S, r_S, c_S, y, transcript, rng)


def verify_mle_eval(key, c_S, u, proof, transcript) -> bool:
    return verify_inner_product(key, c_S, eq_table(key.field, u), proof, transcript)
