"""Fully connected layer with fixed-point rescale.

For y = round(W x + b, scale) the prover commits y and the remainder rem, where

    W x + b = scale * y + rem,   -scale/2 <= rem < scale/2.

The verifier never sees P = W x committed on its own: c_P = c_y^scale * c_rem / c_b
follows from the homomorphism.  The matmul gadget proves P = W x and the lookup
gadget range-checks rem.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..algebra import GroupPoint
from ..commit import CommitKey, PedersenCommitment
from ..encoding import Reader, Writer
from ..errors import ShapeMismatch
from ..rand import Csprng
from ..sumcheck import SumCheckResult
from ..transcript import Transcript
from .common import CommittedVector, dims
from .lookup import LookupClaim, LookupProof, prove_lookup, verify_lookup
from .matmul import MatMulClaim, MatMulProof, prove_matmul, verify_matmul
from .tables import range_table


def rescale(v: int, scale: int) -> int:
    """floor(v / scale + 1/2): nearest integer, ties toward +infinity."""
    return (v + scale // 2) // scale


def remainder_table(scale: int):
    lo = -(scale // 2)
    return range_table(lo, lo + scale - 1)


@dataclass(frozen=True)
class LinearClaim:
    c_W: PedersenCommitment
    c_b: PedersenCommitment
    c_x: PedersenCommitment
    c_y: PedersenCommitment
    shape: tuple[int, int]  # padded (out, in)
    scale: int


@dataclass(frozen=True)
class LinearProof:
    c_rem: GroupPoint
    matmul: MatMulProof
    range_check: LookupProof

    def write(self, w: Writer, field) -> None:
        w.point(self.c_rem)
        self.matmul.write(w, field)
        self.range_check.write(w, field)

    @classmethod
    def read(cls, r: Reader, curve) -> LinearProof:
        return cls(r.point(curve), MatMulProof.read(r, curve), LookupProof.read(r, curve))


def _header(tr: Transcript, claim: LinearClaim, c_rem: GroupPoint) -> None:
    tr.absorb(b"linear/shape", dims(*claim.shape, claim.scale))
    for label, c in ((b"linear/W", claim.c_W), (b"linear/b", claim.c_b), (b"linear/x", claim.c_x), (b"linear/y", claim.c_y)):
        tr.absorb_point(label, c.point)
    tr.absorb_point(b"linear/rem", c_rem)


def linear_forward(W, b, x, scale: int) -> tuple[list[int], list[int], list[int]]:
    """Integer semantics: returns (W x, y, rem)."""
    P = [sum(w * xi for w, xi in zip(row, x)) for row in W]
    y = [rescale(v + bi, scale) for v, bi in zip(P, b)]
    rem = [v + bi - scale * yi for v, bi, yi in zip(P, b, y)]
    return P, y, rem


def prove_linear(
    key: CommitKey,
    W: CommittedVector,
    b: CommittedVector,
    x: CommittedVector,
    shape: tuple[int, int],
    scale: int,
    transcript: Transcript,
    rng: Csprng,
    y: CommittedVector | None = None,
) -> tuple[CommittedVector, LinearProof]:
    f = key.field
    p = f.modulus
    out_dim, in_dim = shape
    if len(W) != out_dim * in_dim or len(b) != out_dim or len(x) != in_dim:
        raise ShapeMismatch("committed tensors do not match the layer shape")
    Wm = [[f.signed(W.values[i * in_dim + j]) for j in range(in_dim)] for i in range(out_dim)]
    xs = [f.signed(v) for v in x.values]
    bs = [f.signed(v) for v in b.values]
    P, y_vals, rem = linear_forward(Wm, bs, xs, scale)
    if y is None:
        y = CommittedVector.create(key, y_vals, rng, size=out_dim)
    rem_vec = CommittedVector.create(key, rem, rng, size=out_dim)
    r_P = (scale * y.blind + rem_vec.blind - b.blind) % p
    c_P = y.commitment**scale * rem_vec.commitment / b.commitment
    # c_P is derived from y, rem and b, so P is opened with the blind that matches it
    P_vec = CommittedVector(tuple((scale * yv + rv - bv) % p for yv, rv, bv in zip(y.values, rem_vec.values, b.values)), r_P, c_P)
    claim = LinearClaim(W.commitment, b.commitment, x.commitment, y.commitment, shape, scale)
    _header(transcript, claim, rem_vec.point)
    mm = prove_matmul(key, W, x, P_vec, (out_dim, in_dim, 1), transcript, rng)
    rc = prove_lookup(key, remainder_table(scale), [rem_vec], out_dim, transcript, rng)
    return y, LinearProof(rem_vec.point, mm, rc)


def verify_linear(key: CommitKey, claim: LinearClaim, proof: LinearProof, transcript: Transcript) -> SumCheckResult:
    out_dim, in_dim = claim.shape
    _header(transcript, claim, proof.c_rem)
    c_rem = PedersenCommitment(proof.c_rem, out_dim)
    c_P = claim.c_y**claim.scale * c_rem / claim.c_b
    res = verify_matmul(key, MatMulClaim(claim.c_W, claim.c_x, c_P, (out_dim, in_dim, 1)), proof.matmul, transcript)
    if not res:
        return SumCheckResult(False, f"linear matmul: {res.reason}")
    res = verify_lookup(key, LookupClaim((c_rem,), out_dim, out_dim, remainder_table(claim.scale)), proof.range_check, transcript)
    if not res:
        return SumCheckResult(False, f"linear rescale: {res.reason}")
    return res
