"""Matrix products C = A B reduced to one degree-2 sum-check.

Matrices are stored row-major, so the column index supplies the low-order
(first) variables of a tensor's MLE.  For A (m x k), B (k x n), C (m x n) and
random row/column points i, j:

    C~(j || i) = sum_b A~(b || i) * B~(j || b)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..commit import CommitKey, EvalProof, PedersenCommitment, prove_mle_eval, verify_mle_eval
from ..encoding import Reader, Writer
from ..errors import ShapeMismatch
from ..poly import MultilinearPoly, eq_table, log2_exact, next_pow2
from ..rand import Csprng
from ..sumcheck import (
    Committed,
    SumCheckInstance,
    SumCheckProof,
    SumCheckResult,
    sumcheck_prove,
    sumcheck_verify,
)
from ..transcript import Transcript
from .common import CommittedVector, dims

TERMS = ((1, (0, 1)),)


def pad_matrix(M: Sequence[Sequence[int]], rows: int | None = None, cols: int | None = None) -> list[int]:
    """Flatten row-major after zero-padding both sides up to powers of two."""
    if not M:
        raise ShapeMismatch("empty matrix")
    width = len(M[0])
    if any(len(row) != width for row in M):
        raise ShapeMismatch("ragged matrix")
    rows = next_pow2(len(M)) if rows is None else rows
    cols = next_pow2(width) if cols is None else cols
    flat = []
    for row in M:
        flat.extend(row)
        flat.extend([0] * (cols - width))
    flat.extend([0] * ((rows - len(M)) * cols))
    return flat


def matmul(A: Sequence[Sequence[int]], B: Sequence[Sequence[int]]) -> list[list[int]]:
    """Plain integer product."""
    if not A or not B or len(A[0]) != len(B):
        raise ShapeMismatch("inner dimensions differ")
    cols = list(zip(*B))
    return [[sum(a * b for a, b in zip(row, col)) for col in cols] for row in A]


@dataclass(frozen=True)
class MatMulClaim:
    """Public statement: commitments to padded A, B, C and the padded shape (m, k, n)."""

    c_A: PedersenCommitment
    c_B: PedersenCommitment
    c_C: PedersenCommitment
    shape: tuple[int, int, int]

    def __post_init__(self):
        for s in self.shape:
            log2_exact(s)


@dataclass(frozen=True)
class MatMulProof:
    claim: EvalProof
    sumcheck: SumCheckProof

    def write(self, w: Writer, field) -> None:
        self.claim.write(w, field)
        self.sumcheck.write(w, field)

    @classmethod
    def read(cls, r: Reader, curve) -> MatMulProof:
        return cls(EvalProof.read(r, curve), SumCheckProof.read(r, curve))


def _points(tr: Transcript, claim: MatMulClaim) -> tuple[list[int], list[int]]:
    m, k, n = claim.shape
    tr.absorb(b"matmul/shape", dims(m, k, n))
    for label, c in ((b"matmul/A", claim.c_A), (b"matmul/B", claim.c_B), (b"matmul/C", claim.c_C)):
        tr.absorb_point(label, c.point)
    i = tr.challenges(b"matmul/i", log2_exact(m))
    j = tr.challenges(b"matmul/j", log2_exact(n))
    return i, j


def prove_matmul(
    key: CommitKey,
    A: CommittedVector,
    B: CommittedVector,
    C: CommittedVector,
    shape: tuple[int, int, int],
    transcript: Transcript,
    rng: Csprng,
) -> MatMulProof:
    """Prove ``C = A B`` for committed, padded, row-major matrices of shape (m,k), (k,n), (m,n).

    Nothing is checked up front: if C is wrong the claimed value of C~ disagrees with
    the hypercube sum and the sum-check prover runs in its dishonest mode.
    """
    f = key.field
    p = f.modulus
    m, k, n = shape
    if len(A) != m * k or len(B) != k * n or len(C) != m * n:
        raise ShapeMismatch("committed tensors do not match the shape")
    claim = MatMulClaim(A.commitment, B.commitment, C.commitment, shape)
    i, j = _points(transcript, claim)
    H = prove_mle_eval(key, C.values, C.blind, C.commitment, j + i, transcript, rng)
    eq_i = eq_table(f, i)
    eq_j = eq_table(f, j)
    fa = [0] * k
    for row, w in enumerate(eq_i):
        if w:
            base = row * k
            for b in range(k):
                fa[b] += w * A.values[base + b]
    fb = [sum(w * B.values[b * n + col] for col, w in enumerate(eq_j)) for b in range(k)]
    nv = log2_exact(k)
    inst = SumCheckInstance(
        f,
        (MultilinearPoly(f, nv, tuple(x % p for x in fa)), MultilinearPoly(f, nv, tuple(x % p for x in fb))),
        TERMS,
        H.value,
    )
    sc = sumcheck_prove(
        inst,
        transcript,
        rng,
        [A.opening(key, lambda r: r + i), B.opening(key, lambda r: j + r)],
    )
    return MatMulProof(H, sc)


def verify_matmul(key: CommitKey, claim: MatMulClaim, proof: MatMulProof, transcript: Transcript) -> SumCheckResult:
    i, j = _points(transcript, claim)
    if not verify_mle_eval(key, claim.c_C, j + i, proof.claim, transcript):
        return SumCheckResult(False, "matmul claimed value")
    return sumcheck_verify(
        proof.claim.value,
        proof.sumcheck,
        transcript,
        field=key.field,
        num_vars=log2_exact(claim.shape[1]),
        terms=TERMS,
        checks=[Committed(key, claim.c_A, lambda r: r + i), Committed(key, claim.c_B, lambda r: j + r)],
    )
