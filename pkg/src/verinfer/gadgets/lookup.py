"""Lookup argument via the logarithmic derivative.

Witness rows (committed columns) are folded with a challenge r into S_j, table rows
into T_i.  With multiplicities e and a second challenge alpha,

    sum_j 1 / (alpha + S_j) = sum_i e_i / (alpha + T_i)

holds when every S_j is some T_i.  The prover commits helpers h_S = 1/(alpha + S)
and h_T = e/(alpha + T); each side runs one sum-check that adds the helper sum to a
rho-weighted zero-check of the helper's defining equation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..algebra import GroupPoint, PrimeField
from ..commit import CommitKey, PedersenCommitment
from ..encoding import Reader, Writer
from ..errors import DecodingError, DimensionMismatch
from ..poly import MultilinearPoly, eq_table, fold_evaluate, lagrange_basis, log2_exact, next_pow2
from ..rand import Csprng
from ..sumcheck import (
    Committed,
    Public,
    SumCheckInstance,
    SumCheckProof,
    SumCheckResult,
    sumcheck_prove,
    sumcheck_verify,
)
from ..transcript import Transcript
from .common import CommittedVector, dims
from .tables import LookupTable


def multiplicities(table: LookupTable, rows: Sequence[Sequence[int]]) -> list[int]:
    """e_i = number of witness rows equal to table row i."""
    e = [0] * len(table)
    for row in rows:
        e[table.index_of(row)] += 1
    return e


def fold_rows(field: PrimeField, rows: Sequence[Sequence[int]], r: int) -> list[int]:
    p = field.modulus
    out = []
    for row in rows:
        acc = 0
        for v in reversed(row):
            acc = (acc * r + v) % p
        out.append(acc)
    return out


def rational_identity(field: PrimeField, S: Sequence[int], T: Sequence[int], e: Sequence[int], X: int) -> tuple[int, int]:
    """Both sides of sum 1/(X + S_j) = sum e_i/(X + T_i), evaluated in the field."""
    p = field.modulus
    lhs = sum(pow(X + s, -1, p) for s in S) % p
    rhs = sum(ei * pow(X + t, -1, p) for ei, t in zip(e, T)) % p
    return lhs, rhs


def _padded_table_rows(table: LookupTable) -> list[tuple[int, ...]]:
    # pad rows repeat row 0 so a multiplicity placed on them still names a real row
    size = next_pow2(len(table))
    return list(table.rows) + [table.rows[0]] * (size - len(table))


@dataclass(frozen=True)
class LookupClaim:
    columns: tuple[PedersenCommitment, ...]
    n_rows: int
    size: int
    table: LookupTable


@dataclass(frozen=True)
class LookupProof:
    c_e: GroupPoint
    c_hS: GroupPoint
    c_hT: GroupPoint
    sigma: int
    witness_side: SumCheckProof
    table_side: SumCheckProof

    def write(self, w: Writer, field) -> None:
        w.points([self.c_e, self.c_hS, self.c_hT]).scalar(field, self.sigma)
        self.witness_side.write(w, field)
        self.table_side.write(w, field)

    @classmethod
    def read(cls, r: Reader, curve) -> LookupProof:
        pts = r.points(curve)
        if len(pts) != 3:
            raise DecodingError("lookup proof carries three commitments")
        sigma = r.scalar(curve.scalar_field)
        return cls(*pts, sigma, SumCheckProof.read(r, curve), SumCheckProof.read(r, curve))


def _header(tr: Transcript, claim: LookupClaim, table_size: int) -> None:
    tr.absorb(b"lookup/table", claim.table.ident())
    tr.absorb(b"lookup/shape", dims(claim.n_rows, claim.size, table_size, len(claim.columns)))
    for c in claim.columns:
        tr.absorb_point(b"lookup/col", c.point)


def _fold_challenges(tr: Transcript, field: PrimeField, t_rows) -> tuple[int, int, list[int]]:
    """Folding challenge r, then alpha redrawn until no alpha + T_i vanishes."""
    p = field.modulus
    r = tr.challenge(b"lookup/r")
    T_fold = fold_rows(field, t_rows, r)
    forbidden = {(-t) % p for t in T_fold}
    while True:
        alpha = tr.challenge(b"lookup/alpha")
        if alpha not in forbidden:
            return r, alpha, T_fold


def _witness_terms(field: PrimeField, d: int, r: int, alpha: int, rho: int):
    # factors: 0 eq, 1 h_S, 2 sel, 3.. columns
    p = field.modulus
    terms = [(1, (1,)), (rho * alpha % p, (0, 1)), ((p - rho) % p, (0, 2))]
    w = rho
    for c in range(d):
        terms.append((w, (0, 1, 3 + c)))
        w = w * r % p
    return tuple(terms)


def _table_terms(field: PrimeField, alpha: int, rho: int):
    # factors: 0 eq, 1 h_T, 2 e, 3 folded table
    p = field.modulus
    return ((1, (1,)), (rho * alpha % p, (0, 1)), (rho, (0, 1, 3)), ((p - rho) % p, (0, 2)))


def prove_lookup(
    key: CommitKey,
    table: LookupTable,
    columns: Sequence[CommittedVector],
    n_rows: int,
    transcript: Transcript,
    rng: Csprng,
    *,
    multiplicities_hint: Sequence[int] | None = None,
) -> LookupProof:
    """Prove that the first ``n_rows`` rows of the committed columns are table rows.

    Raises :class:`EntryNotInTable` before touching the transcript if some row is
    missing, since no multiplicity vector exists then.  ``multiplicities_hint``
    skips the count and uses the given vector instead; soundness harnesses pass
    counts that silently drop the missing rows.
    """
    f = key.field
    p = f.modulus
    if len(columns) != table.width:
        raise DimensionMismatch("one committed column per table column expected")
    size = len(columns[0])
    if any(len(c) != size for c in columns) or n_rows > size:
        raise DimensionMismatch("columns differ in length")
    rows = [tuple(f.signed(c.values[j]) for c in columns) for j in range(n_rows)]
    e_real = multiplicities(table, rows) if multiplicities_hint is None else [int(v) for v in multiplicities_hint]
    if len(e_real) != len(table):
        raise DimensionMismatch("one multiplicity per table row expected")
    t_rows = _padded_table_rows(table)
    t_size = len(t_rows)
    e = e_real + [0] * (t_size - len(table))
    claim = LookupClaim(tuple(c.commitment for c in columns), n_rows, size, table)
    _header(transcript, claim, t_size)
    e_vec = CommittedVector.create(key, e, rng, size=t_size)
    transcript.absorb_point(b"lookup/e", e_vec.point)
    r, alpha, T_fold = _fold_challenges(transcript, f, t_rows)
    S_fold = fold_rows(f, [tuple(c.values[j] for c in columns) for j in range(size)], r)
    inv_S = f.batch_inv([(alpha + s) % p for s in S_fold[:n_rows]])
    h_S = CommittedVector.create(key, inv_S, rng, size=size)
    inv_T = f.batch_inv([(alpha + t) % p for t in T_fold])
    h_T = CommittedVector.create(key, [ei * iv % p for ei, iv in zip(e, inv_T)], rng, size=t_size)
    sigma = sum(h_S.values) % p
    transcript.absorb_point(b"lookup/hS", h_S.point)
    transcript.absorb_point(b"lookup/hT", h_T.point)
    transcript.absorb_scalars(b"lookup/sigma", [sigma])
    rho = transcript.challenge(b"lookup/rho")

    nv = log2_exact(size)
    u = transcript.challenges(b"lookup/u", nv)
    sel = [1] * n_rows + [0] * (size - n_rows)
    inst = SumCheckInstance(
        f,
        (
            MultilinearPoly(f, nv, tuple(eq_table(f, u))),
            MultilinearPoly(f, nv, h_S.values),
            MultilinearPoly(f, nv, tuple(sel)),
            *(MultilinearPoly(f, nv, c.values) for c in columns),
        ),
        _witness_terms(f, len(columns), r, alpha, rho),
        sigma,
    )
    side_S = sumcheck_prove(inst, transcript, rng, [None, h_S.opening(key), None, *(c.opening(key) for c in columns)])

    nt = log2_exact(t_size)
    v = transcript.challenges(b"lookup/v", nt)
    inst = SumCheckInstance(
        f,
        (
            MultilinearPoly(f, nt, tuple(eq_table(f, v))),
            MultilinearPoly(f, nt, h_T.values),
            MultilinearPoly(f, nt, e_vec.values),
            MultilinearPoly(f, nt, tuple(T_fold)),
        ),
        _table_terms(f, alpha, rho),
        sigma,
    )
    side_T = sumcheck_prove(inst, transcript, rng, [None, h_T.opening(key), e_vec.opening(key), None])
    return LookupProof(e_vec.point, h_S.point, h_T.point, sigma, side_S, side_T)


def verify_lookup(key: CommitKey, claim: LookupClaim, proof: LookupProof, transcript: Transcript) -> SumCheckResult:
    f = key.field
    p = f.modulus
    size = claim.size
    if len(claim.columns) != claim.table.width or not 0 <= claim.n_rows <= size:
        return SumCheckResult(False, "lookup shape")
    t_rows = _padded_table_rows(claim.table)
    t_size = len(t_rows)
    _header(transcript, claim, t_size)
    transcript.absorb_point(b"lookup/e", proof.c_e)
    r, alpha, T_fold = _fold_challenges(transcript, f, t_rows)
    transcript.absorb_point(b"lookup/hS", proof.c_hS)
    transcript.absorb_point(b"lookup/hT", proof.c_hT)
    transcript.absorb_scalars(b"lookup/sigma", [proof.sigma])
    rho = transcript.challenge(b"lookup/rho")

    nv = log2_exact(size)
    u = transcript.challenges(b"lookup/u", nv)
    sel = [1] * claim.n_rows + [0] * (size - claim.n_rows)
    res = sumcheck_verify(
        proof.sigma,
        proof.witness_side,
        transcript,
        field=f,
        num_vars=nv,
        terms=_witness_terms(f, len(claim.columns), r, alpha, rho),
        checks=[
            Public(lambda pt: lagrange_basis(f, u, pt)),
            Committed(key, PedersenCommitment(proof.c_hS, size)),
            Public(lambda pt: fold_evaluate(f, sel, pt)),
            *(Committed(key, c) for c in claim.columns),
        ],
    )
    if not res:
        return SumCheckResult(False, f"lookup witness side: {res.reason}")
    nt = log2_exact(t_size)
    v = transcript.challenges(b"lookup/v", nt)
    res = sumcheck_verify(
        proof.sigma,
        proof.table_side,
        transcript,
        field=f,
        num_vars=nt,
        terms=_table_terms(f, alpha, rho),
        checks=[
            Public(lambda pt: lagrange_basis(f, v, pt)),
            Committed(key, PedersenCommitment(proof.c_hT, t_size)),
            Committed(key, PedersenCommitment(proof.c_e, t_size)),
            Public(lambda pt: fold_evaluate(f, T_fold, pt)),
        ],
    )
    if not res:
        return SumCheckResult(False, f"lookup table side: {res.reason}")
    return res
