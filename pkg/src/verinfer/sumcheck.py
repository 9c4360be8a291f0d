"""Sum-check protocol for H = sum over {0,1}^v of g, where g is a sum of products of
multilinear factors.

Round polynomials travel as their values at X = 0..deg.  After the last round the
prover states each factor's value at the challenge point; committed factors are
then opened with :func:`verinfer.commit.prove_mle_eval`, public factors are
recomputed by the verifier, derived factors are recombined from the others.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .algebra import PrimeField
from .commit import CommitKey, EvalProof, PedersenCommitment, prove_mle_eval, verify_mle_eval
from .encoding import Reader, Writer
from .errors import DegreeExceeded, DimensionMismatch
from .poly import MultilinearPoly, eval_from_points
from .rand import Csprng
from .transcript import Transcript

MAX_FACTORS_PER_TERM = 4  # three witness factors plus an eq factor

Term = tuple[int, tuple[int, ...]]


@dataclass(frozen=True)
class SumCheckInstance:
    """``g(b) = sum_t coeff_t * prod_{k in t} factors[k](b)`` and the claimed sum."""

    field: PrimeField
    factors: tuple[MultilinearPoly, ...]
    terms: tuple[Term, ...]
    claim: int

    def __post_init__(self):
        if not self.factors:
            raise DimensionMismatch("no factors")
        nv = {f.num_vars for f in self.factors}
        if len(nv) != 1:
            raise DimensionMismatch("factors disagree on the number of variables")
        for _, idx in self.terms:
            if len(idx) > MAX_FACTORS_PER_TERM:
                raise DegreeExceeded("term has too many factors")
            if any(not 0 <= k < len(self.factors) for k in idx):
                raise DimensionMismatch("term references a missing factor")

    @property
    def num_vars(self) -> int:
        return self.factors[0].num_vars

    @property
    def degree(self) -> int:
        return max((len(idx) for _, idx in self.terms), default=0)

    def hypercube_sum(self) -> int:
        return hypercube_sum(self.field, [f.evals for f in self.factors], self.terms)


def hypercube_sum(field: PrimeField, tables: Sequence[Sequence[int]], terms: Sequence[Term]) -> int:
    p = field.modulus
    total = 0
    for b in range(len(tables[0])):
        for coeff, idx in terms:
            prod = coeff
            for k in idx:
                prod = prod * tables[k][b] % p
            total += prod
    return total % p


def combine_terms(field: PrimeField, values: Sequence[int], terms: Sequence[Term]) -> int:
    p = field.modulus
    total = 0
    for coeff, idx in terms:
        prod = coeff
        for k in idx:
            prod = prod * values[k] % p
        total += prod
    return total % p


def round_polynomial(field: PrimeField, tables: Sequence[Sequence[int]], terms: Sequence[Term], degree: int) -> list[int]:
    """Values at X = 0..degree of sum over the remaining hypercube with the first variable = X."""
    p = field.modulus
    half = len(tables[0]) // 2
    los = [t[0::2] for t in tables]
    diffs = [[(hi - lo) % p for lo, hi in zip(t[0::2], t[1::2])] for t in tables]
    out = []
    for X in range(degree + 1):
        if X == 0:
            cur = los
        elif X == 1:
            cur = [t[1::2] for t in tables]
        else:
            cur = [[(lo + X * d) % p for lo, d in zip(l, dd)] for l, dd in zip(los, diffs)]
        total = 0
        for coeff, idx in terms:
            if not idx:
                total += coeff * half
                continue
            if len(idx) == 1:
                s = sum(cur[idx[0]])
            elif len(idx) == 2:
                a, b = cur[idx[0]], cur[idx[1]]
                s = sum(x * y for x, y in zip(a, b))
            elif len(idx) == 3:
                a, b, c = cur[idx[0]], cur[idx[1]], cur[idx[2]]
                s = sum(x * y % p * z for x, y, z in zip(a, b, c))
            else:
                s = 0
                for j in range(half):
                    prod = 1
                    for k in idx:
                        prod = prod * cur[k][j] % p
                    s += prod
            total += coeff * (s % p)
        out.append(total % p)
    return out


def fold(field: PrimeField, table: Sequence[int], r: int) -> list[int]:
    p = field.modulus
    return [(lo + r * (hi - lo)) % p for lo, hi in zip(table[0::2], table[1::2])]


def _shift(field: PrimeField, evals: list[int], gap: int, degree: int, rng: Csprng) -> list[int]:
    """Add k * prod (X - rho_j) with q(0) + q(1) = gap."""
    p = field.modulus
    while True:
        roots = [rng.randbelow(p) for _ in range(degree)]

        def q(x):
            acc = 1
            for rho in roots:
                acc = acc * (x - rho) % p
            return acc

        norm = (q(0) + q(1)) % p
        if norm:
            break
    k = gap * pow(norm, -1, p) % p
    out = list(evals)
    if len(out) < degree + 1:
        out += [eval_from_points(field, evals, x) for x in range(len(out), degree + 1)]
    return [(y + k * q(x)) % p for x, y in enumerate(out)]


# ---------------------------------------------------------------------------
# factor descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Opening:
    """Prover side of a committed factor: the full committed table and its blind.

    ``point_map`` sends the sum-check point to the evaluation point of the committed
    table (the factor may be a restriction of a larger committed tensor).
    """

    key: CommitKey
    values: tuple[int, ...]
    blind: int
    commitment: PedersenCommitment
    point_map: Callable[[list[int]], list[int]] = list


@dataclass(frozen=True)
class Committed:
    key: CommitKey
    commitment: PedersenCommitment
    point_map: Callable[[list[int]], list[int]] = list


@dataclass(frozen=True)
class Public:
    evaluate: Callable[[list[int]], int]


@dataclass(frozen=True)
class Derived:
    """Value is a function of the point and of the other factors' claimed values."""

    evaluate: Callable[[list[int], list[int]], int]


# ---------------------------------------------------------------------------
# proof object
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SumCheckProof:
    round_evals: tuple[tuple[int, ...], ...]
    challenges: tuple[int, ...]
    final_value: int
    factor_evals: tuple[int, ...]
    openings: tuple[EvalProof, ...]

    @property
    def num_rounds(self) -> int:
        return len(self.round_evals)

    def write(self, w: Writer, field: PrimeField) -> None:
        w.u32(len(self.round_evals))
        for evals in self.round_evals:
            w.scalars(field, evals)
        w.scalars(field, self.challenges)
        w.scalar(field, self.final_value)
        w.scalars(field, self.factor_evals)
        w.u32(len(self.openings))
        for op in self.openings:
            op.write(w, field)

    @classmethod
    def read(cls, r: Reader, curve) -> SumCheckProof:
        f = curve.scalar_field
        rounds = tuple(tuple(r.scalars(f)) for _ in range(r.count()))
        challenges = tuple(r.scalars(f))
        final_value = r.scalar(f)
        factor_evals = tuple(r.scalars(f))
        openings = tuple(EvalProof.read(r, curve) for _ in range(r.count()))
        return cls(rounds, challenges, final_value, factor_evals, openings)


@dataclass(frozen=True)
class SumCheckResult:
    ok: bool
    reason: str = ""
    point: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


# ---------------------------------------------------------------------------
# prover / verifier
# ---------------------------------------------------------------------------


def _absorb_header(tr: Transcript, claim: int, num_vars: int, degree: int) -> None:
    tr.absorb(b"sc/shape", num_vars.to_bytes(4, "big") + degree.to_bytes(4, "big"))
    tr.absorb_scalars(b"sc/claim", [claim])


def sumcheck_prove(
    instance: SumCheckInstance,
    transcript: Transcript,
    rng: Csprng | None = None,
    sources: Sequence[Opening | None] | None = None,
) -> SumCheckProof:
    """Run the prover on ``instance.claim``.

    The claim is not checked.  When it is false the prover behaves like the best
    generic cheater: each round polynomial is shifted so the running check passes,
    by a polynomial of full degree with random roots, and the discrepancy carries
    into the next round.  The verifier then accepts only if some challenge lands on
    one of those roots, which is what soundness harnesses measure.
    """
    f = instance.field
    p = f.modulus
    degree = instance.degree
    v = instance.num_vars
    _absorb_header(transcript, instance.claim, v, degree)
    tables = [list(fac.evals) for fac in instance.factors]
    rounds = []
    challenges = []
    expected = instance.claim % p
    cheat_rng = None
    for _ in range(v):
        evals = round_polynomial(f, tables, instance.terms, degree)
        gap = (expected - evals[0] - evals[1]) % p
        if gap:
            cheat_rng = cheat_rng or rng or Csprng(b"sumcheck/dishonest")
            evals = _shift(f, evals, gap, max(degree, 1), cheat_rng)
        transcript.absorb_scalars(b"sc/round", evals)
        r = transcript.challenge(b"sc/r")
        rounds.append(tuple(evals))
        challenges.append(r)
        expected = eval_from_points(f, evals, r)
        tables = [fold(f, t, r) for t in tables]
    factor_evals = tuple(t[0] for t in tables)
    final_value = expected if v else combine_terms(f, factor_evals, instance.terms)
    transcript.absorb_scalars(b"sc/final", factor_evals)
    openings = []
    if sources is not None:
        if len(sources) != len(instance.factors):
            raise DimensionMismatch("one source per factor expected")
        if rng is None:
            raise ValueError("openings need prover randomness")
        point = list(challenges)
        for src in sources:
            if src is None:
                continue
            openings.append(
                prove_mle_eval(src.key, src.values, src.blind, src.commitment, src.point_map(point), transcript, rng)
            )
    return SumCheckProof(tuple(rounds), tuple(challenges), final_value, factor_evals, tuple(openings))


def sumcheck_verify(
    claim: int,
    proof: SumCheckProof,
    transcript: Transcript,
    *,
    field: PrimeField,
    num_vars: int,
    terms: Sequence[Term],
    checks: Sequence[Committed | Public | Derived | None] | None = None,
    num_factors: int | None = None,
) -> SumCheckResult:
    """Check every round, then the final value against the factor checks.

    A ``None`` check (or ``checks=None``) trusts the prover's stated factor value;
    only harnesses that test the round logic in isolation should do that.
    ``num_factors`` defaults to the length of ``checks`` or, failing that, to one
    past the highest factor index the terms mention.
    """
    p = field.modulus
    degree = max((len(idx) for _, idx in terms), default=0)
    if proof.num_rounds != num_vars or len(proof.challenges) != num_vars:
        return SumCheckResult(False, "round count")
    _absorb_header(transcript, claim, num_vars, degree)
    expected = claim % p
    for i, evals in enumerate(proof.round_evals):
        if len(evals) != degree + 1:
            return SumCheckResult(False, f"round {i + 1} degree")
        if (evals[0] + evals[1]) % p != expected:
            return SumCheckResult(False, f"round {i + 1} sum")
        transcript.absorb_scalars(b"sc/round", evals)
        r = transcript.challenge(b"sc/r")
        if r != proof.challenges[i]:
            return SumCheckResult(False, f"round {i + 1} challenge")
        expected = eval_from_points(field, evals, r)
    point = list(proof.challenges)
    n_factors = 1 + max((k for _, idx in terms for k in idx), default=-1)
    if num_factors is not None:
        n_factors = num_factors
    elif checks is not None:
        n_factors = max(n_factors, len(checks))
    if len(proof.factor_evals) != n_factors:
        return SumCheckResult(False, "factor count")
    if proof.final_value != expected:
        return SumCheckResult(False, "final value")
    if combine_terms(field, proof.factor_evals, terms) != expected:
        return SumCheckResult(False, "final evaluation")
    transcript.absorb_scalars(b"sc/final", proof.factor_evals)
    if checks is None:
        return SumCheckResult(True, point=tuple(point))
    if len(checks) != n_factors:
        return SumCheckResult(False, "factor checks")
    expected_openings = sum(isinstance(c, Committed) for c in checks)
    if len(proof.openings) != expected_openings:
        return SumCheckResult(False, "opening count")
    evals = list(proof.factor_evals)
    op_iter = iter(proof.openings)
    for k, chk in enumerate(checks):
        if chk is None:
            continue
        if isinstance(chk, Public):
            if chk.evaluate(point) % p != evals[k]:
                return SumCheckResult(False, f"public factor {k}")
        elif isinstance(chk, Derived):
            if chk.evaluate(point, evals) % p != evals[k]:
                return SumCheckResult(False, f"derived factor {k}")
        elif isinstance(chk, Committed):
            op = next(op_iter)
            if op.value != evals[k]:
                return SumCheckResult(False, f"opening value {k}")
            if not verify_mle_eval(chk.key, chk.commitment, chk.point_map(point), op, transcript):
                return SumCheckResult(False, f"opening {k}")
        else:
            raise TypeError(f"unknown factor check {chk!r}")
    return SumCheckResult(True, point=tuple(point))
