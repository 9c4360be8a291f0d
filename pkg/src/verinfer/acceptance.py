"""Executable acceptance checks.

Each ``criterion_N`` runs one scenario at its stated size and tolerance and
returns a :class:`CriterionResult`.  The pytest suite and ``verinfer acceptance``
both call these, so a CLI run and a test run exercise identical code.
"""

from __future__ import annotations

import contextlib
import dataclasses
import io
import itertools
import math
import random
import tempfile
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .algebra import get_profile
from .commit import (
    CommitKey,
    OpeningProof,
    commit_scalar,
    commit_vector,
    extract_witness,
    inner,
    prove_opening,
    verify_opening,
)
from .consensus import (
    AMBIGUOUS,
    VERIFIED,
    ConsensusConfig,
    DistributionStats,
    Replica,
    canonical,
    cdv_check,
    decide,
    reconstruct,
    run_redundant,
)
from .errors import EntryNotInTable, MalformedProof
from .gadgets import (
    CommittedVector,
    LookupClaim,
    LookupTable,
    MatMulClaim,
    ReluClaim,
    decompose,
    matmul,
    multiplicities,
    prove_lookup,
    prove_matmul,
    prove_relu,
    relu,
    verify_lookup,
    verify_matmul,
    verify_relu,
)
from .gadgets.lookup import rational_identity
from .model import (
    ShardPlan,
    fixture_model,
    forward,
    privatize_embedding,
    random_input,
    random_mlp,
    run_plan,
    split_forward,
    tiny_model,
)
from .poly import MultilinearPoly, to_bits
from .rand import Csprng
from .sumcheck import SumCheckInstance, sumcheck_prove, sumcheck_verify
from .transcript import Transcript
from .zkdps import (
    ActivationOpening,
    ShardProof,
    check_opening,
    commit_shard,
    commit_tensor,
    prove_shard,
    restore_witness,
    setup_key,
    verify_chain,
    verify_shard,
)


@dataclass
class CriterionResult:
    number: int
    title: str
    ok: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"AC{self.number:<2} {'PASS' if self.ok else 'FAIL'}  {self.title}: {self.detail} [{self.seconds:.1f}s]"


def _result(number: int, title: str, t0: float, checks: dict[str, bool], detail: str) -> CriterionResult:
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        detail = f"{detail}; failed: {', '.join(failed)}"
    return CriterionResult(number, title, not failed, detail, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# 1. commitment opening: completeness and soundness
# ---------------------------------------------------------------------------


def _mutate(proof: OpeningProof, which: int, key: CommitKey, rng: Csprng) -> OpeningProof:
    curve = key.curve
    p = curve.order
    delta = 1 + rng.randbelow(p - 1)
    fields = ["S_prime", "r_S_prime", "r_t_prime", "e", "c_D", "c_Dy"]
    name = fields[which % len(fields)]
    if name == "S_prime":
        S = list(proof.S_prime)
        i = rng.randbelow(len(S))
        S[i] = (S[i] + delta) % p
        return dataclasses.replace(proof, S_prime=tuple(S))
    if name in ("c_D", "c_Dy"):
        return dataclasses.replace(proof, **{name: getattr(proof, name) + curve.scalar_mul(key.h, delta)})
    return dataclasses.replace(proof, **{name: (getattr(proof, name) + delta) % p})


def criterion_1(rounds: int = 1000, dim: int = 4) -> CriterionResult:
    t0 = time.perf_counter()
    curve = get_profile("main")
    f = curve.scalar_field
    key = CommitKey.setup(curve, dim)
    rng = Csprng(b"acceptance/1")
    honest = rejected = 0
    for k in range(rounds):
        S = [rng.randbelow(f.modulus) for _ in range(dim)]
        y = [rng.randbelow(f.modulus) for _ in range(dim)]
        r_S, r_t = rng.randbelow(f.modulus), rng.randbelow(f.modulus)
        t = inner(f, S, y)
        c_S, c_t = commit_vector(key, S, r_S), commit_scalar(key, t, r_t)
        proof = prove_opening(key, S, r_S, t, r_t, y, Transcript(f, b"ac1"), rng, c_S=c_S, c_t=c_t)
        honest += verify_opening(key, c_S, c_t, y, proof, Transcript(f, b"ac1"))
        bad = _mutate(proof, k, key, rng)
        rejected += not verify_opening(key, c_S, c_t, y, bad, Transcript(f, b"ac1"))
    seconds = time.perf_counter() - t0
    return _result(
        1,
        "commitment opening on MAIN",
        t0,
        {"honest": honest == rounds, "mutations": rejected == rounds, "runtime": seconds <= 60},
        f"{honest}/{rounds} honest accepted, {rounds - rejected}/{rounds} mutations accepted, {seconds:.1f}s (limit 60s)",
    )


# ---------------------------------------------------------------------------
# 2. special-soundness extraction
# ---------------------------------------------------------------------------


def criterion_2(witnesses: int = 100, dim: int = 8) -> CriterionResult:
    t0 = time.perf_counter()
    curve = get_profile("main")
    f = curve.scalar_field
    key = CommitKey.setup(curve, dim)
    rng = Csprng(b"acceptance/2")
    exact = accepted = 0
    for k in range(witnesses):
        S = [rng.randbelow(f.modulus) for _ in range(dim)]
        y = [rng.randbelow(f.modulus) for _ in range(dim)]
        r_S, r_t = rng.randbelow(f.modulus), rng.randbelow(f.modulus)
        t = inner(f, S, y)
        c_S, c_t = commit_vector(key, S, r_S), commit_scalar(key, t, r_t)
        proofs = []
        # rewind: same prover coins, two verifier challenge streams
        for stream in (0, 1):
            coins = rng.fork(f"prover/{k}")
            tr = Transcript.interactive(f, b"ac2", (k, stream))
            proofs.append(prove_opening(key, S, r_S, t, r_t, y, tr, coins, c_S=c_S, c_t=c_t))
            accepted += verify_opening(key, c_S, c_t, y, proofs[-1], Transcript.interactive(f, b"ac2", (k, stream)))
        if proofs[0].e == proofs[1].e:
            continue
        S_x, rS_x, rt_x = extract_witness(f, proofs[0], proofs[1])
        exact += S_x == S and rS_x == r_S and rt_x == r_t
    return _result(
        2,
        "witness extraction",
        t0,
        {"accepted": accepted == 2 * witnesses, "extracted": exact == witnesses},
        f"{exact}/{witnesses} witnesses recovered exactly from {accepted} accepting transcripts",
    )


# ---------------------------------------------------------------------------
# 3. sum-check
# ---------------------------------------------------------------------------


def _random_instance(f, rng: random.Random, num_vars: int, degree: int, small: bool = False):
    n_factors = degree + rng.randint(0, 2)
    bound = 1 << 16 if small else f.modulus
    factors = tuple(
        MultilinearPoly(f, num_vars, tuple(rng.randrange(bound) % f.modulus for _ in range(1 << num_vars)))
        for _ in range(n_factors)
    )
    terms = [(rng.randrange(1, f.modulus), tuple(rng.sample(range(n_factors), degree)))]
    for _ in range(rng.randint(0, 2)):
        terms.append((rng.randrange(f.modulus), tuple(rng.sample(range(n_factors), rng.randint(1, degree)))))
    return factors, tuple(terms)


def brute_force_sum(f, factors, terms) -> int:
    """Evaluate g at each Boolean point through the MLE evaluator and add up."""
    p = f.modulus
    v = factors[0].num_vars
    total = 0
    for b in range(1 << v):
        point = list(to_bits(b, v))
        vals = [fac.evaluate(point) for fac in factors]
        for coeff, idx in terms:
            total += coeff * math.prod(vals[k] for k in idx)
    return total % p


def sumcheck_monte_carlo(trials: int, num_vars: int = 3, degree: int = 3, seed: int = 0) -> tuple[int, float]:
    """Dishonest claims on TEST with interactive challenges; returns (accepts, bound)."""
    f = get_profile("test").scalar_field
    rng = random.Random(seed)
    accepts = 0
    for s in range(trials):
        factors = tuple(MultilinearPoly(f, num_vars, tuple(rng.randrange(f.modulus) for _ in range(1 << num_vars))) for _ in range(degree))
        terms = ((1, tuple(range(degree))),)
        H = SumCheckInstance(f, factors, terms, 0).hypercube_sum()
        wrong = (H + rng.randrange(1, f.modulus)) % f.modulus
        inst = SumCheckInstance(f, factors, terms, wrong)
        proof = sumcheck_prove(inst, Transcript.interactive(f, b"ac3/mc", (seed, s)), Csprng(("cheater", seed, s)))
        res = sumcheck_verify(wrong, proof, Transcript.interactive(f, b"ac3/mc", (seed, s)), field=f, num_vars=num_vars, terms=terms)
        accepts += res.ok
    return accepts, degree * num_vars / f.modulus


def criterion_3(instances: int = 200, trials: int = 100_000) -> CriterionResult:
    t0 = time.perf_counter()
    rng = random.Random(3)
    f = get_profile("main").scalar_field
    matches = honest_ok = cheats_rejected = 0
    for k in range(instances):
        v = rng.randint(1, 10)
        d = rng.randint(1, 3)
        factors, terms = _random_instance(f, rng, v, d)
        H = brute_force_sum(f, factors, terms)
        inst = SumCheckInstance(f, factors, terms, H)
        matches += inst.hypercube_sum() == H
        proof = sumcheck_prove(inst, Transcript(f, b"ac3"))
        honest_ok += sumcheck_verify(H, proof, Transcript(f, b"ac3"), field=f, num_vars=v, terms=terms, num_factors=len(factors)).ok
        delta = rng.randrange(1, f.modulus)
        bad = SumCheckInstance(f, factors, terms, (H + delta) % f.modulus)
        proof = sumcheck_prove(bad, Transcript(f, b"ac3"), Csprng(("ac3", k)))
        res = sumcheck_verify(bad.claim, proof, Transcript(f, b"ac3"), field=f, num_vars=v, terms=terms, num_factors=len(factors))
        cheats_rejected += not res.ok
    accepts, bound = sumcheck_monte_carlo(trials)
    rate = accepts / trials
    sigma = math.sqrt(bound * (1 - bound) / trials)
    limit = bound + 3 * sigma
    return _result(
        3,
        "sum-check",
        t0,
        {
            "brute force": matches == instances,
            "honest": honest_ok == instances,
            "dishonest MAIN": cheats_rejected == instances,
            "false-accept rate": rate <= limit,
        },
        f"{matches}/{instances} sums match brute force, {honest_ok} honest accepted, "
        f"{instances - cheats_rejected} H+delta accepted on MAIN; TEST false-accept {accepts}/{trials} = {rate:.2e} "
        f"(limit dv/|F| + 3 sigma = {limit:.2e})",
    )


# ---------------------------------------------------------------------------
# 4. matrix product
# ---------------------------------------------------------------------------


def criterion_4(pairs: int = 100, sizes=(2, 4, 8, 16)) -> CriterionResult:
    t0 = time.perf_counter()
    curve = get_profile("main")
    f = curve.scalar_field
    key = CommitKey.setup(curve, max(sizes) ** 2)
    rng = Csprng(b"acceptance/4")
    R = random.Random(4)
    agree = total = corrupt_rejected = 0
    for n in sizes:
        for _ in range(pairs):
            A = [[R.randint(-128, 127) for _ in range(n)] for _ in range(n)]
            B = [[R.randint(-128, 127) for _ in range(n)] for _ in range(n)]
            C = matmul(A, B)
            vec = lambda M: CommittedVector.create(key, [v for row in M for v in row], rng)  # noqa: E731
            cA, cB = vec(A), vec(B)
            # honest product
            cC = vec(C)
            proof = prove_matmul(key, cA, cB, cC, (n, n, n), Transcript(f, b"ac4"), rng)
            ok = verify_matmul(key, MatMulClaim(cA.commitment, cB.commitment, cC.commitment, (n, n, n)), proof, Transcript(f, b"ac4")).ok
            naive = [[sum(A[i][k] * B[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
            agree += ok == (C == naive)
            # one corrupted entry
            bad = [row[:] for row in C]
            i, j = R.randrange(n), R.randrange(n)
            bad[i][j] += R.choice([-1, 1]) * R.randint(1, 1000)
            cX = vec(bad)
            proof = prove_matmul(key, cA, cB, cX, (n, n, n), Transcript(f, b"ac4"), rng)
            ok = verify_matmul(key, MatMulClaim(cA.commitment, cB.commitment, cX.commitment, (n, n, n)), proof, Transcript(f, b"ac4")).ok
            agree += ok == (bad == naive)
            corrupt_rejected += not ok
            total += 2
    return _result(
        4,
        "matrix product",
        t0,
        {"iff": agree == total, "corruptions": corrupt_rejected == total // 2},
        f"accept iff C = AB in {agree}/{total} proofs over n in {list(sizes)}; {corrupt_rejected}/{total // 2} corrupted C rejected",
    )


# ---------------------------------------------------------------------------
# 5. ReLU
# ---------------------------------------------------------------------------


def _relu_round(key, f, z_vals, Q, rng, bits=None, a_vals=None) -> tuple[list[int], bool]:
    n = len(z_vals)
    z = CommittedVector.create(key, z_vals, rng, size=n)
    a = None if a_vals is None else CommittedVector.create(key, a_vals, rng, size=n)
    a, proof = prove_relu(key, z, Q, Transcript(f, b"ac5"), rng, a=a, bits=bits)
    ok = verify_relu(key, ReluClaim(z.commitment, a.commitment, n, Q), proof, Transcript(f, b"ac5")).ok
    return [f.signed(v) for v in a.values], ok


def _violations(z_vals: list[int], Q: int, j: int, R: random.Random) -> dict[str, list[list[int]]]:
    """Bit rows for element ``j`` that break booleanity and recomposition respectively.

    The non-boolean row keeps the weighted magnitude intact, so only booleanity fails.
    """
    honest = [decompose(v, Q) for v in z_vals]
    nonbool = [row[:] for row in honest]
    r = nonbool[j]
    set_bits = [k for k in range(1, Q) if r[k] == 1]
    if set_bits:
        # 2^(Q-k) == 2 * 2^(Q-k-1)
        k = set_bits[0]
        r[k] -= 1
        r[k + 1] += 2
    else:
        # magnitude 0 or 1: 2 - 2 == 0 on the two lowest bits
        r[Q - 1] += 1
        r[Q] -= 2
    recomp = [row[:] for row in honest]
    recomp[j][R.randint(1, Q)] ^= 1
    return {"booleanity": nonbool, "recomposition": recomp}


def criterion_5(random_tensors: int = 1000, n: int = 2) -> CriterionResult:
    t0 = time.perf_counter()
    curve = get_profile("main")
    f = curve.scalar_field
    key = CommitKey.setup(curve, max(n, 2))
    rng = Csprng(b"acceptance/5")
    R = random.Random(5)
    stats = Counter()
    # exhaustive at Q = 4: every z in (-16, 16)
    for z in range(-15, 16):
        vals = [z, R.randint(-15, 15)]
        a, ok = _relu_round(key, f, vals, 4, rng)
        stats["q4 oracle"] += a == relu(vals)
        stats["q4 honest"] += ok
        for kind, bits in _violations(vals, 4, 0, R).items():
            _, ok = _relu_round(key, f, vals, 4, rng, bits=bits)
            stats[f"q4 {kind}"] += not ok
        # claimed output z itself for negative z, z + 1 otherwise
        wrong = [z if z < 0 else z + 1, max(0, vals[1])]
        _, ok = _relu_round(key, f, vals, 4, rng, a_vals=wrong)
        stats["q4 wrong output"] += not ok
    # random tensors at Q = 32
    lim = (1 << 32) - 1
    for k in range(random_tensors):
        vals = [R.randint(-lim, lim) for _ in range(n)]
        a, ok = _relu_round(key, f, vals, 32, rng)
        stats["q32 oracle"] += a == relu(vals)
        stats["q32 honest"] += ok
        kind = "booleanity" if k % 2 == 0 else "recomposition"
        _, ok = _relu_round(key, f, vals, 32, rng, bits=_violations(vals, 32, R.randrange(n), R)[kind])
        stats[f"q32 {kind}"] += not ok
    half = random_tensors // 2
    expect = {
        "q4 oracle": 31, "q4 honest": 31, "q4 booleanity": 31, "q4 recomposition": 31, "q4 wrong output": 31,
        "q32 oracle": random_tensors, "q32 honest": random_tensors,
        "q32 booleanity": random_tensors - half, "q32 recomposition": half,
    }
    checks = {name: stats[name] == want for name, want in expect.items()}
    return _result(
        5,
        "ReLU",
        t0,
        checks,
        ", ".join(f"{name} {stats[name]}/{want}" for name, want in expect.items()),
    )


# ---------------------------------------------------------------------------
# 6. lookup
# ---------------------------------------------------------------------------


def _random_table(R: random.Random, k: int) -> LookupTable:
    size = R.randint(3, 20)
    width = 1 + k % 2
    rows = set()
    while len(rows) < size:
        rows.add(tuple(R.randint(-500, 500) for _ in range(width)))
    return LookupTable("random", (k,), 1, width - 1, tuple(sorted(rows)))


def criterion_6(instances: int = 100, points: int = 100) -> CriterionResult:
    t0 = time.perf_counter()
    curve = get_profile("main")
    f = curve.scalar_field
    p = f.modulus
    key = CommitKey.setup(curve, 32)
    rng = Csprng(b"acceptance/6")
    R = random.Random(6)
    stats = Counter()
    for k in range(instances):
        T = _random_table(R, k)
        n_rows = R.randint(1, 16)
        S = [R.choice(T.rows) for _ in range(n_rows)]
        size = 1 << max(1, (n_rows - 1).bit_length())
        e = multiplicities(T, S)
        oracle = Counter(S)
        stats["multiplicities"] += e == [oracle[row] for row in T.rows]
        cols = [CommittedVector.create(key, [row[c] for row in S], rng, size=size) for c in range(T.width)]
        claim = LookupClaim(tuple(c.commitment for c in cols), n_rows, size, T)
        proof = prove_lookup(key, T, cols, n_rows, Transcript(f, b"ac6"), rng)
        stats["honest"] += verify_lookup(key, claim, proof, Transcript(f, b"ac6")).ok
        # rational-function identity at random X
        S_f = [row[0] % p for row in S] if T.width == 1 else None
        T_f = [row[0] % p for row in T.rows] if T.width == 1 else None
        if T.width > 1:
            r = rng.randbelow(p)
            S_f = [(row[0] + r * row[1]) % p for row in S]
            T_f = [(row[0] + r * row[1]) % p for row in T.rows]
        good = 0
        for _ in range(points):
            X = rng.randbelow(p)
            while any((X + s) % p == 0 for s in S_f + T_f):
                X = rng.randbelow(p)
            lhs, rhs = rational_identity(f, S_f, T_f, e, X)
            good += lhs == rhs
        stats["identity"] += good == points
        # a row outside the table
        outsider = tuple(v + 1000 for v in T.rows[0])
        j = R.randrange(n_rows)
        S_bad = S[:j] + [outsider] + S[j + 1 :]
        cols = [CommittedVector.create(key, [row[c] for row in S_bad], rng, size=size) for c in range(T.width)]
        claim = LookupClaim(tuple(c.commitment for c in cols), n_rows, size, T)
        try:
            prove_lookup(key, T, cols, n_rows, Transcript(f, b"ac6"), rng)
        except EntryNotInTable:
            stats["honest prover refuses"] += 1
        hint = multiplicities(T, [row for row in S_bad if row != outsider])
        forged = prove_lookup(key, T, cols, n_rows, Transcript(f, b"ac6"), rng, multiplicities_hint=hint)
        stats["out of table rejected"] += not verify_lookup(key, claim, forged, Transcript(f, b"ac6")).ok
    checks = {name: stats[name] == instances for name in ("multiplicities", "honest", "identity", "honest prover refuses", "out of table rejected")}
    return _result(
        6,
        "lookup",
        t0,
        checks,
        ", ".join(f"{name} {stats[name]}/{instances}" for name in checks) + f" (identity at {points} X each)",
    )


# ---------------------------------------------------------------------------
# 7. end-to-end proofs
# ---------------------------------------------------------------------------


def byte_flip_sweep(profile: str = "test", model=None, seed: int = 0, limit: int | None = None) -> tuple[int, int, int]:
    """XOR every byte of a small shard proof with 0xFF; returns (flips, accepted, proof size)."""
    curve = get_profile(profile)
    model = model or tiny_model(seed)
    key = setup_key(curve, model)
    rng = Csprng(("sweep", seed))
    public, witness = commit_shard(key, model, rng.fork("weights"))
    x = random_input(model, random.Random(seed))
    out = prove_shard(key, model, witness, x, rng.fork("prove"))
    blob = out.proof.to_bytes(curve)
    positions = range(len(blob)) if limit is None else sorted(random.Random(seed).sample(range(len(blob)), min(limit, len(blob))))
    accepted = 0
    for i in positions:
        mutated = blob[:i] + bytes([blob[i] ^ 0xFF]) + blob[i + 1 :]
        try:
            rep = verify_shard(key, model, public, mutated, c_in=out.proof.c_in)
        except MalformedProof:
            continue
        accepted += rep.ok
    return len(positions), accepted, len(blob)


def criterion_7(prover_limit: float = 60.0, verifier_limit: float = 5.0) -> CriterionResult:
    t0 = time.perf_counter()
    curve = get_profile("main")
    model = fixture_model(0)
    key = setup_key(curve, model)
    rng = Csprng(b"acceptance/7")
    public, witness = commit_shard(key, model, rng.fork("weights"))
    x = random_input(model, random.Random(7))
    out = prove_shard(key, model, witness, x, rng.fork("prove"))
    blob = out.proof.to_bytes(curve)
    rep = verify_chain(key, model, public, [blob], out.input_opening, out.output_opening)
    y_ref, _ = forward(model, x)
    checks = {
        "honest": rep.ok and out.output == y_ref,
        "prover time": out.seconds <= prover_limit,
        "verifier time": rep.verifier_seconds <= verifier_limit,
    }
    # weight changed after commitment: the prover recommits, the published commitments disagree
    layer = model.layer(1)
    W = [list(r) for r in layer.weights]
    W[0][0] += 1
    tampered = dataclasses.replace(model, layers=(dataclasses.replace(layer, weights=tuple(map(tuple, W))),) + model.layers[1:])
    forged_w = restore_witness(key, tampered, witness.blinds())
    forged = prove_shard(key, tampered, forged_w, x, rng.fork("forge"))
    checks["weight tamper"] = not verify_shard(key, model, public, forged.proof.to_bytes(curve)).ok
    # activation replaced in the proof by a commitment to different values
    act_rejected = 0
    _, trace = forward(model, x)
    for idx, lp in enumerate(out.proof.layers):
        vals = list(trace.layer_output(lp.index))
        vals[0] += 1
        other = commit_tensor(key, [v % curve.order for v in vals], rng.randbelow(curve.order))
        layers = list(out.proof.layers)
        layers[idx] = dataclasses.replace(lp, c_out=other.point)
        last = idx == len(layers) - 1
        bad = dataclasses.replace(out.proof, layers=tuple(layers), c_out=other.point if last else out.proof.c_out)
        act_rejected += not verify_shard(key, model, public, bad.to_bytes(curve)).ok
    checks["activation tamper"] = act_rejected == len(out.proof.layers)
    # claimed output or input differing from the committed one
    y_bad = ActivationOpening(tuple(v + 1 if i == 0 else v for i, v in enumerate(out.output)), out.output_opening.blind)
    x_bad = ActivationOpening(tuple(v + 1 if i == 0 else v for i, v in enumerate(x)), out.input_opening.blind)
    checks["output opening"] = not verify_chain(key, model, public, [blob], out.input_opening, y_bad).ok
    checks["input opening"] = not verify_chain(key, model, public, [blob], x_bad, out.output_opening).ok
    flips, accepted, size = byte_flip_sweep("test")
    checks["byte flips"] = accepted == 0
    return _result(
        7,
        "end-to-end shard proof on MAIN",
        t0,
        checks,
        f"prove {out.seconds:.2f}s (limit {prover_limit:.0f}s), verify {rep.verifier_seconds:.2f}s (limit {verifier_limit:.0f}s), "
        f"proof {len(blob)} bytes; {act_rejected}/{len(out.proof.layers)} activation swaps rejected; "
        f"byte-flip sweep {accepted}/{flips} accepted on a {size}-byte TEST proof",
    )


# ---------------------------------------------------------------------------
# 8. shard composition and consensus
# ---------------------------------------------------------------------------


def criterion_8(plans: int = 20, replicas: int = 5, max_faulty: int = 2) -> CriterionResult:
    t0 = time.perf_counter()
    model = fixture_model(0)
    R = random.Random(8)
    equal = 0
    for k in range(plans):
        x = random_input(model, R)
        plan = ShardPlan.random(model.num_layers, R)
        equal += run_plan(model, plan, x) == forward(model, x)[0]
    x = random_input(model, R)
    honest = canonical(forward(model, x)[0])
    patterns = correct = 0
    nodes = [f"n{i}" for i in range(replicas)]
    for faulty_count in range(max_faulty + 1):
        for faulty in itertools.combinations(nodes, faulty_count):
            for kinds in itertools.product(("random", "collude", "garbage"), repeat=faulty_count):
                fault = dict(zip(faulty, kinds))
                reps = [Replica(n, fault.get(n, "honest")) for n in nodes]
                outs = run_redundant(model, 1, model.num_layers, x, reps, seed=patterns)
                res = decide(outs, ConsensusConfig(redundancy=replicas))
                patterns += 1
                correct += res.status == VERIFIED and res.value == honest and set(res.dissenters) == set(faulty)
    # ties never resolve
    ties = [
        [("a", (1,)), ("b", (2,))],
        [("a", (1,)), ("b", (1,)), ("c", (2,)), ("d", (2,))],
        [("a", (1,)), ("b", (1,)), ("c", (2,)), ("d", (2,)), ("e", (3,))],
    ]
    ambiguous = sum(decide(t).status == AMBIGUOUS for t in ties)
    recon = reconstruct([decide([("a", honest), ("b", honest)])]) == forward(model, x)[0]
    return _result(
        8,
        "shard composition and consensus",
        t0,
        {"plans": equal == plans, "byzantine": correct == patterns, "ties": ambiguous == len(ties), "reconstruct": recon},
        f"{equal}/{plans} random plans bit-exact; honest output chosen in {correct}/{patterns} fault patterns "
        f"(m={replicas}, <= {max_faulty} Byzantine); {ambiguous}/{len(ties)} ties ambiguous",
    )


# ---------------------------------------------------------------------------
# 9. distribution check
# ---------------------------------------------------------------------------


def criterion_9() -> CriterionResult:
    t0 = time.perf_counter()
    ref = DistributionStats(0.0, 1.0, 100)
    near = cdv_check(DistributionStats(0.05, 1.0, 100), ref, 3.0)
    far = cdv_check(DistributionStats(0.5, 1.0, 100), ref, 3.0)
    R = np.random.default_rng(9)
    same = 0
    for _ in range(100):
        samples = R.normal(R.uniform(-5, 5), R.uniform(0.1, 3), size=int(R.integers(2, 200))).tolist()
        same += cdv_check(samples, DistributionStats.from_samples(samples), 3.0).accept
    constant = cdv_check([2.0] * 10, DistributionStats(2.0, 0.0, 10)).accept
    return _result(
        9,
        "distribution check",
        t0,
        {"0.05 accepted": near.accept, "0.5 rejected": not far.accept, "identical": same == 100 and constant},
        f"threshold {near.threshold:.3f}; mean 0.05 {'accepted' if near else 'rejected'}, mean 0.5 {'accepted' if far else 'rejected'}; "
        f"{same}/100 identical distributions accepted",
    )


# ---------------------------------------------------------------------------
# 10. split inference and noise
# ---------------------------------------------------------------------------


def criterion_10(draws: int = 100_000, epsilon: float = 1.0, sensitivity: float = 1.0, scale: int = 16) -> CriterionResult:
    t0 = time.perf_counter()
    model = random_mlp(10, [6, 8, 8, 8, 4])
    R = random.Random(10)
    x = random_input(model, R)
    y_ref = forward(model, x)[0]
    exact = 0
    for k in range(1, model.num_layers):
        Z, handle = split_forward(model, x, k)
        exact += handle.resume(Z) == y_ref
    Z, _ = split_forward(model, x, 3)
    identity = privatize_embedding(Z, math.inf, sensitivity, scale, seed=1) == tuple(Z)
    identity &= privatize_embedding(Z, epsilon, 0.0, scale, seed=1) == tuple(Z)
    noised = privatize_embedding([0] * draws, epsilon, sensitivity, scale, seed=10)
    std = float(np.std(np.asarray(noised, dtype=float) / scale))
    target = math.sqrt(2) * sensitivity / epsilon
    rel = abs(std - target) / target
    return _result(
        10,
        "split inference",
        t0,
        {"cuts": exact == model.num_layers - 1, "zero noise": identity, "noise std": rel <= 0.05},
        f"{exact}/{model.num_layers - 1} cuts bit-exact; zero-scale noise is identity: {identity}; "
        f"noise std {std:.4f} vs sqrt(2)*s/eps = {target:.4f} ({rel:.2%} off, limit 5%) over {draws} draws",
    )


# ---------------------------------------------------------------------------
# 11. network simulation
# ---------------------------------------------------------------------------


def criterion_11(messages: int = 200) -> CriterionResult:
    from .errors import AuthFailure, ReplayDetected
    from .netsim import MODP_GROUP, DhParty, NodeDescriptor, SessionConfig, dh_shared_secret, establish_channel, routing_violations, run_session

    t0 = time.perf_counter()
    checks = {"dh example": dh_shared_secret(23, 5, 6, 15) == 2}
    rng = Csprng(b"acceptance/11")
    a = DhParty("a", *MODP_GROUP.keypair(rng), attested=True)
    b = DhParty("b", *MODP_GROUP.keypair(rng), attested=True)
    ea, eb = establish_channel(a, b)
    tamper = replay = roundtrip = 0
    for k in range(messages):
        payload = rng.random_bytes(1 + rng.randbelow(64))
        frame = ea.send(payload)
        bit = rng.randbelow(len(frame) * 8)
        bad = bytearray(frame)
        bad[bit // 8] ^= 1 << (bit % 8)
        try:
            eb.recv(bytes(bad))
        except (AuthFailure, ReplayDetected):
            tamper += 1
        roundtrip += eb.recv(frame) == payload
        try:
            eb.recv(frame)
        except ReplayDetected:
            replay += 1
    checks["tamper"] = tamper == messages
    checks["replay"] = replay == messages
    checks["roundtrip"] = roundtrip == messages
    model = fixture_model(0)
    x = random_input(model, random.Random(11))
    nodes = [NodeDescriptor(f"node{i}", "gpu-class" if i < 2 else "cpu-class", 2.0 if i < 2 else 1.0, honest=i != 4) for i in range(9)]
    config = SessionConfig(seed=7, redundancy=3)
    first = run_session(model, x, nodes, config)
    second = run_session(model, x, nodes, config)
    checks["session"] = first.ok and first.output == forward(model, x)[0]
    checks["deterministic log"] = first.log() == second.log()
    direct = [r for r in first.records if r.get("kind") == "activation"]
    checks["direct activations"] = bool(direct) and not routing_violations(first.records)
    checks["byzantine flagged"] = first.flagged == ("node4",)
    return _result(
        11,
        "network simulation",
        t0,
        checks,
        f"DH(23,5,6,15) = {dh_shared_secret(23, 5, 6, 15)}; {tamper}/{messages} tampered and {replay}/{messages} replayed frames caught; "
        f"logs identical: {checks['deterministic log']}; {len(direct)} node-to-node activations, "
        f"{len(routing_violations(first.records))} via orchestrator; flagged {list(first.flagged)}",
    )


# ---------------------------------------------------------------------------
# 12. determinism and challenge modes
# ---------------------------------------------------------------------------


def criterion_12(statements: int = 5) -> CriterionResult:
    from .cli import main as cli_main

    t0 = time.perf_counter()
    checks = {}
    with tempfile.TemporaryDirectory() as tmp:
        d = Path(tmp)
        model = fixture_model(0)
        model.save(d / "model.json")
        (d / "input.txt").write_text("".join(f"{v}\n" for v in random_input(model, random.Random(12))))
        blobs = []
        for run in (1, 2):
            with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
                argv = ["prove", "--profile", "main", "--seed", "12", "--model", str(d / "model.json")]
                argv += ["--input", str(d / "input.txt"), "--out", str(d / f"proof{run}.zkdp")]
                code = cli_main(argv)
            checks[f"prove run {run}"] = code == 0
            blobs.append((d / f"proof{run}.zkdp").read_bytes())
        checks["identical containers"] = blobs[0] == blobs[1]
    curve = get_profile("main")
    model = fixture_model(0)
    key = setup_key(curve, model)
    R = random.Random(12)
    agree = 0
    for k in range(statements):
        public, witness = commit_shard(key, model, Csprng(("ac12", k)))
        x = random_input(model, R)
        out_fs = prove_shard(key, model, witness, x, Csprng(("ac12/fs", k)))
        fs = verify_shard(key, model, public, out_fs.proof.to_bytes(curve)).ok
        f = curve.scalar_field
        out_i = prove_shard(key, model, witness, x, Csprng(("ac12/i", k)), transcript=Transcript.interactive(f, b"zkdps", ("v", k)))
        inter = verify_shard(key, model, public, out_i.proof.to_bytes(curve), transcript=Transcript.interactive(f, b"zkdps", ("v", k))).ok
        agree += fs and inter
    checks["modes agree"] = agree == statements
    return _result(
        12,
        "determinism and challenge modes",
        t0,
        checks,
        f"two `prove --seed 12` runs byte-identical: {checks['identical containers']} ({len(blobs[0])} bytes); "
        f"{agree}/{statements} honest statements accepted in both Fiat-Shamir and interactive mode",
    )


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
    12: criterion_12,
}


def run(number: int) -> CriterionResult:
    try:
        return CRITERIA[number]()
    except Exception as exc:  # a crash is a failure of the criterion, reported as such
        return CriterionResult(number, "error", False, f"{type(exc).__name__}: {exc}")
