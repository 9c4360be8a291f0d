"""Proofs of correct execution for model shards.

A shard's prover commits every activation once (layer i's output commitment is
layer i+1's input commitment), runs the matching gadget per layer on a single
Fiat-Shamir transcript, and packs everything into a ``ZKDP`` container.  Adjacent
shards re-commit the boundary activation; the consumer proves the two
commitments hide the same vector by revealing the blind difference.

Container layout (big-endian, see ``docs`` in the README)::

    "ZKDP" u8 version u8 profile u32 first u32 last
    u32 count, then per linear layer: u32 index, point c_W, point c_b
    point c_in, point c_out
    u8 linked, [scalar delta]
    u32 count, then per layer: blob label, u8 kind, point c_out, blob body
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from typing import Sequence

from .algebra import CurveProfile, GroupPoint, profile_by_id
from .commit import CommitKey, PedersenCommitment, commit_vector
from .encoding import Reader, Writer
from .errors import DecodingError, DimensionMismatch, MalformedProof, TraceMismatch
from .gadgets.common import CommittedVector
from .gadgets.linear import LinearClaim, LinearProof, prove_linear, remainder_table, verify_linear
from .gadgets.lookup import LookupClaim, LookupProof, prove_lookup, verify_lookup
from .gadgets.matmul import pad_matrix
from .gadgets.relu import ReluClaim, ReluProof, prove_relu, verify_relu
from .model import InferenceTrace, ModelSpec, run_layers
from .poly import next_pow2
from .rand import Csprng
from .transcript import Transcript

MAGIC = b"ZKDP"
VERSION = 1
COMMITMENTS_MAGIC = b"ZKWC"
DOMAIN = b"zkdps/v1"
KIND_CODES = {"linear": 1, "relu": 2, "lookup": 3}
PROOF_TYPES = {"linear": LinearProof, "relu": ReluProof, "lookup": LookupProof}


def layer_label(index: int, kind: str) -> str:
    return f"zkdps/v1/layer/{index}/{kind}"


def required_capacity(model: ModelSpec) -> int:
    """Longest vector any proof of this model commits to."""
    cap = next_pow2(model.input_dim)
    for layer in model.layers:
        out_p, in_p = next_pow2(layer.out_dim), next_pow2(layer.in_dim)
        cap = max(cap, out_p, in_p)
        if layer.kind == "linear":
            cap = max(cap, out_p * in_p, next_pow2(len(remainder_table(layer.scale))))
        elif layer.kind == "lookup":
            cap = max(cap, next_pow2(len(layer.table())))
    return cap


def setup_key(curve: CurveProfile, model: ModelSpec) -> CommitKey:
    return CommitKey.setup(curve, required_capacity(model))


# ---------------------------------------------------------------------------
# weight commitments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightCommitments:
    """Public: layer index -> (c_W, c_b) for every linear layer."""

    pid: int
    entries: dict

    def for_range(self, first: int, last: int) -> WeightCommitments:
        return WeightCommitments(self.pid, {i: v for i, v in self.entries.items() if first <= i <= last})

    def write(self, w: Writer) -> None:
        w.u32(len(self.entries))
        for i in sorted(self.entries):
            c_W, c_b = self.entries[i]
            w.u32(i).point(c_W.point).point(c_b.point)

    def to_bytes(self) -> bytes:
        w = Writer().raw(COMMITMENTS_MAGIC).u8(VERSION).u8(self.pid)
        self.write(w)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes, model: ModelSpec) -> WeightCommitments:
        r = Reader(data)
        if r.raw(4) != COMMITMENTS_MAGIC or r.u8() != VERSION:
            raise DecodingError("not a weight commitment file")
        curve = profile_by_id(r.u8())
        entries = _read_weight_entries(r, curve, model)
        r.done()
        return cls(curve.pid, entries)


def _weight_dims(model: ModelSpec, index: int) -> tuple[int, int]:
    layer = model.layer(index)
    out_p, in_p = next_pow2(layer.out_dim), next_pow2(layer.in_dim)
    return out_p * in_p, out_p


def _read_weight_entries(r: Reader, curve: CurveProfile, model: ModelSpec) -> dict:
    entries = {}
    last = 0
    for _ in range(r.count()):
        i = r.u32()
        if i <= last or i > model.num_layers or model.layer(i).kind != "linear":
            raise DecodingError(f"unexpected weight entry for layer {i}")
        last = i
        dw, db = _weight_dims(model, i)
        entries[i] = (PedersenCommitment(r.point(curve), dw), PedersenCommitment(r.point(curve), db))
    return entries


@dataclass(frozen=True)
class WeightWitness:
    """Prover side: the committed, padded weight and bias vectors per linear layer."""

    entries: dict

    def public(self, pid: int) -> WeightCommitments:
        return WeightCommitments(pid, {i: (W.commitment, b.commitment) for i, (W, b) in self.entries.items()})

    def blinds(self) -> dict[int, tuple[int, int]]:
        return {i: (W.blind, b.blind) for i, (W, b) in self.entries.items()}


def restore_witness(key: CommitKey, model: ModelSpec, blinds: dict) -> WeightWitness:
    """Rebuild the prover's weight witness from the model weights and saved blinds."""
    entries = {}
    for i, (bW, bb) in blinds.items():
        layer = model.layer(int(i))
        if layer.kind != "linear" or not layer.has_weights:
            raise ValueError(f"layer {i} has no weights to restore")
        out_p, in_p = next_pow2(layer.out_dim), next_pow2(layer.in_dim)
        entries[int(i)] = (
            CommittedVector.create(key, pad_matrix(layer.weights, out_p, in_p), None, blind=int(bW)),
            CommittedVector.create(key, layer.bias, None, size=out_p, blind=int(bb)),
        )
    return WeightWitness(entries)


def commit_tensor(key: CommitKey, values: Sequence[int], blind: int, size: int | None = None) -> PedersenCommitment:
    size = next_pow2(len(values)) if size is None else size
    return commit_vector(key, list(values) + [0] * (size - len(values)), blind)


def commit_shard(
    key: CommitKey, model: ModelSpec, rng: Csprng, first: int = 1, last: int | None = None
) -> tuple[WeightCommitments, WeightWitness]:
    """One commitment per weight tensor of layers ``first..last``."""
    last = model.num_layers if last is None else last
    entries = {}
    for i in range(first, last + 1):
        layer = model.layer(i)
        if layer.kind != "linear":
            continue
        if not layer.has_weights:
            raise ValueError(f"layer {i} has no weights to commit")
        out_p, in_p = next_pow2(layer.out_dim), next_pow2(layer.in_dim)
        W = CommittedVector.create(key, pad_matrix(layer.weights, out_p, in_p), rng)
        b = CommittedVector.create(key, layer.bias, rng, size=out_p)
        entries[i] = (W, b)
    witness = WeightWitness(entries)
    return witness.public(key.curve.pid), witness


# ---------------------------------------------------------------------------
# proof container
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LayerProof:
    index: int
    label: str
    kind: str
    c_out: GroupPoint
    body: object


@dataclass(frozen=True)
class ShardProof:
    pid: int
    first: int
    last: int
    weights: WeightCommitments
    c_in: GroupPoint
    c_out: GroupPoint
    link_delta: int | None
    layers: tuple[LayerProof, ...]

    def to_bytes(self, curve: CurveProfile) -> bytes:
        f = curve.scalar_field
        w = Writer().raw(MAGIC).u8(VERSION).u8(self.pid).u32(self.first).u32(self.last)
        self.weights.write(w)
        w.point(self.c_in).point(self.c_out)
        if self.link_delta is None:
            w.u8(0)
        else:
            w.u8(1).scalar(f, self.link_delta)
        w.u32(len(self.layers))
        for lp in self.layers:
            body = Writer()
            lp.body.write(body, f)
            w.blob(lp.label.encode()).u8(KIND_CODES[lp.kind]).point(lp.c_out).blob(body.getvalue())
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes, model: ModelSpec) -> ShardProof:
        """Strict parse against the architecture; any deviation is :class:`MalformedProof`."""
        try:
            return cls._parse(data, model)
        except (DecodingError, DimensionMismatch, ValueError) as exc:
            raise MalformedProof(str(exc)) from None

    @classmethod
    def _parse(cls, data: bytes, model: ModelSpec) -> ShardProof:
        r = Reader(data)
        if r.raw(4) != MAGIC:
            raise DecodingError("bad magic")
        if r.u8() != VERSION:
            raise DecodingError("unsupported version")
        pid = r.u8()
        curve = profile_by_id(pid)
        f = curve.scalar_field
        first, last = r.u32(), r.u32()
        if not 1 <= first <= last <= model.num_layers:
            raise DecodingError("shard range outside the model")
        entries = _read_weight_entries(r, curve, model)
        expected = {i for i in range(first, last + 1) if model.layer(i).kind == "linear"}
        if set(entries) != expected:
            raise DecodingError("weight commitments do not cover the shard's linear layers")
        c_in, c_out = r.point(curve), r.point(curve)
        flag = r.u8()
        if flag not in (0, 1):
            raise DecodingError("bad link flag")
        delta = r.scalar(f) if flag else None
        if r.u32() != last - first + 1:
            raise DecodingError("layer count does not match the shard range")
        layers = []
        for i in range(first, last + 1):
            kind = model.layer(i).kind
            label = r.blob()
            if label != layer_label(i, kind).encode():
                raise DecodingError(f"layer {i}: unexpected label {label!r}")
            if r.u8() != KIND_CODES[kind]:
                raise DecodingError(f"layer {i}: gadget kind mismatch")
            c = r.point(curve)
            body_reader = Reader(r.blob())
            body = PROOF_TYPES[kind].read(body_reader, curve)
            body_reader.done()
            layers.append(LayerProof(i, label.decode(), kind, c, body))
        r.done()
        if layers[-1].c_out != c_out:
            raise DecodingError("shard output commitment differs from the last layer's")
        return cls(pid, first, last, WeightCommitments(pid, entries), c_in, c_out, delta, tuple(layers))


@dataclass(frozen=True)
class ActivationOpening:
    """Plain values and blind behind a boundary commitment."""

    values: tuple[int, ...]
    blind: int


def check_opening(key: CommitKey, c: GroupPoint, opening: ActivationOpening) -> bool:
    return commit_tensor(key, [v % key.field.modulus for v in opening.values], opening.blind).point == c


# ---------------------------------------------------------------------------
# prover
# ---------------------------------------------------------------------------


def _new_transcript(key: CommitKey, transcript: Transcript | None) -> Transcript:
    return transcript if transcript is not None else Transcript(key.field, DOMAIN)


def _absorb_header(tr: Transcript, model: ModelSpec, first: int, last: int, weights: WeightCommitments, c_in, link) -> None:
    arch = model.shard(first, last).public().dumps().encode()
    tr.absorb(b"zkdps/arch", hashlib.sha256(arch).digest())
    tr.absorb(b"zkdps/range", first.to_bytes(4, "big") + last.to_bytes(4, "big"))
    for i in sorted(weights.entries):
        c_W, c_b = weights.entries[i]
        tr.absorb_point(b"zkdps/W", c_W.point)
        tr.absorb_point(b"zkdps/b", c_b.point)
    tr.absorb_point(b"zkdps/in", c_in)
    if link is not None:
        tr.absorb_scalars(b"zkdps/link", [link])


@dataclass(frozen=True)
class ProverOutput:
    proof: ShardProof
    input_opening: ActivationOpening
    output_opening: ActivationOpening
    output: tuple[int, ...]
    seconds: float


def prove_shard(
    key: CommitKey,
    model: ModelSpec,
    weights: WeightWitness,
    x: Sequence[int],
    rng: Csprng,
    *,
    first: int = 1,
    last: int | None = None,
    trace: InferenceTrace | None = None,
    previous: ActivationOpening | None = None,
    transcript: Transcript | None = None,
) -> ProverOutput:
    """Prove layers ``first..last`` on input ``x``.

    ``previous`` is the producing shard's opening of the boundary activation; when
    given, the input is re-committed under a fresh blind and linked to it.
    """
    t0 = time.perf_counter()
    last = model.num_layers if last is None else last
    f = key.field
    p = f.modulus
    y, replay = run_layers(model, x, first, last)
    if trace is not None and trace.activations != replay.activations:
        raise TraceMismatch("trace does not replay against the committed weights")
    trace = replay
    if previous is not None and tuple(previous.values) != tuple(int(v) for v in x):
        raise TraceMismatch("input differs from the producing shard's output")
    x_vec = CommittedVector.create(key, x, rng, size=next_pow2(len(x)))
    link = None if previous is None else (x_vec.blind - previous.blind) % p
    public = weights.public(key.curve.pid).for_range(first, last)
    tr = _new_transcript(key, transcript)
    _absorb_header(tr, model, first, last, public, x_vec.point, link)
    input_vec = x_vec
    layers = []
    for i in range(first, last + 1):
        layer = model.layer(i)
        label = layer_label(i, layer.kind)
        tr.absorb(b"zkdps/layer", label.encode())
        out_p = next_pow2(layer.out_dim)
        y_vec = CommittedVector.create(key, trace.layer_output(i), rng, size=out_p)
        tr.absorb_point(b"zkdps/out", y_vec.point)
        if layer.kind == "linear":
            W, b = weights.entries[i]
            _, body = prove_linear(key, W, b, x_vec, (out_p, next_pow2(layer.in_dim)), layer.scale, tr, rng, y=y_vec)
        elif layer.kind == "relu":
            _, body = prove_relu(key, x_vec, model.bits, tr, rng, a=y_vec)
        else:
            body = prove_lookup(key, layer.table(), [x_vec, y_vec], layer.out_dim, tr, rng)
        layers.append(LayerProof(i, label, layer.kind, y_vec.point, body))
        x_vec = y_vec
    proof = ShardProof(key.curve.pid, first, last, public, input_vec.point, x_vec.point, link, tuple(layers))
    return ProverOutput(
        proof,
        ActivationOpening(tuple(int(v) for v in x), input_vec.blind),
        ActivationOpening(tuple(y), x_vec.blind),
        tuple(y),
        time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# verifier
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LayerReport:
    index: int
    gadget: str
    ok: bool
    reason: str = ""


@dataclass
class VerificationReport:
    ok: bool
    layers: list = field(default_factory=list)
    failing_check: str = ""
    verifier_seconds: float = 0.0
    prover_seconds: float | None = None
    proof_bytes: int = 0

    @property
    def failing_layer(self) -> int | None:
        for lr in self.layers:
            if not lr.ok:
                return lr.index
        return None

    def records(self) -> list[dict]:
        out = [{"layer": lr.index, "gadget": lr.gadget, "ok": lr.ok, "reason": lr.reason} for lr in self.layers]
        out.append(
            {
                "overall": self.ok,
                "failing_check": self.failing_check,
                "verifier_seconds": round(self.verifier_seconds, 6),
                "prover_seconds": None if self.prover_seconds is None else round(self.prover_seconds, 6),
                "proof_bytes": self.proof_bytes,
            }
        )
        return out


def _reject(report: VerificationReport, reason: str, t0: float) -> VerificationReport:
    report.ok = False
    report.failing_check = reason
    report.verifier_seconds = time.perf_counter() - t0
    return report


def verify_shard(
    key: CommitKey,
    model: ModelSpec,
    commitments: WeightCommitments,
    proof: bytes | ShardProof,
    *,
    c_in: GroupPoint | None = None,
    c_out: GroupPoint | None = None,
    previous_out: GroupPoint | None = None,
    transcript: Transcript | None = None,
) -> VerificationReport:
    """Check a shard proof against published weight commitments.

    Only the architecture of ``model`` is used.  ``c_in``/``c_out`` pin the boundary
    commitments when the caller already knows them; ``previous_out`` is the
    producing shard's output commitment, checked through the link.  Parse errors
    raise :class:`MalformedProof`.
    """
    t0 = time.perf_counter()
    arch = model.public()
    size = 0
    if isinstance(proof, (bytes, bytearray)):
        size = len(proof)
        proof = ShardProof.from_bytes(bytes(proof), arch)
    report = VerificationReport(True, proof_bytes=size)
    if proof.pid != key.curve.pid:
        return _reject(report, "profile", t0)
    published = commitments.for_range(proof.first, proof.last).entries
    if set(published) != set(proof.weights.entries):
        return _reject(report, "weight commitments", t0)
    for i in sorted(published):
        if proof.weights.entries[i] != published[i]:
            report.layers.append(LayerReport(i, "linear", False, "weight commitment"))
            return _reject(report, f"layer {i} (linear): weight commitment", t0)
    if c_in is not None and proof.c_in != c_in:
        return _reject(report, "input commitment", t0)
    if c_out is not None and proof.c_out != c_out:
        return _reject(report, "output commitment", t0)
    if (previous_out is None) != (proof.link_delta is None):
        return _reject(report, "boundary link", t0)
    if previous_out is not None and proof.c_in - previous_out != key.curve.scalar_mul(key.h, proof.link_delta):
        return _reject(report, "boundary link", t0)
    tr = _new_transcript(key, transcript)
    _absorb_header(tr, arch, proof.first, proof.last, proof.weights, proof.c_in, proof.link_delta)
    c_x = proof.c_in
    for lp in proof.layers:
        layer = arch.layer(lp.index)
        tr.absorb(b"zkdps/layer", lp.label.encode())
        tr.absorb_point(b"zkdps/out", lp.c_out)
        in_p, out_p = next_pow2(layer.in_dim), next_pow2(layer.out_dim)
        x = PedersenCommitment(c_x, in_p)
        y = PedersenCommitment(lp.c_out, out_p)
        if layer.kind == "linear":
            c_W, c_b = proof.weights.entries[lp.index]
            res = verify_linear(key, LinearClaim(c_W, c_b, x, y, (out_p, in_p), layer.scale), lp.body, tr)
        elif layer.kind == "relu":
            res = verify_relu(key, ReluClaim(x, y, out_p, arch.bits), lp.body, tr)
        else:
            res = verify_lookup(key, LookupClaim((x, y), layer.out_dim, out_p, layer.table()), lp.body, tr)
        report.layers.append(LayerReport(lp.index, layer.kind, res.ok, res.reason))
        if not res.ok:
            return _reject(report, f"layer {lp.index} ({layer.kind}): {res.reason}", t0)
        c_x = lp.c_out
    report.verifier_seconds = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# whole model over a plan
# ---------------------------------------------------------------------------


def prove_plan(key: CommitKey, model: ModelSpec, weights: WeightWitness, ranges, x, rng: Csprng) -> list[ProverOutput]:
    outs = []
    previous = None
    for first, last in ranges:
        out = prove_shard(key, model, weights, x, rng.fork(f"shard/{first}"), first=first, last=last, previous=previous)
        outs.append(out)
        previous = out.output_opening
        x = out.output
    return outs


def verify_chain(
    key: CommitKey,
    model: ModelSpec,
    commitments: WeightCommitments,
    proofs: Sequence[bytes],
    input_opening: ActivationOpening,
    output_opening: ActivationOpening,
) -> VerificationReport:
    """Verify consecutive shard proofs, their links, and the end-to-end openings."""
    t0 = time.perf_counter()
    total = VerificationReport(True)
    previous = None
    expected_first = 1
    for blob in proofs:
        rep = verify_shard(key, model, commitments, blob, previous_out=previous)
        total.layers.extend(rep.layers)
        total.proof_bytes += rep.proof_bytes
        if not rep.ok:
            return _reject(total, rep.failing_check, t0)
        parsed = ShardProof.from_bytes(bytes(blob), model.public())
        if parsed.first != expected_first:
            return _reject(total, "shards out of order", t0)
        if previous is None and not check_opening(key, parsed.c_in, input_opening):
            return _reject(total, "input opening", t0)
        expected_first = parsed.last + 1
        previous = parsed.c_out
    if expected_first != model.num_layers + 1:
        return _reject(total, "shards do not cover the model", t0)
    if not check_opening(key, previous, output_opening):
        return _reject(total, "output opening", t0)
    total.verifier_seconds = time.perf_counter() - t0
    return total
