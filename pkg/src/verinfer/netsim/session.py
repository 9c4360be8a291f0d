"""End-to-end session: scheduling, attestation, channels, execution, retrieval, teardown.

Everything runs in one process on virtual ticks.  The orchestrator routes setup
traffic and collects digests; activations move directly between the nodes of
consecutive shards.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from ..algebra import get_profile
from ..consensus import ConsensusConfig, byzantine_output, decide, digest, dumps_records
from ..errors import AttestationMissing, PoisonedRead, ShardFailed
from ..model import ModelSpec, Layer, fixture_model, random_input, run_layers
from ..rand import Csprng
from ..zkdps import (
    ActivationOpening,
    ShardProof,
    WeightWitness,
    check_opening,
    commit_shard,
    restore_witness,
    prove_shard,
    setup_key,
    verify_shard,
)
from .crypto import (
    MODP_GROUP,
    ChannelEnd,
    DhGroup,
    DhParty,
    SecureBuffer,
    SigningKey,
    attest,
    establish_channel,
    measure,
    verify_attestation,
)
from .schedule import CPU, EventQueue, NodeSlot, schedule_shards, shard_cost, ticks

ORCHESTRATOR = "orchestrator"


@dataclass(frozen=True)
class NodeDescriptor:
    """A participant.  ``honest`` and ``fault`` exist only for fault injection."""

    node_id: str
    node_class: str = CPU
    speed: float = 1.0
    honest: bool = True
    fault: str = "random"

    def __post_init__(self):
        NodeSlot(self.node_id, self.node_class, self.speed)
        if self.node_id == ORCHESTRATOR:
            raise ValueError(f"{ORCHESTRATOR!r} is reserved")

    @property
    def slot(self) -> NodeSlot:
        return NodeSlot(self.node_id, self.node_class, self.speed)

    def to_json(self) -> dict:
        return {"id": self.node_id, "class": self.node_class, "speed": self.speed, "honest": self.honest, "fault": self.fault}

    @classmethod
    def from_json(cls, d: dict) -> NodeDescriptor:
        return cls(str(d["id"]), d.get("class", CPU), float(d.get("speed", 1.0)), bool(d.get("honest", True)), d.get("fault", "random"))


@dataclass(frozen=True)
class SessionConfig:
    seed: int = 0
    redundancy: int = 1
    proof_mode: bool = False
    profile: str = "test"
    cuts: tuple[int, ...] | None = None
    quorum: Fraction | None = None

    def consensus(self) -> ConsensusConfig:
        return ConsensusConfig(self.redundancy, self.quorum)


@dataclass
class Scenario:
    model: ModelSpec
    x: list[int]
    nodes: list[NodeDescriptor]
    config: SessionConfig

    @classmethod
    def from_json(cls, d: dict, base: Path | None = None) -> Scenario:
        seed = int(d.get("seed", 0))
        m = d.get("model", {"fixture": 0})
        if isinstance(m, str):
            model = ModelSpec.load((base or Path(".")) / m)
        elif "fixture" in m:
            model = fixture_model(int(m["fixture"]))
        else:
            model = ModelSpec.from_json(m)
        x = d.get("input")
        if x is None:
            x = random_input(model, random.Random(seed))
        quorum = d.get("quorum")
        config = SessionConfig(
            seed,
            int(d.get("redundancy", 1)),
            bool(d.get("proof_mode", False)),
            d.get("profile", "test"),
            None if d.get("cuts") is None else tuple(int(c) for c in d["cuts"]),
            None if quorum is None else Fraction(quorum),
        )
        nodes = [NodeDescriptor.from_json(n) for n in d["nodes"]]
        return cls(model, [int(v) for v in x], nodes, config)

    @classmethod
    def load(cls, path) -> Scenario:
        path = Path(path)
        return cls.from_json(json.loads(path.read_text()), path.parent)

    def with_overrides(self, **kw) -> Scenario:
        return replace(self, config=replace(self.config, **{k: v for k, v in kw.items() if v is not None}))


@dataclass
class SessionResult:
    ok: bool
    output: tuple[int, ...] | None
    records: list[dict]
    reason: str = ""
    flagged: tuple[str, ...] = ()

    def log(self) -> str:
        return dumps_records(self.records)


class SessionAborted(ShardFailed):
    def __init__(self, message: str, records: list[dict]):
        super().__init__(message)
        self.records = records


def even_cuts(num_layers: int, shards: int) -> tuple[int, ...]:
    shards = max(1, min(shards, num_layers))
    return tuple(round(k * num_layers / shards) for k in range(1, shards))


def dependent_pairs(assignments: Sequence[Sequence[str]]) -> list[tuple[str, str]]:
    """Node pairs that exchange activations: replicas of shard s with replicas of s+1."""
    pairs = set()
    for prev, nxt in zip(assignments, assignments[1:]):
        for a in prev:
            for b in nxt:
                if a != b:
                    pairs.add(tuple(sorted((a, b))))
    return sorted(pairs)


def routing_violations(records: Sequence[dict]) -> list[dict]:
    """Activation messages that touched the orchestrator (should be none)."""
    return [
        r
        for r in records
        if r.get("event") == "send" and r.get("kind") == "activation" and ORCHESTRATOR in (r.get("src"), r.get("dst"))
    ]


# ---------------------------------------------------------------------------
# participants
# ---------------------------------------------------------------------------


class Enclave:
    """A node's simulated TEE.  ``host_view`` is everything visible outside it."""

    def __init__(self, node_id: str, rng: Csprng, group: DhGroup, signer: SigningKey | None):
        self.node_id = node_id
        secret, public = group.keypair(rng.fork("dh"))
        self.party = DhParty(node_id, secret, public)
        self.signer = signer
        self.channels: dict[str, ChannelEnd] = {}
        self.buffers: dict[str, SecureBuffer] = {}
        self.host_view: list[tuple[str, bytes]] = []

    def store(self, name: str, data: bytes) -> None:
        self.buffers[name] = SecureBuffer(data, name)

    def load(self, name: str) -> bytes:
        return self.buffers[name].read()

    def destroy(self) -> int:
        for buf in self.buffers.values():
            buf.zeroize()
        for ch in self.channels.values():
            ch.destroy()
        return len(self.buffers) + len(self.channels)

    def poisoned(self) -> bool:
        every = list(self.buffers.values()) + [ch.key_buffer for ch in self.channels.values()]
        for buf in every:
            try:
                buf.read()
            except PoisonedRead:
                continue
            return False
        return all(not any(buf.raw()) for buf in every)


def _encode(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def _weights_payload(model: ModelSpec, first: int, last: int, witness: WeightWitness | None) -> bytes:
    layers = {str(i): model.layer(i).to_json() for i in range(first, last + 1)}
    blinds = {}
    if witness is not None:
        blinds = {str(i): list(bl) for i, bl in witness.blinds().items() if first <= i <= last}
    return _encode({"first": first, "last": last, "layers": layers, "blinds": blinds})


def _shard_code(model: ModelSpec, first: int, last: int) -> bytes:
    """What attestation measures: the public shard program."""
    return _encode({"first": first, "last": last, "arch": model.shard(first, last).public().to_json()})


class Session:
    def __init__(self, model: ModelSpec, x: Sequence[int], nodes: Sequence[NodeDescriptor], config: SessionConfig):
        self.model = model
        self.x = [int(v) for v in x]
        self.nodes = {n.node_id: n for n in nodes}
        if len(self.nodes) != len(nodes):
            raise ValueError("node ids must be unique")
        self.config = config
        self.rng = Csprng(config.seed).fork("session")
        self.curve = get_profile(config.profile)
        self.queue = EventQueue()
        self.clock = 0
        self.records: list[dict] = []
        self.flagged: set[str] = set()
        self.enclaves: dict[str, Enclave] = {}
        self.orch: Enclave | None = None
        self.key = None
        self.commitments = None
        self.witness = None

    # -- logging and messaging ------------------------------------------------

    def log(self, event: str, **fields) -> None:
        self.records.append({"t": self.clock, "seq": len(self.records), "event": event, **fields})

    def _end(self, node_id: str) -> Enclave:
        return self.orch if node_id == ORCHESTRATOR else self.enclaves[node_id]

    def send(self, src: str, dst: str, kind: str, payload: bytes) -> bytes:
        s, d = self._end(src), self._end(dst)
        frame = s.channels[dst].send(payload)
        s.host_view.append(("out", frame))
        d.host_view.append(("in", frame))
        self.log("send", src=src, dst=dst, kind=kind, size=len(frame), frame=hashlib.sha256(frame).hexdigest()[:16])
        return d.channels[src].recv(frame)

    # -- phases ---------------------------------------------------------------

    def plan(self):
        L = self.model.num_layers
        m = self.config.redundancy
        cuts = self.config.cuts
        if cuts is None:
            cuts = even_cuts(L, len(self.nodes) // m)
        bounds = [0, *sorted(set(cuts)), L]
        ranges = [(a + 1, b) for a, b in zip(bounds, bounds[1:])]
        plan = schedule_shards(self.model, ranges, [n.slot for n in self.nodes.values()], m)
        for s, ((a, b), who) in enumerate(zip(plan.ranges, plan.assignments)):
            self.log("schedule", shard=s, layers=[a, b], nodes=list(who), cost=shard_cost(self.model, a, b))
        return plan

    def init(self, plan) -> None:
        self.orch = Enclave(ORCHESTRATOR, self.rng.fork("orchestrator"), MODP_GROUP, None)
        self.orch.party.attested = True
        involved = sorted({n for who in plan.assignments for n in who})
        for nid in involved:
            signer = SigningKey.generate(self.curve, self.rng.fork(f"identity/{nid}"))
            self.enclaves[nid] = Enclave(nid, self.rng.fork(f"node/{nid}"), MODP_GROUP, signer)
            self.log("init", node=nid, node_class=self.nodes[nid].node_class)
        self.clock += 1

    def attest_all(self, plan) -> None:
        for s, ((a, b), who) in enumerate(zip(plan.ranges, plan.assignments)):
            code = _shard_code(self.model, a, b)
            for nid in who:
                enc = self.enclaves[nid]
                ev = attest(nid, enc.signer, code, enc.party.public)
                ok = verify_attestation(self.curve, enc.signer.public, ev, measure(code))
                self.log("attest", node=nid, shard=s, measurement=ev.measurement.hex()[:16], ok=ok)
                if not ok:
                    raise AttestationMissing(f"attestation of {nid} failed")
                enc.party.attested = True
        self.clock += 1

    def connect(self, a: str, b: str) -> None:
        ea, eb = self._end(a), self._end(b)
        if b in ea.channels:
            return
        ca, cb = establish_channel(ea.party, eb.party)
        ea.channels[b], eb.channels[a] = ca, cb
        self.log("channel", a=a, b=b)

    def channels(self, plan) -> None:
        for nid in sorted(self.enclaves):
            self.connect(ORCHESTRATOR, nid)
        for a, b in dependent_pairs(plan.assignments):
            self.connect(a, b)
        self.clock += 1

    def transmit(self, plan) -> None:
        if self.config.proof_mode:
            self.key = setup_key(self.curve, self.model)
            self.commitments, self.witness = commit_shard(self.key, self.model, self.rng.fork("weights"))
            self.log("commit", weights=hashlib.sha256(self.commitments.to_bytes()).hexdigest()[:16])
        for s, ((a, b), who) in enumerate(zip(plan.ranges, plan.assignments)):
            payload = _weights_payload(self.model, a, b, self.witness)
            for nid in who:
                self.enclaves[nid].store(f"shard{s}/weights", self.send(ORCHESTRATOR, nid, "weights", payload))
                if s == 0:
                    self.enclaves[nid].store("shard0/input", self.send(ORCHESTRATOR, nid, "input", _encode(self.x)))
        self.clock += 1

    # -- node-side work -------------------------------------------------------

    def _node_model(self, enc: Enclave, s: int) -> tuple[ModelSpec, WeightWitness | None, int, int]:
        data = json.loads(enc.load(f"shard{s}/weights"))
        first, last = data["first"], data["last"]
        layers = list(self.model.public().layers)
        for i, lj in data["layers"].items():
            layers[int(i) - 1] = Layer.from_json(lj)
        model = replace(self.model, layers=tuple(layers))
        witness = restore_witness(self.key, model, data["blinds"]) if self.config.proof_mode else None
        return model, witness, first, last

    def execute(self, nid: str, s: int) -> dict:
        enc = self.enclaves[nid]
        desc = self.nodes[nid]
        model, witness, first, last = self._node_model(enc, s)
        inp = json.loads(enc.load(f"shard{s}/input"))
        x = inp if s == 0 else inp["values"]
        report = {}
        if self.config.proof_mode:
            previous = None if s == 0 else ActivationOpening(tuple(x), inp["blind"])
            out = prove_shard(
                self.key, model, witness, x, self.rng.fork(f"prove/{nid}/{s}"), first=first, last=last, previous=previous
            )
            y, blind = out.output, out.output_opening.blind
            proof = out.proof.to_bytes(self.curve)
            if not desc.honest:
                # cannot prove a wrong result, so a cheating node ships a damaged proof
                proof = proof[:-1] + bytes([proof[-1] ^ 1])
            report["proof"] = proof.hex()
            if s == 0:
                report["input_blind"] = out.input_opening.blind
        else:
            y, _ = run_layers(model, x, first, last, record=False)
            blind = None
        result = y if desc.honest else byzantine_output(_fault(desc), y, _py_random(self.config.seed, nid, s))
        if isinstance(result, bytes):
            stored = {"raw": result.hex(), "blind": blind}
        else:
            stored = {"values": list(result), "blind": blind}
        enc.store(f"shard{s}/output", _encode(stored))
        report["digest"] = digest(result)
        return report

    # -- execution driven by the event queue ----------------------------------

    def run_shards(self, plan):
        n = len(plan.ranges)
        self.queue.now = self.clock
        self._start(plan, 0)
        reports: dict[int, dict[str, dict]] = {s: {} for s in range(n)}
        prev_c_out = None
        final = None
        while self.queue:
            self.clock, (s, nid) = self.queue.pop()
            report = self.execute(nid, s)
            self.log("executed", node=nid, shard=s)
            reports[s][nid] = json.loads(self.send(nid, ORCHESTRATOR, "report", _encode(report)))
            if s + 1 < n:
                out = self.enclaves[nid].load(f"shard{s}/output")
                for peer in plan.assignments[s + 1]:
                    if peer == nid:
                        self.enclaves[nid].store(f"shard{s + 1}/candidate/{nid}", out)
                        self.log("handoff", node=nid, shard=s + 1)
                    else:
                        self.enclaves[peer].store(f"shard{s + 1}/candidate/{nid}", self.send(nid, peer, "activation", out))
            if len(reports[s]) < len(plan.assignments[s]):
                continue
            agreed, prev_c_out = self._decide(plan, s, reports[s], prev_c_out)
            if s + 1 < n:
                for peer in plan.assignments[s + 1]:
                    self._accept_input(peer, s + 1, agreed, prev_c_out)
                self.clock += 1
                self._start(plan, s + 1)
            else:
                final = self._retrieve(plan, s, agreed, prev_c_out)
        return final

    def _start(self, plan, s: int) -> None:
        a, b = plan.ranges[s]
        cost = shard_cost(self.model, a, b)
        for nid in plan.assignments[s]:
            self.queue.push(self.clock + ticks(cost, self.nodes[nid].speed), (s, nid))
        self.log("start", shard=s, nodes=list(plan.assignments[s]))

    def _decide(self, plan, s: int, reports: dict[str, dict], prev_c_out):
        votes = []
        c_outs = {}
        for nid in plan.assignments[s]:
            rep = reports[nid]
            vote = rep["digest"].encode()
            if self.config.proof_mode:
                blob = bytes.fromhex(rep["proof"])
                vr = verify_shard(self.key, self.model, self.commitments, blob, previous_out=prev_c_out)
                proof = ShardProof.from_bytes(blob, self.model.public()) if vr.ok else None
                if vr.ok and s == 0:
                    vr_ok = check_opening(self.key, proof.c_in, ActivationOpening(tuple(self.x), rep["input_blind"]))
                else:
                    vr_ok = vr.ok
                self.log("proof", node=nid, shard=s, ok=vr_ok, failing=vr.failing_check or None)
                if not vr_ok:
                    vote = b"rejected/" + nid.encode()
                else:
                    c_outs[nid] = proof.c_out
            votes.append((nid, vote))
        result = decide(votes, self.config.consensus())
        for row in result.records(0, s, ()):
            self.log("consensus", **{k: v for k, v in row.items() if k not in ("round",)})
        self.flagged.update(result.dissenters)
        if not result.verified:
            raise ShardFailed(f"shard {s} is {result.status}")
        agreed = result.value.decode()
        # one agreeing replica is designated as the source of the next shard's input
        source = min(nid for nid, vote in votes if vote == result.value)
        return (agreed, source), c_outs.get(source)

    def _accept_input(self, peer: str, s: int, agreed: tuple[str, str], c_prev) -> None:
        value, source = agreed
        enc = self.enclaves[peer]
        self.send(ORCHESTRATOR, peer, "decision", _encode({"shard": s - 1, "digest": value, "source": source}))
        data = json.loads(enc.load(f"shard{s}/candidate/{source}"))
        if "values" not in data or digest(data["values"]) != value:
            raise ShardFailed(f"{peer} got an activation from {source} that does not match the agreed digest")
        if c_prev is not None and not check_opening(self.key, c_prev, ActivationOpening(tuple(data["values"]), data["blind"])):
            raise ShardFailed(f"{peer} got an activation from {source} that does not open its commitment")
        enc.store(f"shard{s}/input", _encode(data))
        self.log("input", node=peer, shard=s, source=source)

    def _retrieve(self, plan, s: int, agreed: tuple[str, str], c_out):
        agreed, source = agreed
        for nid in (source,):
            data = json.loads(self.send(nid, ORCHESTRATOR, "result", self.enclaves[nid].load(f"shard{s}/output")))
            if "values" not in data or digest(data["values"]) != agreed:
                continue
            if c_out is not None and not check_opening(self.key, c_out, ActivationOpening(tuple(data["values"]), data["blind"])):
                continue
            self.log("retrieved", node=nid, digest=agreed[:16])
            return tuple(data["values"])
        raise ShardFailed(f"{source} did not return the agreed output")

    # -- teardown ------------------------------------------------------------

    def audit(self) -> bool:
        """Plaintext weights, input and session keys never appear in host-visible bytes."""
        secrets = [_encode(self.x)]
        for enc in self.enclaves.values():
            secrets += [buf.read() for buf in enc.buffers.values()]
            secrets += [ch.key_buffer.read() for ch in enc.channels.values()]
        views = [blob for enc in [self.orch, *self.enclaves.values()] for _, blob in enc.host_view]
        leaks = sum(1 for sec in secrets for blob in views if len(sec) >= 8 and sec in blob)
        self.log("audit", secrets=len(secrets), host_blobs=len(views), leaks=leaks)
        return leaks == 0

    def destroy(self) -> bool:
        ok = True
        for nid in sorted(self.enclaves):
            enc = self.enclaves[nid]
            count = enc.destroy()
            poisoned = enc.poisoned()
            ok &= poisoned
            self.log("destroy", node=nid, buffers=count, poisoned=poisoned)
        self.orch.destroy()
        return ok

    def run(self) -> SessionResult:
        self.log("session", seed=self.config.seed, profile=self.config.profile, redundancy=self.config.redundancy,
                 proof_mode=self.config.proof_mode, nodes=[self.nodes[k].to_json() for k in sorted(self.nodes)])
        try:
            plan = self.plan()
            self.init(plan)
            self.attest_all(plan)
            self.channels(plan)
            self.transmit(plan)
            output = self.run_shards(plan)
            clean = self.audit()
        except ShardFailed as err:
            self.log("abort", reason=str(err))
            if self.enclaves:
                self.destroy()
            return SessionResult(False, None, self.records, str(err), tuple(sorted(self.flagged)))
        except Exception as err:
            self.log("abort", reason=f"{type(err).__name__}: {err}")
            raise SessionAborted(str(err), self.records) from err
        destroyed = self.destroy()
        ok = clean and destroyed and not routing_violations(self.records)
        self.log("done", ok=ok, output=list(output), flagged=sorted(self.flagged))
        return SessionResult(ok, output, self.records, "" if ok else "post-session checks failed", tuple(sorted(self.flagged)))


def _fault(desc: NodeDescriptor):
    from ..consensus import Replica

    return Replica(desc.node_id, desc.fault if desc.fault != "honest" else "random")


def _py_random(seed: int, nid: str, s: int):
    import random

    return random.Random(f"{seed}/{nid}/{s}")


def run_session(model: ModelSpec, x: Sequence[int], nodes: Sequence[NodeDescriptor], config: SessionConfig = SessionConfig()) -> SessionResult:
    return Session(model, x, nodes, config).run()


def run_scenario(scenario: Scenario) -> SessionResult:
    return run_session(scenario.model, scenario.x, scenario.nodes, scenario.config)
