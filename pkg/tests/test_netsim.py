import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from verinfer.algebra import get_profile
from verinfer.errors import AttestationMissing, AuthFailure, NoNodes, PoisonedRead, ReplayDetected
from verinfer.model import fixture_model, forward, random_input
from verinfer.netsim import (
    CPU,
    GPU,
    MODP_GROUP,
    DhParty,
    EventQueue,
    NodeDescriptor,
    NodeSlot,
    Scenario,
    SecureBuffer,
    SessionConfig,
    SigningKey,
    attest,
    dependent_pairs,
    dh_shared_secret,
    establish_channel,
    measure,
    routing_violations,
    run_scenario,
    run_session,
    schedule_shards,
    shard_cost,
    sign,
    verify_attestation,
    verify_signature,
)
from verinfer.rand import Csprng

CURVE = get_profile("test")
MODEL = fixture_model(0)
SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def test_dh_textbook_and_group():
    assert dh_shared_secret(23, 5, 6, 15) == 2
    rng = Csprng(1)
    a_sec, a_pub = MODP_GROUP.keypair(rng)
    b_sec, b_pub = MODP_GROUP.keypair(rng)
    assert MODP_GROUP.shared(a_sec, b_pub) == MODP_GROUP.shared(b_sec, a_pub)
    with pytest.raises(ValueError):
        MODP_GROUP.shared(a_sec, 1)


def _pair(attested=True):
    rng = Csprng(2)
    a = DhParty("a", *MODP_GROUP.keypair(rng), attested=attested)
    b = DhParty("b", *MODP_GROUP.keypair(rng), attested=True)
    return establish_channel(a, b)


def test_channel_requires_attestation():
    with pytest.raises(AttestationMissing):
        _pair(attested=False)


@settings(max_examples=30)
@given(st.binary(min_size=0, max_size=100))
def test_channel_round_trip_both_directions(msg):
    ea, eb = _pair()
    assert eb.recv(ea.send(msg)) == msg
    assert ea.recv(eb.send(msg)) == msg
    assert ea.key_fingerprint() == eb.key_fingerprint()


def test_channel_tamper_replay_and_reflection():
    ea, eb = _pair()
    frame = ea.send(b"hello")
    bad = bytearray(frame)
    bad[-1] ^= 1
    with pytest.raises(AuthFailure):
        eb.recv(bytes(bad))
    with pytest.raises(AuthFailure):
        eb.recv(frame[:5])
    assert eb.recv(frame) == b"hello"
    with pytest.raises(ReplayDetected):
        eb.recv(frame)
    with pytest.raises((AuthFailure, ReplayDetected)):
        ea.recv(ea.send(b"echo"))


def test_signatures_and_attestation():
    key = SigningKey.generate(CURVE, Csprng(3))
    sig = sign(key, b"m")
    assert verify_signature(CURVE, key.public, b"m", sig)
    assert not verify_signature(CURVE, key.public, b"n", sig)
    ev = attest("n1", key, b"shard code")
    assert verify_attestation(CURVE, key.public, ev, measure(b"shard code"))
    assert not verify_attestation(CURVE, key.public, ev, measure(b"other code"))
    other = SigningKey.generate(CURVE, Csprng(4))
    assert not verify_attestation(CURVE, other.public, ev)


def test_secure_buffer_poisoning():
    buf = SecureBuffer(b"secret", "k")
    assert buf.read() == b"secret"
    buf.zeroize()
    assert set(buf.raw()) <= {0}
    with pytest.raises(PoisonedRead):
        buf.read()


def test_event_queue_orders_by_tick_then_insertion():
    q = EventQueue()
    for tick, ev in [(3, "c"), (1, "a"), (3, "d"), (1, "b")]:
        q.push(tick, ev)
    assert [q.pop()[1] for _ in range(4)] == ["a", "b", "c", "d"]
    with pytest.raises(ValueError):
        q.push(0, "late")


@settings(max_examples=30)
@given(st.integers(min_value=1, max_value=6), st.integers(min_value=1, max_value=3), st.integers(min_value=0, max_value=10**6))
def test_schedule_invariants(n_nodes, redundancy, seed):
    R = random.Random(seed)
    redundancy = min(redundancy, n_nodes)
    nodes = [NodeSlot(f"n{i}", R.choice([GPU, CPU]), R.choice([1.0, 2.0, 4.0])) for i in range(n_nodes)]
    cuts = sorted(R.sample(range(1, MODEL.num_layers), R.randint(0, MODEL.num_layers - 1)))
    bounds = [0, *cuts, MODEL.num_layers]
    ranges = [(a + 1, b) for a, b in zip(bounds, bounds[1:])]
    plan = schedule_shards(MODEL, ranges, nodes, redundancy)
    assert plan.redundancy == (redundancy,) * len(ranges)
    assert all(len(set(a)) == len(a) for a in plan.assignments)
    # greedy bound: no node finishes later than the best single-node time plus its largest shard
    speed = {n.node_id: n.speed for n in nodes}
    costs = [shard_cost(MODEL, a, b) for a, b in ranges]
    finish = {n: 0.0 for n in speed}
    for c, nodes_s in zip(costs, plan.assignments):
        for n in nodes_s:
            finish[n] += c / speed[n]
    lower = redundancy * sum(costs) / sum(speed.values())
    assert max(finish.values()) <= lower + max(costs) / min(speed.values()) + 1e-9


def test_schedule_errors():
    with pytest.raises(NoNodes):
        schedule_shards(MODEL, [(1, MODEL.num_layers)], [])
    with pytest.raises(ValueError):
        schedule_shards(MODEL, [(1, MODEL.num_layers)], [NodeSlot("a")], redundancy=2)
    with pytest.raises(ValueError):
        NodeSlot("a", speed=0)


def test_dependent_pairs():
    assert dependent_pairs([("a", "b"), ("c",)]) == [("a", "c"), ("b", "c")]


def _nodes(n, dishonest=()):
    return [NodeDescriptor(f"n{i}", GPU if i < 2 else CPU, 2.0 if i < 2 else 1.0, honest=f"n{i}" not in dishonest) for i in range(n)]


def test_honest_session_matches_forward_and_is_deterministic():
    x = random_input(MODEL, random.Random(0))
    cfg = SessionConfig(seed=3, cuts=(2,))
    first = run_session(MODEL, x, _nodes(3), cfg)
    assert first.ok and first.output == forward(MODEL, x)[0]
    assert first.log() == run_session(MODEL, x, _nodes(3), cfg).log()
    assert not routing_violations(first.records)
    assert first.log() != run_session(MODEL, x, _nodes(3), SessionConfig(seed=4, cuts=(2,))).log()


@pytest.mark.parametrize("proof_mode", [False, True])
def test_byzantine_replica_is_outvoted(proof_mode):
    x = random_input(MODEL, random.Random(1))
    res = run_session(MODEL, x, _nodes(6, {"n2"}), SessionConfig(seed=5, redundancy=3, proof_mode=proof_mode, profile="test"))
    assert res.ok and res.output == forward(MODEL, x)[0]
    assert res.flagged == ("n2",)


def test_example_scenarios_run():
    for path in sorted(SCENARIOS.glob("*.json")):
        sc = Scenario.load(path)
        res = run_scenario(sc)
        assert res.ok, (path.name, res.reason)
        assert res.output == forward(sc.model, sc.x)[0]
