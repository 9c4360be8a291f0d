"""Hand-computed oracle values for small inputs."""

import random

import pytest

from verinfer.algebra import PrimeField, get_profile
from verinfer.commit import CommitKey, commit_vector
from verinfer.consensus import AMBIGUOUS, VERIFIED, ConsensusConfig, DistributionStats, Replica, cdv_check, decide, reconstruct, run_redundant
from verinfer.errors import ShardFailed
from verinfer.gadgets import build_function_table, decompose, multiplicities, relu
from verinfer.gadgets.tables import LookupTable
from verinfer.model import Layer, ModelSpec, ShardPlan, fixture_model, forward, quantize, random_input, run_plan, split_forward
from verinfer.netsim import CPU, NodeSlot, SigningKey, attest, dh_shared_secret, measure, schedule_shards, shard_cost, verify_attestation
from verinfer.poly import MultilinearPoly, lagrange_basis
from verinfer.rand import Csprng

F7 = PrimeField(7)
TEST = get_profile("test")


def test_small_field():
    assert F7.add(3, 4) == 0
    assert F7.inv(3) == 5
    assert all(F7.pow(g, 6) == 1 for g in range(1, 7))


def test_group_identity():
    P = TEST.hash_to_point(b"ex", 0)
    assert TEST.add(P, TEST.infinity) == P
    assert TEST.scalar_mul(P, 0).infinity


def test_generator_sampling():
    assert TEST.sample_generators(3, b"a") == TEST.sample_generators(3, b"a")
    assert TEST.sample_generators(3, b"a") != TEST.sample_generators(3, b"b")


def test_lagrange_basis_values():
    assert lagrange_basis(F7, (0, 1), (0, 1)) == 1
    assert lagrange_basis(F7, (0, 1), (1, 1)) == 0
    assert lagrange_basis(F7, (2, 3), (1, 1)) == 6


def test_mle_values():
    S = MultilinearPoly.from_values(F7, [3, 5])
    assert S.evaluate([0]) == 3
    assert S.evaluate([2]) == 0
    assert MultilinearPoly.from_values(F7, [0, 0, 0, 0]).evaluate([4, 5]) == 0
    T = MultilinearPoly.from_values(F7, [1, 2, 3, 4])
    assert list(T.restrict_first_var(0).evals) == [1, 3]
    assert list(T.restrict_first_var(1).evals) == [2, 4]


def test_commit_zero_vector_is_identity():
    key = CommitKey.setup(TEST, 4)
    assert commit_vector(key, [0, 0, 0, 0], 0).point.infinity
    assert commit_vector(key, [1, 2, 3, 4], 9).point == commit_vector(key, [1, 2, 3, 4], 9).point


def test_relu_decompositions():
    assert decompose(-3, 4) == [0, 0, 0, 1, 1] and relu([-3]) == [0]
    assert decompose(5, 4) == [1, 0, 1, 0, 1] and relu([5]) == [5]
    assert decompose(0, 4)[0] == 1 and relu([0]) == [0]


def test_multiplicities_example():
    T = LookupTable("t", (), 1, 0, ((1,), (2,), (3,)))
    assert multiplicities(T, [(1,), (2,), (1,)]) == [2, 1, 0]


def test_sigmoid_table_midpoint():
    T = build_function_table("sigmoid", (-4, 4), 256)
    assert T.apply([0]) == [128]


def test_quantize_examples():
    p = TEST.scalar_field.modulus
    assert quantize([0.0], 64) == [0]
    assert quantize([-1.25], 4) == [-5]
    assert quantize([-1.25], 4, TEST.scalar_field) == [p - 5]
    assert quantize([0.1], 8) == [1]


def _identity_net():
    W1 = Layer("linear", 2, 2, 1, ((1, 0), (0, 1)), (0, 0))
    W2 = Layer("linear", 2, 1, 1, ((1, 1),), (0,))
    return ModelSpec(2, 1, (W1, Layer("relu", 2, 2), W2))


def test_hand_computed_network():
    net = _identity_net()
    y, trace = forward(net, [1, -1])
    assert trace.layer_output(2) == (1, 0)
    assert y == (1,)
    assert forward(net, [0, 0])[0] == (0,)
    Z, handle = split_forward(net, [1, -1], net.num_layers - 1)
    assert Z == trace.layer_output(2) and handle.resume(Z) == y


def test_two_shard_plan_equals_one_shard_plan():
    model = fixture_model(0)
    x = random_input(model, random.Random(3))
    one = run_plan(model, ShardPlan.from_cuts(model.num_layers, []), x)
    assert one == run_plan(model, ShardPlan.from_cuts(model.num_layers, [2]), x)


def test_redundant_execution_examples():
    model = fixture_model(0)
    x = random_input(model, random.Random(4))
    outs = run_redundant(model, 1, model.num_layers, x, [Replica(f"n{i}") for i in range(3)], seed=0)
    assert len({o for _, o in outs}) == 1
    outs = run_redundant(model, 1, model.num_layers, x, [Replica("a"), Replica("b"), Replica("c", "random")], seed=0)
    assert len({o for _, o in outs}) == 2
    assert len(run_redundant(model, 1, model.num_layers, x, [Replica("a")], seed=0)) == 1


def test_vote_examples():
    res = decide([("a", (5,)), ("b", (5,)), ("c", (7,))])
    assert res.status == VERIFIED and res.output() == (5,) and res.dissenters == ("c",)
    assert decide([("a", (5,)), ("b", (5,)), ("c", (7,)), ("d", (7,))]).status == AMBIGUOUS
    single = decide([("a", (5,))], ConsensusConfig(redundancy=1))
    assert single.verified and single.votes == 1
    with pytest.raises(ShardFailed):
        reconstruct([single, decide([("a", (1,)), ("b", (2,))]), single])


def test_cdv_examples():
    ref = DistributionStats(0.0, 1.0, 100)
    ok = cdv_check(DistributionStats(0.05, 1.0, 100), ref, 3)
    assert ok.accept and ok.threshold == pytest.approx(0.3)
    assert not cdv_check(DistributionStats(0.5, 1.0, 100), ref, 3).accept
    for c in (0.1, 1.0, 3.0):
        assert cdv_check([0.0] * 5, ref, c).accept


def test_attestation_examples():
    key = SigningKey.generate(TEST, Csprng(1))
    assert measure(b"code") == measure(b"code")
    assert measure(b"code") != measure(b"codf")
    ev = attest("n", key, b"code")
    assert not verify_attestation(TEST, key.public, ev, measure(b"codf"))


def test_dh_example():
    assert dh_shared_secret(23, 5, 6, 15) == 2
    assert pow(5, 6 * 15, 23) == 2


def _loads(model, plan):
    costs = {}
    for (a, b), nodes in zip(plan.ranges, plan.assignments):
        for n in nodes:
            costs[n] = costs.get(n, 0) + shard_cost(model, a, b)
    return costs


def test_scheduler_load_examples():
    model = ModelSpec(4, 1, tuple(Layer("relu", 4, 4) for _ in range(12)))
    ranges = [(i, i) for i in range(1, 13)]
    even = _loads(model, schedule_shards(model, ranges, [NodeSlot("a"), NodeSlot("b"), NodeSlot("c")]))
    assert even == {"a": 16, "b": 16, "c": 16}
    skew = _loads(model, schedule_shards(model, ranges, [NodeSlot("fast", CPU, 2.0), NodeSlot("slow", CPU, 1.0)]))
    assert abs(skew["fast"] - 2 * skew["slow"]) <= 2 * 4
    solo = schedule_shards(model, ranges, [NodeSlot("only")])
    assert all(a == ("only",) for a in solo.assignments)
