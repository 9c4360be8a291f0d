import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from verinfer.consensus import (
    AMBIGUOUS,
    FAILED,
    VERIFIED,
    AdaptiveThreshold,
    ConsensusConfig,
    DistributionStats,
    Replica,
    canonical,
    cdv_check,
    decide,
    reconstruct,
    run_redundant,
)
from verinfer.errors import DegenerateReference, ShardFailed
from verinfer.model import fixture_model, forward, random_input

vals = st.lists(st.integers(min_value=-5, max_value=5), min_size=1, max_size=3).map(tuple)


@given(st.lists(vals, min_size=1, max_size=9))
def test_decide_matches_plurality_oracle(outputs):
    named = [(f"n{i}", o) for i, o in enumerate(outputs)]
    res = decide(named)
    counts = sorted(((outputs.count(o), o) for o in set(outputs)), reverse=True)
    top = counts[0][0]
    if len(counts) > 1 and counts[1][0] == top:
        assert res.status == AMBIGUOUS and res.value is None
    elif top > len(outputs) // 2:
        assert res.status == VERIFIED and res.output() == counts[0][1]
        assert set(res.dissenters) == {n for n, o in named if o != counts[0][1]}
    else:
        assert res.status == FAILED


def test_quorum():
    outs = [("a", (1,)), ("b", (1,)), ("c", (2,))]
    assert decide(outs).verified
    assert decide(outs, ConsensusConfig(quorum=1)).status == FAILED
    with pytest.raises(ValueError):
        ConsensusConfig(quorum=0.5)
    with pytest.raises(ValueError):
        ConsensusConfig(redundancy=0)


def test_canonical_ignores_container_type():
    assert canonical([1, -2]) == canonical((1, -2))
    assert canonical((1, 2)) != canonical((12,))


def test_byzantine_minority_never_wins():
    model = fixture_model(0)
    x = random_input(model, random.Random(0))
    honest = forward(model, x)[0]
    for faulty in itertools.combinations(range(5), 2):
        reps = [Replica(f"n{i}", "collude" if i in faulty else "honest") for i in range(5)]
        res = decide(run_redundant(model, 1, model.num_layers, x, reps, seed=1), ConsensusConfig(redundancy=5))
        assert res.verified and res.output() == honest
        assert set(res.dissenters) == {f"n{i}" for i in faulty}


def test_reconstruct_requires_verified_shards():
    ok = decide([("a", (1, 2)), ("b", (1, 2))])
    assert reconstruct([ok]) == (1, 2)
    with pytest.raises(ShardFailed):
        reconstruct([decide([("a", (1,)), ("b", (2,))])])
    with pytest.raises(ShardFailed):
        reconstruct([])


def test_cdv():
    ref = DistributionStats(0.0, 1.0, 100)
    assert cdv_check(DistributionStats(0.05, 1.0, 100), ref).accept
    assert not cdv_check(DistributionStats(0.5, 1.0, 100), ref).accept
    assert cdv_check(DistributionStats(0.31, 1.0, 100), ref, c=3.2).accept
    with pytest.raises(DegenerateReference):
        cdv_check([1.0, 2.0], DistributionStats(1.0, 0.0, 2))
    assert cdv_check([1.0, 1.0], DistributionStats(1.0, 0.0, 2)).accept
    with pytest.raises(ValueError):
        cdv_check([1.0], ref)


@given(st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=2, max_size=50))
def test_cdv_accepts_own_statistics(samples):
    ref = DistributionStats.from_samples(samples)
    assert (ref.std == 0) == all(s == samples[0] for s in samples)
    assert cdv_check(samples, ref).accept


def test_adaptive_threshold_bounds():
    t = AdaptiveThreshold()
    for _ in range(100):
        t.report(True)
    assert t.c == 5.0
    for _ in range(200):
        t.report(False)
    assert t.c == 2.0
