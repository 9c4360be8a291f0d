import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from verinfer.errors import BadCutPoint, MagnitudeOverflow, NonPositiveEpsilon
from verinfer.model import (
    ModelSpec,
    ShardPlan,
    dequantize,
    fixture_model,
    forward,
    perturbation,
    privatize_embedding,
    quantize,
    random_input,
    random_mlp,
    run_plan,
    split_forward,
    tiny_model,
)

MODEL = fixture_model(0)


@given(st.lists(st.floats(min_value=-100, max_value=100), max_size=10), st.sampled_from([1, 4, 16, 256]))
def test_quantize_round_trip_error(values, scale):
    q = quantize(values, scale)
    back = dequantize(q, scale)
    assert all(abs(a - b) <= 0.5 / scale + 1e-12 for a, b in zip(values, back))


def test_quantize_rejects_bad_scale_and_overflow():
    with pytest.raises(ValueError):
        quantize([1.0], 3)
    with pytest.raises(MagnitudeOverflow):
        quantize([2.0**40], 1)


def test_model_json_round_trip(tmp_path):
    MODEL.save(tmp_path / "m.json")
    again = ModelSpec.load(tmp_path / "m.json")
    assert again == MODEL
    x = random_input(MODEL, random.Random(0))
    assert forward(again, x) [0] == forward(MODEL, x)[0]


def test_forward_is_deterministic_and_traced():
    x = random_input(MODEL, random.Random(1))
    y, trace = forward(MODEL, x)
    assert y == forward(MODEL, x)[0] == trace.output
    assert len(y) == MODEL.output_dim
    for i in range(2, MODEL.num_layers + 1):
        assert trace.layer_input(i) == trace.layer_output(i - 1)


@settings(max_examples=30)
@given(st.integers(min_value=0, max_value=10**6))
def test_any_plan_matches_forward(seed):
    R = random.Random(seed)
    x = random_input(MODEL, R)
    plan = ShardPlan.random(MODEL.num_layers, R)
    assert run_plan(MODEL, plan, x) == forward(MODEL, x)[0]


def test_plan_validation():
    with pytest.raises(BadCutPoint):
        ShardPlan(((1, 2), (4, MODEL.num_layers)), (("a",), ("b",)), MODEL.num_layers)
    with pytest.raises(ValueError):
        ShardPlan(((1, MODEL.num_layers),), (("a", "a"),), MODEL.num_layers)
    assert ShardPlan.from_cuts(4, [1, 3]).ranges == ((1, 1), (2, 3), (4, 4))


def test_split_forward():
    x = random_input(MODEL, random.Random(2))
    y = forward(MODEL, x)[0]
    for k in range(1, MODEL.num_layers):
        Z, handle = split_forward(MODEL, x, k)
        assert handle.resume(Z) == y
    for k in (0, MODEL.num_layers):
        with pytest.raises(BadCutPoint):
            split_forward(MODEL, x, k)


def test_privatize_embedding():
    Z = [3, -2, 7]
    assert privatize_embedding(Z, math.inf, 1.0, 16, seed=0) == tuple(Z)
    assert privatize_embedding(Z, 1.0, 1.0, 16, seed=4) == privatize_embedding(Z, 1.0, 1.0, 16, seed=4)
    with pytest.raises(NonPositiveEpsilon):
        privatize_embedding(Z, 0.0, 1.0, 16)
    noised = privatize_embedding([0] * 20000, 2.0, 1.0, 16, seed=1)
    std = np.std(np.asarray(noised) / 16)
    assert abs(std - math.sqrt(2) / 2) / (math.sqrt(2) / 2) < 0.05
    assert perturbation([0, 0], [16, -32], 16) == {"linf": 2.0, "l2": math.sqrt(5)}


def test_fixtures_are_seeded():
    assert fixture_model(1) == fixture_model(1)
    assert fixture_model(1) != fixture_model(2)
    assert tiny_model(0).num_layers >= 2
    assert random_mlp(3, [4, 4, 2]).output_dim == 2


def test_public_view_strips_weights():
    pub = MODEL.public()
    assert pub.num_layers == MODEL.num_layers
    assert all(not l.has_weights for l in pub.layers)
