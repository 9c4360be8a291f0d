import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from verinfer.algebra import get_profile
from verinfer.errors import MalformedProof
from verinfer.model import fixture_model, forward, random_input, tiny_model
from verinfer.rand import Csprng
from verinfer.zkdps import (
    MAGIC,
    VERSION,
    ShardProof,
    WeightCommitments,
    commit_shard,
    layer_label,
    prove_plan,
    prove_shard,
    setup_key,
    verify_chain,
    verify_shard,
)

CURVE = get_profile("test")
MODEL = fixture_model(0)
KEY = setup_key(CURVE, MODEL)
PUBLIC, WITNESS = commit_shard(KEY, MODEL, Csprng(b"w"))
X = random_input(MODEL, random.Random(0))
OUT = prove_shard(KEY, MODEL, WITNESS, X, Csprng(b"p"))
BLOB = OUT.proof.to_bytes(CURVE)


def test_honest_proof_verifies_and_matches_forward():
    assert OUT.output == forward(MODEL, X)[0]
    rep = verify_shard(KEY, MODEL.public(), PUBLIC, BLOB)
    assert rep.ok and rep.failing_layer is None
    assert verify_chain(KEY, MODEL, PUBLIC, [BLOB], OUT.input_opening, OUT.output_opening).ok


def test_container_header_and_labels():
    assert BLOB[:4] == MAGIC and BLOB[4] == VERSION and BLOB[5] == CURVE.pid
    assert int.from_bytes(BLOB[6:10], "big") == 1
    assert int.from_bytes(BLOB[10:14], "big") == MODEL.num_layers
    for lp in OUT.proof.layers:
        assert lp.label == layer_label(lp.index, lp.kind) == f"zkdps/v1/layer/{lp.index}/{lp.kind}"


def test_parse_round_trip_is_exact():
    assert ShardProof.from_bytes(BLOB, MODEL).to_bytes(CURVE) == BLOB


def test_commitments_round_trip():
    assert WeightCommitments.from_bytes(PUBLIC.to_bytes(), MODEL) == PUBLIC


@pytest.mark.parametrize("cut", [b"", BLOB[:3], BLOB[:-1], BLOB + b"\x00"])
def test_truncated_or_padded_containers_are_malformed(cut):
    with pytest.raises(MalformedProof):
        ShardProof.from_bytes(cut, MODEL)


def test_bad_magic_and_version():
    for pos in (0, 4):
        bad = bytearray(BLOB)
        bad[pos] ^= 1
        with pytest.raises(MalformedProof):
            ShardProof.from_bytes(bytes(bad), MODEL)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=len(BLOB) - 1), st.integers(min_value=1, max_value=255))
def test_any_byte_change_is_rejected(pos, mask):
    bad = bytearray(BLOB)
    bad[pos] ^= mask
    try:
        rep = verify_shard(KEY, MODEL, PUBLIC, bytes(bad), c_in=OUT.proof.c_in)
    except MalformedProof:
        return
    assert not rep.ok


def test_other_model_weights_rejected():
    other_public, _ = commit_shard(KEY, fixture_model(1), Csprng(b"w"))
    rep = verify_shard(KEY, MODEL, other_public, BLOB)
    assert not rep.ok and "weight commitment" in rep.failing_check


def test_sharded_chain():
    ranges = [(1, 2), (3, MODEL.num_layers)]
    outs = prove_plan(KEY, MODEL, WITNESS, ranges, X, Csprng(b"plan"))
    blobs = [o.proof.to_bytes(CURVE) for o in outs]
    assert outs[-1].output == forward(MODEL, X)[0]
    assert verify_chain(KEY, MODEL, PUBLIC, blobs, outs[0].input_opening, outs[-1].output_opening).ok
    assert not verify_chain(KEY, MODEL, PUBLIC, blobs[::-1], outs[0].input_opening, outs[-1].output_opening).ok
    assert not verify_chain(KEY, MODEL, PUBLIC, blobs[:1], outs[0].input_opening, outs[0].output_opening).ok


def test_proving_is_deterministic():
    again = prove_shard(KEY, MODEL, WITNESS, X, Csprng(b"p")).proof.to_bytes(CURVE)
    assert again == BLOB


def test_tiny_model_main_profile():
    curve = get_profile("main")
    model = tiny_model(0)
    key = setup_key(curve, model)
    public, witness = commit_shard(key, model, Csprng(1))
    out = prove_shard(key, model, witness, random_input(model, random.Random(1)), Csprng(2))
    assert verify_shard(key, model, public, out.proof.to_bytes(curve)).ok
