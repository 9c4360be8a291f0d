import json
import shutil
import subprocess
from pathlib import Path

import pytest

from verinfer.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def workspace(tmp_path):
    assert main(["fixture", "--kind", "fixture", "--seed", "0", "--model-out", str(tmp_path / "m.json"), "--input-out", str(tmp_path / "x.txt")]) == 0
    assert main(["commit", "--profile", "test", "--seed", "1", "--model", str(tmp_path / "m.json"), "--out", str(tmp_path / "w.zkwc")]) == 0
    return tmp_path


def _prove(d, out, *extra):
    return main(
        ["prove", "--profile", "test", "--seed", "2", "--model", str(d / "m.json"), "--input", str(d / "x.txt"),
         "--witness", str(d / "w.zkwc.witness.json"), "--out", str(d / out), *extra]
    )


def _verify(d, *proofs, extra=()):
    return main(["verify", "--profile", "test", "--model", str(d / "m.json"), "--commitments", str(d / "w.zkwc"), "--proof", *[str(d / p) for p in proofs], *extra])


def test_prove_verify_round_trip(workspace, capsys):
    d = workspace
    assert _prove(d, "p.zkdp", "--openings", str(d / "o.json")) == 0
    assert _verify(d, "p.zkdp", extra=["--openings", str(d / "o.json")]) == 0


def test_tampered_proof_exits_1(workspace, capsys):
    d = workspace
    assert _prove(d, "p.zkdp") == 0
    blob = bytearray((d / "p.zkdp").read_bytes())
    blob[len(blob) // 2] ^= 0xFF
    (d / "bad.zkdp").write_bytes(bytes(blob))
    capsys.readouterr()
    assert _verify(d, "bad.zkdp") == 1
    assert "REJECT" in capsys.readouterr().err


def test_cut_chain_and_order(workspace, capsys):
    d = workspace
    assert _prove(d, "c.zkdp", "--cut", "2") == 0
    assert _verify(d, "c.1.zkdp", "c.2.zkdp", extra=["--report", "jsonl"]) == 0
    lines = [json.loads(l) for l in capsys.readouterr().out.splitlines() if l.startswith("{")]
    assert lines
    assert _verify(d, "c.2.zkdp", "c.1.zkdp") == 1


def test_prove_is_byte_identical_for_a_seed(workspace):
    d = workspace
    assert _prove(d, "a.zkdp") == 0 and _prove(d, "b.zkdp") == 0
    assert (d / "a.zkdp").read_bytes() == (d / "b.zkdp").read_bytes()


def test_usage_errors_exit_2(workspace, capsys):
    assert main(["verify", "--bogus"]) == 2
    assert main(["prove", "--profile", "test", "--model", str(workspace / "missing.json"), "--input", "x", "--out", "y"]) == 2
    assert main(["infer", "--model", str(workspace / "m.json"), "--input", str(workspace / "x.txt"), "--cut", "2", "--epsilon", "0"]) == 2
    assert main([]) == 2


def test_infer_and_table(workspace, capsys):
    d = workspace
    assert main(["infer", "--model", str(d / "m.json"), "--input", str(d / "x.txt")]) == 0
    assert main(["infer", "--model", str(d / "m.json"), "--input", str(d / "x.txt"), "--cut", "2", "--epsilon", "1", "--seed", "3"]) == 0
    assert main(["table", "--function", "sigmoid", "--domain", "-4", "3", "--scale", "4"]) == 0
    assert capsys.readouterr().out.strip().endswith("3 3")


def test_consensus_command(tmp_path, capsys):
    f = tmp_path / "o.jsonl"
    f.write_text('{"node":"a","output":[1]}\n{"node":"b","output":[1]}\n{"node":"c","output":[2]}\n')
    assert main(["consensus", "--outputs", str(f)]) == 0
    f.write_text('{"node":"a","output":[1]}\n{"node":"b","output":[2]}\n')
    assert main(["consensus", "--outputs", str(f)]) == 1


def test_simulate_scenario(tmp_path, capsys):
    log1, log2 = tmp_path / "1.jsonl", tmp_path / "2.jsonl"
    sc = str(SCENARIOS / "three_nodes.json")
    assert main(["simulate", "--scenario", sc, "--seed", "7", "--log", str(log1)]) == 0
    assert main(["simulate", "--scenario", sc, "--seed", "7", "--log", str(log2)]) == 0
    assert log1.read_bytes() == log2.read_bytes()


def test_console_script_installed():
    exe = shutil.which("verinfer")
    if exe is None:
        pytest.skip("console script not on PATH")
    out = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "prove" in out.stdout
