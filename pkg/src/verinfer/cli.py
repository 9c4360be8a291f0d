"""``verinfer`` command line.

Exit status: 0 success, 1 verification or consensus failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

from .algebra import get_profile
from .consensus import ConsensusConfig, DistributionStats, cdv_check, decide, dumps_records
from .errors import MalformedProof, VerinferError
from .gadgets import build_function_table
from .model import (
    ModelSpec,
    fixture_model,
    forward,
    perturbation,
    privatize_embedding,
    random_input,
    random_mlp,
    read_tensor,
    split_forward,
    tiny_model,
    write_tensor,
)
from .rand import Csprng
from .zkdps import (
    ActivationOpening,
    WeightCommitments,
    commit_shard,
    prove_plan,
    restore_witness,
    setup_key,
    verify_chain,
    verify_shard,
)

OK, FAIL, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _rng(seed) -> Csprng:
    return Csprng(seed)


def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _shard_paths(out: str, n: int) -> list[Path]:
    path = Path(out)
    if n == 1:
        return [path]
    return [path.with_name(f"{path.stem}.{i}{path.suffix}") for i in range(1, n + 1)]


def _ranges(num_layers: int, cuts) -> list[tuple[int, int]]:
    cuts = sorted(set(cuts or ()))
    if any(not 1 <= k < num_layers for k in cuts):
        raise UsageError(f"cut points must lie in 1..{num_layers - 1}")
    bounds = [0, *cuts, num_layers]
    return [(a + 1, b) for a, b in zip(bounds, bounds[1:])]


def _load_blinds(path) -> tuple[str, dict]:
    data = json.loads(Path(path).read_text())
    return data["profile"], {int(i): tuple(v) for i, v in data["blinds"].items()}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_fixture(args) -> int:
    seed = 0 if args.seed is None else args.seed
    model = {"fixture": lambda: fixture_model(seed), "tiny": lambda: tiny_model(seed), "mlp8": lambda: random_mlp(seed, [6, 8, 8, 8, 4])}[args.kind]()
    model.save(args.model_out)
    if args.input_out:
        write_tensor(args.input_out, random_input(model, random.Random(seed)))
    print(f"wrote {args.model_out}" + (f" and {args.input_out}" if args.input_out else ""))
    return OK


def cmd_commit(args) -> int:
    model = ModelSpec.load(args.model)
    curve = get_profile(args.profile)
    key = setup_key(curve, model)
    public, witness = commit_shard(key, model, _rng(args.seed).fork("weights"))
    Path(args.out).write_bytes(public.to_bytes())
    witness_path = args.witness or f"{args.out}.witness.json"
    blinds = {str(i): list(b) for i, b in witness.blinds().items()}
    Path(witness_path).write_text(json.dumps({"profile": args.profile, "blinds": blinds}, indent=1) + "\n")
    print(f"wrote {args.out} ({len(public.entries)} layers) and private blinds to {witness_path}")
    return OK


def cmd_prove(args) -> int:
    model = ModelSpec.load(args.model)
    x = read_tensor(args.input)
    curve = get_profile(args.profile)
    key = setup_key(curve, model)
    rng = _rng(args.seed)
    if args.witness:
        profile, blinds = _load_blinds(args.witness)
        if profile != args.profile:
            raise UsageError(f"witness file is for profile {profile}, not {args.profile}")
        witness = restore_witness(key, model, blinds)
        public = witness.public(curve.pid)
    else:
        public, witness = commit_shard(key, model, rng.fork("weights"))
    if args.commitments:
        Path(args.commitments).write_bytes(public.to_bytes())
    outs = prove_plan(key, model, witness, _ranges(model.num_layers, args.cut), x, rng.fork("prove"))
    for path, out in zip(_shard_paths(args.out, len(outs)), outs):
        blob = out.proof.to_bytes(curve)
        path.write_bytes(blob)
        print(f"{path}\tlayers {out.proof.first}-{out.proof.last}\t{len(blob)} bytes")
        print(f"prover time {out.seconds:.3f}s for {path}", file=sys.stderr)
    if args.openings:
        first, last = outs[0].input_opening, outs[-1].output_opening
        doc = {
            "input": {"values": list(first.values), "blind": first.blind},
            "output": {"values": list(last.values), "blind": last.blind},
        }
        Path(args.openings).write_text(json.dumps(doc, indent=1) + "\n")
    _emit("".join(f"{v}\n" for v in outs[-1].output), args.output)
    return OK


def _opening(d) -> ActivationOpening:
    return ActivationOpening(tuple(int(v) for v in d["values"]), int(d["blind"]))


def cmd_verify(args) -> int:
    model = ModelSpec.load(args.model).public()
    curve = get_profile(args.profile)
    key = setup_key(curve, model)
    commitments = WeightCommitments.from_bytes(Path(args.commitments).read_bytes(), model)
    blobs = [Path(p).read_bytes() for p in args.proof]
    try:
        if args.openings:
            doc = json.loads(Path(args.openings).read_text())
            report = verify_chain(key, model, commitments, blobs, _opening(doc["input"]), _opening(doc["output"]))
        else:
            report = verify_chain_links(key, model, commitments, blobs)
    except MalformedProof as exc:
        print(f"REJECT: malformed proof: {exc}", file=sys.stderr)
        if args.report == "jsonl":
            sys.stdout.write(dumps_records([{"overall": False, "failing_check": f"malformed proof: {exc}"}]))
        return FAIL
    if args.report == "jsonl":
        records = report.records()
        if not args.timings:
            for r in records:
                r.pop("verifier_seconds", None)
                r.pop("prover_seconds", None)
        sys.stdout.write(dumps_records(records))
    else:
        for lr in report.layers:
            print(f"layer {lr.index:>3} {lr.gadget:<7} {'ok' if lr.ok else 'FAILED ' + lr.reason}")
        print(f"{'ACCEPT' if report.ok else 'REJECT'} ({report.proof_bytes} proof bytes, {report.verifier_seconds:.3f}s)")
    if not report.ok:
        where = f"layer {report.failing_layer}" if report.failing_layer is not None else "proof"
        print(f"REJECT at {where}: {report.failing_check}", file=sys.stderr)
        return FAIL
    return OK


def verify_chain_links(key, model, commitments, blobs):
    """Chain check without end-to-end openings: each shard and its boundary link."""
    from .zkdps import ShardProof, VerificationReport

    total = VerificationReport(True)
    previous = None
    expected = 1
    for blob in blobs:
        rep = verify_shard(key, model, commitments, blob, previous_out=previous)
        total.layers.extend(rep.layers)
        total.proof_bytes += rep.proof_bytes
        total.verifier_seconds += rep.verifier_seconds
        if not rep.ok:
            total.ok, total.failing_check = False, rep.failing_check
            return total
        parsed = ShardProof.from_bytes(blob, model)
        if parsed.first != expected:
            total.ok, total.failing_check = False, "shards out of order"
            return total
        expected = parsed.last + 1
        previous = parsed.c_out
    if expected != model.num_layers + 1:
        total.ok, total.failing_check = False, "shards do not cover the model"
    return total


def cmd_infer(args) -> int:
    model = ModelSpec.load(args.model)
    x = read_tensor(args.input)
    if args.cut is None:
        if args.epsilon is not None:
            raise UsageError("--epsilon needs --cut")
        y, _ = forward(model, x)
    else:
        if len(args.cut) != 1:
            raise UsageError("split inference takes a single --cut")
        Z, handle = split_forward(model, x, args.cut[0])
        if args.epsilon is not None:
            Zn = privatize_embedding(Z, args.epsilon, args.sensitivity, model.input_scale, seed=args.seed)
            print(json.dumps(perturbation(Z, Zn, model.input_scale)), file=sys.stderr)
            Z = Zn
        y = handle.resume(Z)
    _emit("".join(f"{v}\n" for v in y), args.out)
    return OK


def cmd_simulate(args) -> int:
    from .netsim import Scenario, run_scenario

    scenario = Scenario.load(args.scenario)
    proof = None if args.proof_mode is None else args.proof_mode == "on"
    profile = args.profile if args.profile_given else None
    scenario = scenario.with_overrides(seed=args.seed, redundancy=args.redundancy, proof_mode=proof, profile=profile)
    if args.cut:
        scenario = scenario.with_overrides(cuts=tuple(args.cut))
    result = run_scenario(scenario)
    _emit(result.log(), args.log)
    verdict = "VERIFIED" if result.ok else f"FAILED: {result.reason}"
    flagged = f" flagged {', '.join(result.flagged)}" if result.flagged else ""
    print(f"{verdict}{flagged}; output {list(result.output) if result.output else None}", file=sys.stderr)
    return OK if result.ok else FAIL


def cmd_consensus(args) -> int:
    rows = [json.loads(line) for line in Path(args.outputs).read_text().splitlines() if line.strip()]
    if args.cdv:
        if not args.reference:
            raise UsageError("--cdv needs --reference MEAN STD N")
        mu, sd, n = args.reference
        ref = DistributionStats(float(mu), float(sd), int(n))
        decision = cdv_check([float(r["value"]) for r in rows], ref, args.c)
        rec = {"accept": decision.accept, "observed_mean": decision.observed_mean, "threshold": decision.threshold, "n": decision.n}
        sys.stdout.write(dumps_records([rec]))
        return OK if decision.accept else FAIL
    outputs = []
    for r in rows:
        out = bytes.fromhex(r["hex"]) if "hex" in r else tuple(int(v) for v in r["output"])
        outputs.append((str(r["node"]), out))
    quorum = None if args.quorum is None else Fraction(args.quorum)
    result = decide(outputs, ConsensusConfig(redundancy=args.redundancy or len(outputs), quorum=quorum))
    sys.stdout.write(dumps_records(result.records(0, 0, outputs)))
    print(f"{result.status}; dissenters {list(result.dissenters)}", file=sys.stderr)
    return OK if result.verified else FAIL


def cmd_table(args) -> int:
    table = build_function_table(args.function, (args.domain[0], args.domain[1]), args.scale)
    _emit("".join(f"{x} {y}\n" for x, y in table.rows), args.out)
    return OK


def cmd_acceptance(args) -> int:
    from . import acceptance

    numbers = args.criteria or sorted(acceptance.CRITERIA)
    bad = [n for n in numbers if n not in acceptance.CRITERIA]
    if bad:
        raise UsageError(f"unknown criteria {bad}; choose from 1..{len(acceptance.CRITERIA)}")
    ok = True
    for n in numbers:
        res = acceptance.run(n)
        ok &= res.ok
        if args.report == "jsonl":
            sys.stdout.write(dumps_records([{"criterion": n, "ok": res.ok, "title": res.title, "detail": res.detail}]))
        else:
            print(res.line(), flush=True)
    return OK if ok else FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--profile", choices=("test", "main"), default="main", help="curve profile (default main)")
    common.add_argument("--seed", type=int, default=None, help="deterministic randomness; default draws from the OS")

    parser = argparse.ArgumentParser(prog="verinfer", description="Prove, verify and simulate sharded inference of small quantized networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixture", parents=[common], help="write a demo model and input")
    p.add_argument("--kind", choices=("fixture", "tiny", "mlp8"), default="fixture")
    p.add_argument("--model-out", required=True)
    p.add_argument("--input-out")
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("commit", parents=[common], help="commit to a model's weights")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="public commitments file")
    p.add_argument("--witness", help="private blinds file (default OUT.witness.json)")
    p.set_defaults(func=cmd_commit)

    p = sub.add_parser("prove", parents=[common], help="run the model and prove it")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="proof container; with cuts, one file per shard (NAME.i.EXT)")
    p.add_argument("--witness", help="blinds from `commit`; otherwise weights are committed here")
    p.add_argument("--commitments", help="write the weight commitments used")
    p.add_argument("--openings", help="write input/output openings (JSON)")
    p.add_argument("--output", help="write the model output tensor (default stdout)")
    p.add_argument("--cut", type=int, action="append", help="end a shard after layer K (repeatable)")
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("verify", parents=[common], help="verify proof containers against weight commitments")
    p.add_argument("--model", required=True, help="model file (only the architecture is read)")
    p.add_argument("--commitments", required=True)
    p.add_argument("--proof", required=True, nargs="+")
    p.add_argument("--openings", help="check the claimed input and output as well")
    p.add_argument("--report", choices=("text", "jsonl"), default="text")
    p.add_argument("--timings", action="store_true", help="include wall-clock times in jsonl reports")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("infer", parents=[common], help="plain forward pass, optionally split with noise")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--cut", type=int, action="append", help="split after layer K")
    p.add_argument("--epsilon", type=float, help="privacy budget for noise on the cut activation")
    p.add_argument("--sensitivity", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("simulate", parents=[common], help="run a simulated network session")
    p.add_argument("--scenario", required=True)
    p.add_argument("--redundancy", type=int)
    p.add_argument("--proof-mode", choices=("on", "off"))
    p.add_argument("--cut", type=int, action="append")
    p.add_argument("--log", help="session log path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("consensus", parents=[common], help="vote over replica outputs")
    p.add_argument("--outputs", required=True, help='JSON lines {"node": ..., "output": [...]} (or "value" with --cdv)')
    p.add_argument("--redundancy", type=int)
    p.add_argument("--quorum", help="fraction in (1/2, 1], e.g. 2/3")
    p.add_argument("--cdv", action="store_true", help="distribution check instead of an exact vote")
    p.add_argument("--reference", nargs=3, metavar=("MEAN", "STD", "N"))
    p.add_argument("--c", type=float, default=3.0)
    p.set_defaults(func=cmd_consensus)

    p = sub.add_parser("table", parents=[common], help="emit a function lookup table")
    p.add_argument("--function", required=True)
    p.add_argument("--domain", type=int, nargs=2, required=True, metavar=("LO", "HI"))
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("acceptance", parents=[common], help="run acceptance criteria by number")
    p.add_argument("criteria", type=int, nargs="*")
    p.add_argument("--report", choices=("text", "jsonl"), default="text")
    p.set_defaults(func=cmd_acceptance)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.profile_given = any(a == "--profile" or a.startswith("--profile=") for a in argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"verinfer: {exc}", file=sys.stderr)
        return USAGE
    except (VerinferError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"verinfer: {type(exc).__name__}: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
