"""Consensus over redundant shard executions.

CBV votes on canonical output bytes.  CDV compares the mean of observed outputs
to reference statistics with a z-test, for deployments where replicas are not
bit-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import DegenerateReference, NodeUnavailable, ShardFailed
from .model import ModelSpec, run_layers

VERIFIED = "verified"
AMBIGUOUS = "ambiguous"
FAILED = "failed"


def canonical(output) -> bytes:
    """Bytes used for voting: raw bytes as given, integer tensors as decimal lines."""
    if isinstance(output, (bytes, bytearray)):
        return bytes(output)
    return "".join(f"{int(v)}\n" for v in output).encode()


def digest(output) -> str:
    return hashlib.sha256(canonical(output)).hexdigest()


@dataclass(frozen=True)
class ConsensusConfig:
    """``quorum=None`` is a simple majority; otherwise a fraction in (1/2, 1]."""

    redundancy: int = 1
    quorum: Fraction | None = None
    cdv: bool = False
    c: float = 3.0

    def __post_init__(self):
        if self.redundancy < 1:
            raise ValueError("redundancy must be at least 1")
        if self.quorum is not None:
            q = Fraction(self.quorum)
            if not Fraction(1, 2) < q <= 1:
                raise ValueError("quorum fraction must lie in (1/2, 1]")
            object.__setattr__(self, "quorum", q)

    def required(self, n: int) -> int:
        need = n // 2 + 1
        if self.quorum is not None:
            need = max(need, math.ceil(self.quorum * n))
        return need


@dataclass(frozen=True)
class ConsensusResult:
    value: bytes | None
    tally: dict
    dissenters: tuple[str, ...]
    status: str
    votes: int

    @property
    def verified(self) -> bool:
        return self.status == VERIFIED

    def output(self) -> tuple[int, ...] | None:
        """The agreed value decoded back into an integer tensor."""
        if self.value is None:
            return None
        return tuple(int(v) for v in self.value.decode().split())

    def records(self, round_id: int = 0, shard_id: int = 0, outputs=()) -> list[dict]:
        rows = [
            {"round": round_id, "shard": shard_id, "node": node, "digest": digest(out), "verdict": self.status}
            for node, out in outputs
        ]
        rows.append(
            {
                "round": round_id,
                "shard": shard_id,
                "status": self.status,
                "agreed": None if self.value is None else hashlib.sha256(self.value).hexdigest(),
                "tally": self.tally,
                "dissenters": list(self.dissenters),
            }
        )
        return rows


def decide(outputs: Sequence[tuple[str, object]], config: ConsensusConfig = ConsensusConfig()) -> ConsensusResult:
    """Exact-match vote; ties never resolve on their own."""
    if not outputs:
        raise ValueError("decide needs at least one output")
    encoded = [(node, canonical(out)) for node, out in outputs]
    counts = Counter(val for _, val in encoded)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    top_value, top = ranked[0]
    tally = {hashlib.sha256(v).hexdigest(): n for v, n in ranked}
    n = len(encoded)
    if len(ranked) > 1 and ranked[1][1] == top:
        return ConsensusResult(None, tally, (), AMBIGUOUS, n)
    dissenters = tuple(sorted(node for node, val in encoded if val != top_value))
    status = VERIFIED if top >= config.required(n) else FAILED
    return ConsensusResult(top_value if status == VERIFIED else None, tally, dissenters, status, n)


def reconstruct(results: Sequence[ConsensusResult]) -> tuple[int, ...]:
    """Layer-wise shards compose sequentially, so Y_final is the last shard's agreed output."""
    if not results:
        raise ShardFailed("no shard results")
    for i, res in enumerate(results, start=1):
        if not res.verified:
            raise ShardFailed(f"shard {i} is {res.status}")
    return results[-1].output()


# ---------------------------------------------------------------------------
# redundant execution (simulation)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Replica:
    """A node's behaviour when executing a shard.

    ``fault`` is one of ``honest``, ``random`` (perturb one coordinate), ``collude``
    (every colluder returns the same wrong tensor) or ``garbage`` (arbitrary bytes).
    """

    node_id: str
    fault: str = "honest"
    available: bool = True


def byzantine_output(replica: Replica, honest: Sequence[int], rng: random.Random):
    if replica.fault == "honest":
        return tuple(honest)
    if replica.fault == "collude":
        return tuple(v + 1 for v in honest)
    if replica.fault == "garbage":
        return bytes(rng.getrandbits(8) for _ in range(8))
    out = list(honest)
    i = rng.randrange(len(out))
    out[i] += rng.choice([-1, 1]) * rng.randint(1, 1 << 8)
    return tuple(out)


def run_redundant(
    model: ModelSpec, first: int, last: int, x: Sequence[int], replicas: Sequence[Replica], seed: int = 0
) -> list[tuple[str, object]]:
    if not replicas:
        raise ValueError("redundant execution needs at least one node")
    rng = random.Random(seed)
    outputs = []
    for rep in replicas:
        if not rep.available:
            raise NodeUnavailable(f"node {rep.node_id} is unavailable")
        y, _ = run_layers(model, x, first, last, record=False)
        outputs.append((rep.node_id, byzantine_output(rep, y, rng)))
    return outputs


# ---------------------------------------------------------------------------
# distribution verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistributionStats:
    mean: float
    std: float
    n: int
    moments: tuple[float, ...] = ()

    def __post_init__(self):
        if self.std < 0:
            raise ValueError("standard deviation is non-negative")
        if self.n < 1:
            raise ValueError("sample count is at least 1")

    @classmethod
    def from_samples(cls, samples: Sequence[float], higher: int = 0) -> DistributionStats:
        n = len(samples)
        if n < 1:
            raise ValueError("no samples")
        mu = samples[0] if all(s == samples[0] for s in samples) else math.fsum(samples) / n
        # scale by the largest deviation so tiny spreads do not underflow to zero
        m = max((abs(s - mu) for s in samples), default=0.0)
        sd = m * math.sqrt(math.fsum(((s - mu) / m) ** 2 for s in samples) / (n - 1)) if n > 1 and m > 0 else 0.0
        moments = tuple(
            math.fsum(((s - mu) / sd) ** k for s in samples) / n if sd > 0 else 0.0 for k in range(3, 3 + higher)
        )
        return cls(mu, sd, n, moments)


@dataclass(frozen=True)
class CdvDecision:
    accept: bool
    observed_mean: float
    threshold: float
    n: int

    def __bool__(self) -> bool:
        return self.accept


def cdv_check(observed, reference: DistributionStats, c: float = 3.0) -> CdvDecision:
    """Accept iff |mean(observed) - mu_ref| <= c * sigma_ref / sqrt(n)."""
    if isinstance(observed, DistributionStats):
        mu, n, identical = observed.mean, observed.n, observed.std == 0
    else:
        n = len(observed)
        if n < 2:
            raise ValueError("CDV needs at least two observations")
        identical = all(o == observed[0] for o in observed)
        mu = observed[0] if identical else math.fsum(observed) / n
    if n < 2:
        raise ValueError("CDV needs at least two observations")
    if c <= 0:
        raise ValueError("the multiplier c must be positive")
    if reference.std == 0:
        if not identical:
            raise DegenerateReference("reference has zero spread but observations differ")
        return CdvDecision(mu == reference.mean, mu, 0.0, n)
    threshold = c * reference.std / math.sqrt(n)
    return CdvDecision(abs(mu - reference.mean) <= threshold, mu, threshold, n)


@dataclass
class AdaptiveThreshold:
    """Multiplier c in [2, 5], starting at 3.

    Each resolved rejection is reported as a false alarm or a true detection.  If
    the false-alarm share of the last ``window`` reports exceeds ``target``, c grows
    by 10%; if a full window passes with none, it shrinks by 10%.
    """

    c: float = 3.0
    window: int = 20
    target: float = 0.05
    lo: float = 2.0
    hi: float = 5.0
    _recent: deque = field(default_factory=deque, repr=False)

    def report(self, false_alarm: bool) -> float:
        self._recent.append(bool(false_alarm))
        while len(self._recent) > self.window:
            self._recent.popleft()
        rate = sum(self._recent) / len(self._recent)
        if rate > self.target:
            self.c *= 1.1
        elif len(self._recent) == self.window and rate == 0:
            self.c *= 0.9
        self.c = max(self.lo, min(self.hi, self.c))
        return self.c


def dumps_records(records: Sequence[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in records)
