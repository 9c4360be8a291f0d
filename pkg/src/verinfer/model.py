"""Fixed-point feed-forward networks with exact integer semantics.

Activations are signed integers at one model-wide scale ``input_scale``.  A linear
layer holds weights at its own ``scale`` and biases at ``input_scale * scale``; its
accumulator is divided back by ``scale`` (nearest, ties up), so every layer maps
activations at ``input_scale`` to activations at ``input_scale``.  Working in
signed integers is the same as working in the field under the centered lift as
long as nothing overflows, which :func:`forward` checks.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .algebra import PrimeField
from .errors import BadCutPoint, EntryNotInTable, MagnitudeOverflow, NonPositiveEpsilon, ShapeMismatch
from .gadgets.linear import linear_forward
from .gadgets.relu import decompose
from .gadgets.tables import LookupTable, build_function_table

MODEL_FORMAT = "verinfer-model"
MODEL_VERSION = 1
DEFAULT_BITS = 32
KINDS = ("linear", "relu", "lookup")


# ---------------------------------------------------------------------------
# quantization
# ---------------------------------------------------------------------------


def _check_scale(scale: int) -> None:
    if scale < 1 or scale & (scale - 1):
        raise ValueError(f"scale {scale} is not a power of two")


def quantize(values, scale: int, field: PrimeField | None = None, bits: int = DEFAULT_BITS) -> list[int]:
    """Round ``value * scale`` half-to-even.

    Returns signed integers, or their centered lifts into ``field`` when one is given.
    """
    _check_scale(scale)
    out = []
    for v in values:
        q = round(float(v) * scale)
        if abs(q) >= 1 << bits:
            raise MagnitudeOverflow(f"{v} at scale {scale} needs more than {bits} bits")
        out.append(q)
    if field is not None:
        return [field.lift(q) for q in out]
    return out


def dequantize(values, scale: int, field: PrimeField | None = None) -> list[float]:
    _check_scale(scale)
    if field is not None:
        values = [field.signed(v) for v in values]
    return [v / scale for v in values]


# ---------------------------------------------------------------------------
# model definition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Layer:
    kind: str
    in_dim: int
    out_dim: int
    scale: int = 1
    weights: tuple[tuple[int, ...], ...] | None = None
    bias: tuple[int, ...] | None = None
    function: str | None = None
    domain: tuple[int, int] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.in_dim < 1 or self.out_dim < 1:
            raise ShapeMismatch("layer dimensions must be positive")
        _check_scale(self.scale)
        if self.kind != "linear" and self.in_dim != self.out_dim:
            raise ShapeMismatch(f"{self.kind} layers keep their width")
        if self.kind == "linear" and self.weights is not None:
            if len(self.weights) != self.out_dim or any(len(r) != self.in_dim for r in self.weights):
                raise ShapeMismatch("weight matrix does not match the layer shape")
            if self.bias is None or len(self.bias) != self.out_dim:
                raise ShapeMismatch("bias does not match the layer shape")
        if self.kind == "lookup" and (self.function is None or self.domain is None):
            raise ValueError("lookup layers name a function and a domain")

    @property
    def has_weights(self) -> bool:
        return self.weights is not None

    def multiply_count(self) -> int:
        """Cost estimate used by the scheduler."""
        if self.kind == "linear":
            return self.in_dim * self.out_dim
        return self.out_dim

    def table(self) -> LookupTable:
        return _table(self.function, self.domain, self.scale)

    def public(self) -> Layer:
        return replace(self, weights=None, bias=None)

    def to_json(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "linear":
            d.update({"in": self.in_dim, "out": self.out_dim, "scale": self.scale})
            d["weights"] = None if self.weights is None else [list(r) for r in self.weights]
            d["bias"] = None if self.bias is None else list(self.bias)
        elif self.kind == "relu":
            d["dim"] = self.out_dim
        else:
            d.update({"dim": self.out_dim, "function": self.function, "domain": list(self.domain), "scale": self.scale})
        return d

    @classmethod
    def from_json(cls, d: dict) -> Layer:
        kind = d.get("kind")
        if kind == "linear":
            w = d.get("weights")
            b = d.get("bias")
            return cls(
                "linear",
                int(d["in"]),
                int(d["out"]),
                int(d["scale"]),
                None if w is None else tuple(tuple(int(v) for v in row) for row in w),
                None if b is None else tuple(int(v) for v in b),
            )
        if kind == "relu":
            return cls("relu", int(d["dim"]), int(d["dim"]))
        if kind == "lookup":
            lo, hi = d["domain"]
            return cls("lookup", int(d["dim"]), int(d["dim"]), int(d["scale"]), function=d["function"], domain=(int(lo), int(hi)))
        raise ValueError(f"unknown layer kind {kind!r}")


_TABLE_CACHE: dict = {}


def _table(function, domain, scale) -> LookupTable:
    k = (function, tuple(domain), scale)
    if k not in _TABLE_CACHE:
        _TABLE_CACHE[k] = build_function_table(function, tuple(domain), scale)
    return _TABLE_CACHE[k]


@dataclass(frozen=True)
class ModelSpec:
    input_dim: int
    input_scale: int
    layers: tuple[Layer, ...]
    bits: int = DEFAULT_BITS

    def __post_init__(self):
        _check_scale(self.input_scale)
        if not self.layers:
            raise ValueError("a model has at least one layer")
        width = self.input_dim
        for i, layer in enumerate(self.layers, start=1):
            if layer.in_dim != width:
                raise ShapeMismatch(f"layer {i} expects width {layer.in_dim}, gets {width}")
            if layer.kind == "lookup" and layer.scale != self.input_scale:
                raise ValueError(f"layer {i}: table scale must equal the activation scale")
            width = layer.out_dim

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    def layer(self, index: int) -> Layer:
        """1-based."""
        return self.layers[index - 1]

    def public(self) -> ModelSpec:
        """Architecture only; what a verifier gets."""
        return replace(self, layers=tuple(layer.public() for layer in self.layers))

    def shard(self, first: int, last: int) -> ModelSpec:
        """Layers ``first..last`` (1-based, inclusive) as a model of their own."""
        if not 1 <= first <= last <= self.num_layers:
            raise BadCutPoint(f"bad layer range {first}..{last}")
        return replace(self, input_dim=self.layers[first - 1].in_dim, layers=self.layers[first - 1 : last])

    def to_json(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "input_dim": self.input_dim,
            "input_scale": self.input_scale,
            "bits": self.bits,
            "layers": [layer.to_json() for layer in self.layers],
        }

    @classmethod
    def from_json(cls, d: dict) -> ModelSpec:
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise ValueError("not a verinfer model file")
        return cls(
            int(d["input_dim"]),
            int(d["input_scale"]),
            tuple(Layer.from_json(x) for x in d["layers"]),
            int(d.get("bits", DEFAULT_BITS)),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"), sort_keys=True)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> ModelSpec:
        return cls.from_json(json.loads(Path(path).read_text()))


def read_tensor(path) -> list[int]:
    """Newline-delimited decimal integers."""
    return [int(line) for line in Path(path).read_text().split()]


def write_tensor(path, values: Sequence[int]) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in values))


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InferenceTrace:
    """Per-layer boundary tensors plus the witnesses the gadgets need.

    ``activations[0]`` is the input and ``activations[i]`` the output of layer i;
    ``first_layer`` is the model index of the first traced layer.
    """

    activations: tuple[tuple[int, ...], ...]
    relu_bits: dict = field(default_factory=dict)
    lookup_multiplicities: dict = field(default_factory=dict)
    remainders: dict = field(default_factory=dict)
    first_layer: int = 1

    @property
    def output(self) -> tuple[int, ...]:
        return self.activations[-1]

    def layer_input(self, index: int) -> tuple[int, ...]:
        return self.activations[index - self.first_layer]

    def layer_output(self, index: int) -> tuple[int, ...]:
        return self.activations[index - self.first_layer + 1]

    def to_bytes(self) -> bytes:
        doc = {
            "first": self.first_layer,
            "acts": [list(a) for a in self.activations],
            "bits": {str(k): [list(b) for b in v] for k, v in sorted(self.relu_bits.items())},
            "mult": {str(k): list(v) for k, v in sorted(self.lookup_multiplicities.items())},
            "rem": {str(k): list(v) for k, v in sorted(self.remainders.items())},
        }
        return json.dumps(doc, separators=(",", ":"), sort_keys=True).encode()


def _apply(layer: Layer, x: Sequence[int], bits: int, index: int, trace: InferenceTrace | None) -> list[int]:
    if layer.kind == "linear":
        if not layer.has_weights:
            raise ValueError("cannot execute a public (weightless) layer")
        P, y, rem = linear_forward(layer.weights, layer.bias, x, layer.scale)
        limit = 1 << bits
        for v, b in zip(P, layer.bias):
            if abs(v + b) >= limit:
                raise MagnitudeOverflow(f"layer {index}: accumulator {v + b} exceeds {bits} bits")
        if trace is not None:
            trace.remainders[index] = tuple(rem)
        return y
    if layer.kind == "relu":
        y = [max(0, v) for v in x]
        if trace is not None:
            trace.relu_bits[index] = tuple(tuple(decompose(v, bits)) for v in x)
        else:
            for v in x:
                if abs(v) >= 1 << bits:
                    raise MagnitudeOverflow(f"layer {index}: |{v}| exceeds {bits} bits")
        return y
    table = layer.table()
    try:
        y = table.apply(x)
    except EntryNotInTable as exc:
        raise EntryNotInTable(f"layer {index}: {exc}") from None
    if trace is not None:
        from .gadgets.lookup import multiplicities

        trace.lookup_multiplicities[index] = tuple(multiplicities(table, list(zip(x, y))))
    return y


def run_layers(model: ModelSpec, x: Sequence[int], first: int, last: int, *, record: bool = True):
    """Execute layers ``first..last`` (1-based, inclusive) on ``x``."""
    x = [int(v) for v in x]
    if len(x) != model.layer(first).in_dim:
        raise ShapeMismatch(f"input has {len(x)} entries, layer {first} expects {model.layer(first).in_dim}")
    acts = [tuple(x)]
    trace = InferenceTrace((), first_layer=first) if record else None
    for index in range(first, last + 1):
        x = _apply(model.layer(index), x, model.bits, index, trace)
        acts.append(tuple(x))
    if trace is not None:
        object.__setattr__(trace, "activations", tuple(acts))
    return acts[-1], trace


def forward(model: ModelSpec, x: Sequence[int]) -> tuple[tuple[int, ...], InferenceTrace]:
    return run_layers(model, x, 1, model.num_layers)


# ---------------------------------------------------------------------------
# sharding and split inference
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShardPlan:
    """Contiguous 1-based inclusive layer ranges and the nodes running each range."""

    ranges: tuple[tuple[int, int], ...]
    assignments: tuple[tuple[str, ...], ...]
    num_layers: int

    def __post_init__(self):
        if not self.ranges or len(self.ranges) != len(self.assignments):
            raise ValueError("one assignment per shard")
        expect = 1
        for first, last in self.ranges:
            if first != expect or last < first:
                raise BadCutPoint(f"shard ranges do not partition 1..{self.num_layers}")
            expect = last + 1
        if expect != self.num_layers + 1:
            raise BadCutPoint(f"shard ranges do not partition 1..{self.num_layers}")
        for nodes in self.assignments:
            if not nodes:
                raise ValueError("every shard needs an assignee")
            if len(set(nodes)) != len(nodes):
                raise ValueError("replicas of a shard run on distinct nodes")

    @property
    def redundancy(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.assignments)

    def __len__(self) -> int:
        return len(self.ranges)

    @classmethod
    def from_cuts(cls, num_layers: int, cuts: Sequence[int], assignments=None) -> ShardPlan:
        """Shards end after each cut layer; ``cuts`` are 1..L-1."""
        bounds = [0, *sorted(set(cuts)), num_layers]
        ranges = tuple((a + 1, b) for a, b in zip(bounds, bounds[1:]))
        if assignments is None:
            assignments = tuple((f"node{i}",) for i in range(len(ranges)))
        return cls(ranges, tuple(tuple(a) for a in assignments), num_layers)

    @classmethod
    def random(cls, num_layers: int, rng: random.Random, nodes: Sequence[str] = (), redundancy: int = 1) -> ShardPlan:
        cuts = [k for k in range(1, num_layers) if rng.random() < 0.5]
        plan = cls.from_cuts(num_layers, cuts)
        if nodes:
            plan = cls(plan.ranges, tuple(tuple(rng.sample(list(nodes), redundancy)) for _ in plan.ranges), num_layers)
        return plan


def run_plan(model: ModelSpec, plan: ShardPlan, x: Sequence[int]) -> tuple[int, ...]:
    if plan.num_layers != model.num_layers:
        raise ValueError("plan and model disagree on depth")
    for first, last in plan.ranges:
        x, _ = run_layers(model, x, first, last, record=False)
    return tuple(x)


@dataclass(frozen=True)
class ResumeHandle:
    model: ModelSpec
    cut: int

    def resume(self, Z: Sequence[int]) -> tuple[int, ...]:
        y, _ = run_layers(self.model, Z, self.cut + 1, self.model.num_layers, record=False)
        return y


def split_forward(model: ModelSpec, x: Sequence[int], k: int) -> tuple[tuple[int, ...], ResumeHandle]:
    """Layers 1..k; the handle runs k+1..L on whatever representation it is given."""
    if not 1 <= k < model.num_layers:
        raise BadCutPoint(f"cut {k} outside 1..{model.num_layers - 1}")
    Z, _ = run_layers(model, x, 1, k, record=False)
    return Z, ResumeHandle(model, k)


def laplace_scale(epsilon: float, sensitivity: float, scale: int) -> float:
    """Laplace parameter in grid units."""
    if not epsilon > 0:
        raise NonPositiveEpsilon(f"epsilon must be positive, got {epsilon}")
    if math.isinf(epsilon):
        return 0.0
    return sensitivity / epsilon * scale


def privatize_embedding(
    Z: Sequence[int], epsilon: float, sensitivity: float, scale: int, seed=None
) -> tuple[int, ...]:
    """Add discrete Laplace noise, P(k) proportional to exp(-|k| / b), b = sensitivity/epsilon * scale.

    The difference of two i.i.d. geometric variables with success probability
    1 - exp(-1/b) has exactly that law.
    """
    b = laplace_scale(epsilon, sensitivity, scale)
    if b == 0:
        return tuple(int(v) for v in Z)
    rng = np.random.default_rng(seed)
    q = 1.0 - math.exp(-1.0 / b)
    noise = rng.geometric(q, size=len(Z)) - rng.geometric(q, size=len(Z))
    return tuple(int(v) + int(n) for v, n in zip(Z, noise))


def perturbation(Z: Sequence[int], Z_noised: Sequence[int], scale: int) -> dict:
    diff = [(a - b) / scale for a, b in zip(Z_noised, Z)]
    return {
        "linf": max((abs(d) for d in diff), default=0.0),
        "l2": math.sqrt(sum(d * d for d in diff)),
    }


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------


def random_linear(rng: random.Random, in_dim: int, out_dim: int, scale: int, act_scale: int, w_max: float, b_max: float) -> Layer:
    W = tuple(tuple(round(rng.uniform(-w_max, w_max) * scale) for _ in range(in_dim)) for _ in range(out_dim))
    b = tuple(round(rng.uniform(-b_max, b_max) * scale * act_scale) for _ in range(out_dim))
    return Layer("linear", in_dim, out_dim, scale, W, b)


def fixture_model(seed: int = 0, *, scale: int = 16) -> ModelSpec:
    """4 -> 8 -> 8 -> 2: linear, ReLU, linear, sigmoid table over [-8, 8).

    Weight ranges keep every pre-sigmoid value inside the table for inputs in [-1, 1].
    """
    rng = random.Random(seed)
    half = 8 * scale
    return ModelSpec(
        4,
        scale,
        (
            random_linear(rng, 4, 8, scale, scale, 0.5, 0.5),
            Layer("relu", 8, 8),
            random_linear(rng, 8, 2, scale, scale, 0.25, 0.5),
            Layer("lookup", 2, 2, scale, function="sigmoid", domain=(-half, half - 1)),
        ),
    )


def random_mlp(seed: int, widths: Sequence[int], *, scale: int = 16) -> ModelSpec:
    """Alternating linear/ReLU layers through ``widths``; 2 * (len(widths) - 1) layers."""
    rng = random.Random(seed)
    layers = []
    for a, b in zip(widths, widths[1:]):
        layers.append(random_linear(rng, a, b, scale, scale, 1.0 / math.sqrt(a), 0.25))
        layers.append(Layer("relu", b, b))
    return ModelSpec(widths[0], scale, tuple(layers))


def random_input(model: ModelSpec, rng: random.Random, bound: float = 1.0) -> list[int]:
    s = model.input_scale
    return [rng.randint(-int(bound * s), int(bound * s)) for _ in range(model.input_dim)]


def tiny_model(seed: int = 0) -> ModelSpec:
    """2 -> 2 -> 2 with every gadget kind and short proofs (scale 2, 6-bit ReLU)."""
    rng = random.Random(seed)
    return ModelSpec(
        2,
        2,
        (
            random_linear(rng, 2, 2, 2, 2, 1.0, 0.5),
            Layer("relu", 2, 2),
            random_linear(rng, 2, 2, 2, 2, 1.0, 0.5),
            Layer("lookup", 2, 2, 2, function="sigmoid", domain=(-8, 7)),
        ),
        bits=6,
    )
