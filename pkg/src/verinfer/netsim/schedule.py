"""Virtual-time event queue and cost-aware shard placement."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Any, Sequence

from ..errors import NoNodes
from ..model import ModelSpec, ShardPlan

GPU = "gpu-class"
CPU = "cpu-class"


class EventQueue:
    """Events ordered by (tick, insertion sequence); equal seeds give equal orderings."""

    def __init__(self) -> None:
        self._heap: list = []
        self._seq = 0
        self.now = 0

    def push(self, tick: int, event: Any) -> None:
        if tick < self.now:
            raise ValueError("cannot schedule into the past")
        heapq.heappush(self._heap, (int(tick), self._seq, event))
        self._seq += 1

    def pop(self) -> tuple[int, Any]:
        tick, _, event = heapq.heappop(self._heap)
        self.now = tick
        return tick, event

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)


def shard_cost(model: ModelSpec, first: int, last: int) -> int:
    """Multiply count of layers ``first..last`` (at least 1, so every shard takes time)."""
    return max(1, sum(model.layer(i).multiply_count() for i in range(first, last + 1)))


def ticks(cost: int, speed: float) -> int:
    return max(1, math.ceil(cost / speed))


@dataclass(frozen=True)
class NodeSlot:
    """What the scheduler needs to know about a node."""

    node_id: str
    node_class: str = CPU
    speed: float = 1.0

    def __post_init__(self):
        if self.speed <= 0:
            raise ValueError("speed weight must be positive")
        if self.node_class not in (GPU, CPU):
            raise ValueError(f"unknown node class {self.node_class!r}")


def schedule_shards(
    model: ModelSpec, ranges: Sequence[tuple[int, int]], nodes: Sequence[NodeSlot], redundancy: int = 1
) -> ShardPlan:
    """Longest-processing-time greedy placement.

    Shards go in decreasing cost order to the nodes that would finish them
    earliest given their current load and speed.  Among equally good nodes, shards
    costlier than the mean prefer gpu-class ones.  Replicas of one shard land on
    distinct nodes.
    """
    if not nodes:
        raise NoNodes("no nodes to schedule on")
    if len({n.node_id for n in nodes}) != len(nodes):
        raise ValueError("node ids must be unique")
    if not 1 <= redundancy <= len(nodes):
        raise ValueError(f"redundancy {redundancy} needs that many distinct nodes (have {len(nodes)})")
    costs = [shard_cost(model, a, b) for a, b in ranges]
    mean = sum(costs) / len(costs)
    load = {n.node_id: 0.0 for n in nodes}
    order = sorted(range(len(ranges)), key=lambda s: (-costs[s], s))
    assignments: dict[int, tuple[str, ...]] = {}
    for s in order:
        heavy = costs[s] > mean

        def rank(n: NodeSlot, s=s, heavy=heavy):
            return ((load[n.node_id] + costs[s]) / n.speed, heavy and n.node_class != GPU, -n.speed, n.node_id)

        ranked = sorted(nodes, key=rank)
        chosen = ranked[:redundancy]
        for n in chosen:
            load[n.node_id] += costs[s]
        assignments[s] = tuple(n.node_id for n in chosen)
    return ShardPlan(tuple(ranges), tuple(assignments[s] for s in range(len(ranges))), model.num_layers)
