"""Committed vectors shared by the gadget provers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from ..commit import CommitKey, PedersenCommitment, commit_vector
from ..poly import next_pow2
from ..rand import Csprng
from ..sumcheck import Committed, Opening
from ..transcript import Transcript


@dataclass(frozen=True)
class CommittedVector:
    """Prover-side witness: padded field values, blind and commitment."""

    values: tuple[int, ...]
    blind: int
    commitment: PedersenCommitment

    @classmethod
    def create(
        cls, key: CommitKey, values: Sequence[int], rng: Csprng | None, *, size: int | None = None, blind: int | None = None
    ) -> CommittedVector:
        p = key.field.modulus
        size = next_pow2(len(values)) if size is None else size
        padded = tuple(int(v) % p for v in values) + (0,) * (size - len(values))
        if blind is None:
            blind = rng.randbelow(p)
        return cls(padded, blind % p, commit_vector(key, padded, blind))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def point(self):
        return self.commitment.point

    def opening(self, key: CommitKey, point_map: Callable = list) -> Opening:
        return Opening(key, self.values, self.blind, self.commitment, point_map)

    def check(self, key: CommitKey, point_map: Callable = list) -> Committed:
        return Committed(key, self.commitment, point_map)


def absorb_commitments(tr: Transcript, label: bytes, commitments) -> None:
    for c in commitments:
        point = c.point if hasattr(c, "point") else c
        tr.absorb_point(label, point)


def dims(*sizes: int) -> bytes:
    return b"".join(int(s).to_bytes(4, "big") for s in sizes)
