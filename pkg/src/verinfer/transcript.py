"""Challenge channel for all protocols.

In ``fiat_shamir`` mode a challenge is a hash of the domain separator and every
message absorbed so far.  In ``interactive`` mode the verifier's random stream
supplies it; a verifier holding the same seeded stream replays the exchange.
Either way the challenge itself is absorbed, so two challenges in a row differ.
"""

from __future__ import annotations

import hashlib

from .algebra import FieldElement, GroupPoint, PrimeField
from .rand import Csprng

FIAT_SHAMIR = "fiat_shamir"
INTERACTIVE = "interactive"


class Transcript:
    def __init__(self, field: PrimeField, domain: bytes, mode: str = FIAT_SHAMIR, rng: Csprng | None = None):
        if mode not in (FIAT_SHAMIR, INTERACTIVE):
            raise ValueError(f"unknown transcript mode {mode!r}")
        if mode == INTERACTIVE and rng is None:
            raise ValueError("interactive mode needs the verifier's random stream")
        self.field = field
        self.domain = bytes(domain)
        self.mode = mode
        self._rng = rng
        self._state = hashlib.sha256()
        self._state.update(b"verinfer/transcript/v1")
        self._state.update(len(self.domain).to_bytes(4, "big") + self.domain)
        self.log: list[tuple[bytes, bytes]] = []

    @classmethod
    def interactive(cls, field: PrimeField, domain: bytes, seed) -> Transcript:
        return cls(field, domain, INTERACTIVE, Csprng(seed).fork("transcript/verifier"))

    def absorb(self, label: bytes, message: bytes) -> None:
        label = bytes(label)
        message = bytes(message)
        self._state.update(b"M" + len(label).to_bytes(4, "big") + label)
        self._state.update(len(message).to_bytes(8, "big") + message)
        self.log.append((label, message))

    def absorb_scalars(self, label: bytes, values) -> None:
        enc = self.field.encode
        self.absorb(label, b"".join(enc(int(v)) for v in values))

    def absorb_point(self, label: bytes, P: GroupPoint) -> None:
        self.absorb(label, P.to_bytes())

    def challenge(self, label: bytes) -> int:
        label = bytes(label)
        if self.mode == FIAT_SHAMIR:
            width = 2 * self.field.byte_width
            out = b""
            ctr = 0
            while len(out) < width:
                h = self._state.copy()
                h.update(b"C" + len(label).to_bytes(4, "big") + label + ctr.to_bytes(4, "big"))
                out += h.digest()
                ctr += 1
            value = self.field.from_hash(out[:width])
        else:
            value = self._rng.randbelow(self.field.modulus)
        self.absorb(b"challenge/" + label, self.field.encode(value))
        return value

    def challenge_element(self, label: bytes) -> FieldElement:
        return FieldElement(self.challenge(label), self.field)

    def challenges(self, label: bytes, n: int) -> list[int]:
        return [self.challenge(label + b"/%d" % i) for i in range(n)]
