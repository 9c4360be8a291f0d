"""Seedable hash-based random stream (SHA-256 in counter mode).

Seeded instances are reproducible (tests, ``--seed``); unseeded ones draw their key
from the operating system.
"""

from __future__ import annotations

import hashlib
import secrets


def _seed_bytes(seed) -> bytes:
    if isinstance(seed, bytes):
        return seed
    if isinstance(seed, str):
        return seed.encode()
    if isinstance(seed, int):
        return seed.to_bytes((seed.bit_length() + 8) // 8 or 1, "big", signed=True)
    if isinstance(seed, tuple):
        # length-prefixed parts with a type tag, so (1, "a") and ("1a",) differ
        out = b"T"
        for part in seed:
            body = _seed_bytes(part)
            out += type(part).__name__[:1].encode() + len(body).to_bytes(4, "big") + body
        return out
    raise TypeError(f"unsupported seed type {type(seed).__name__}")


class Csprng:
    def __init__(self, seed=None, *, _key: bytes | None = None):
        if _key is not None:
            self._key = _key
        elif seed is None:
            self._key = secrets.token_bytes(32)
        else:
            self._key = hashlib.sha256(b"verinfer/drbg/v1|" + _seed_bytes(seed)).digest()
        self._counter = 0
        self._buf = b""

    def random_bytes(self, n: int) -> bytes:
        while len(self._buf) < n:
            block = hashlib.sha256(self._key + self._counter.to_bytes(8, "big")).digest()
            self._counter += 1
            self._buf += block
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def randbelow(self, n: int) -> int:
        """Uniform in [0, n) up to a 2^-64 statistical bias (wide reduction)."""
        if n <= 0:
            raise ValueError("upper bound must be positive")
        width = (n.bit_length() + 7) // 8 + 8
        return int.from_bytes(self.random_bytes(width), "big") % n

    def randrange(self, lo: int, hi: int) -> int:
        return lo + self.randbelow(hi - lo)

    def random(self) -> float:
        return (int.from_bytes(self.random_bytes(7), "big") >> 3) / (1 << 53)

    def fork(self, label: bytes | str) -> Csprng:
        """Independent child stream; deterministic given this stream's key and ``label``."""
        label = _seed_bytes(label)
        key = hashlib.sha256(b"verinfer/drbg/fork|" + self._key + b"|" + label).digest()
        return Csprng(_key=key)
