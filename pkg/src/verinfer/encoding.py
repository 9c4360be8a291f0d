"""Length-checked byte writer/reader used by every proof encoding."""

from __future__ import annotations

import struct

from .algebra import CurveProfile, GroupPoint, PrimeField
from .errors import DecodingError


class Writer:
    def __init__(self):
        self._parts: list[bytes] = []

    def raw(self, data: bytes) -> Writer:
        self._parts.append(bytes(data))
        return self

    def u8(self, v: int) -> Writer:
        return self.raw(struct.pack(">B", v))

    def u32(self, v: int) -> Writer:
        return self.raw(struct.pack(">I", v))

    def blob(self, data: bytes) -> Writer:
        return self.u32(len(data)).raw(data)

    def scalar(self, field: PrimeField, v: int) -> Writer:
        return self.raw(field.encode(v))

    def scalars(self, field: PrimeField, values) -> Writer:
        values = list(values)
        self.u32(len(values))
        for v in values:
            self.scalar(field, v)
        return self

    def point(self, P: GroupPoint) -> Writer:
        return self.raw(P.to_bytes())

    def points(self, pts) -> Writer:
        pts = list(pts)
        self.u32(len(pts))
        for P in pts:
            self.point(P)
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes, *, limit: int = 1 << 24):
        self._data = memoryview(bytes(data))
        self._pos = 0
        self._limit = limit

    def raw(self, n: int) -> bytes:
        if n < 0 or self._pos + n > len(self._data):
            raise DecodingError("truncated input")
        out = bytes(self._data[self._pos:self._pos + n])
        self._pos += n
        return out

    def u8(self) -> int:
        return self.raw(1)[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.raw(4))[0]

    def count(self) -> int:
        n = self.u32()
        if n > self._limit:
            raise DecodingError("implausible element count")
        return n

    def blob(self) -> bytes:
        return self.raw(self.count())

    def scalar(self, field: PrimeField) -> int:
        return field.decode(self.raw(field.byte_width))

    def scalars(self, field: PrimeField) -> list[int]:
        return [self.scalar(field) for _ in range(self.count())]

    def point(self, curve: CurveProfile) -> GroupPoint:
        return curve.decode_point(self.raw(curve.point_width))

    def points(self, curve: CurveProfile) -> list[GroupPoint]:
        return [self.point(curve) for _ in range(self.count())]

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos

    def done(self) -> None:
        if self.remaining:
            raise DecodingError(f"{self.remaining} trailing bytes")
