"""Public lookup tables: fixed-point function tables and range tables.

Both prover and verifier rebuild a table from ``(function, lo, hi, scale)``, so only
those parameters travel with a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import DomainTooLarge, EntryNotInTable

MAX_TABLE_ROWS = 1 << 16


def _sigmoid(t: float) -> float:
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def _gelu(t: float) -> float:
    return 0.5 * t * (1.0 + math.erf(t / math.sqrt(2.0)))


def _exp(t: float) -> float:
    # softmax numerator exp(x - max); inputs are expected to be <= 0
    return math.exp(t)


def _rsqrt(t: float) -> float:
    # rmsnorm's 1/sqrt(mean square); non-positive inputs map to 0
    return 1.0 / math.sqrt(t) if t > 0 else 0.0


FUNCTIONS = {
    "sigmoid": _sigmoid,
    "gelu-component": _gelu,
    "softmax-component": _exp,
    "rmsnorm-component": _rsqrt,
}


def quantize_scalar(value: float, scale: int) -> int:
    """Round-half-to-even of ``value * scale``."""
    return round(value * scale)


@dataclass(frozen=True)
class LookupTable:
    """Rows of ``d_in + d_out`` signed integers; row order is the table order."""

    name: str
    params: tuple[int, ...]
    d_in: int
    d_out: int
    rows: tuple[tuple[int, ...], ...]
    _index: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if any(len(row) != self.d_in + self.d_out for row in self.rows):
            raise ValueError("row width differs from column count")
        object.__setattr__(self, "_index", {row: i for i, row in enumerate(self.rows)})

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def width(self) -> int:
        return self.d_in + self.d_out

    @property
    def columns(self) -> list[tuple[int, ...]]:
        return [tuple(col) for col in zip(*self.rows)]

    def index_of(self, row: Sequence[int]) -> int:
        try:
            return self._index[tuple(row)]
        except KeyError:
            raise EntryNotInTable(f"row {tuple(row)} is not in table {self.name}") from None

    def apply(self, xs: Sequence[int]) -> list[int]:
        """Look up single-input rows; returns the first output column."""
        if self.d_in != 1 or self.d_out < 1:
            raise ValueError("apply needs a one-input function table")
        out = []
        for x in xs:
            lo = self.params[0]
            i = x - lo
            if not 0 <= i < len(self.rows) or self.rows[i][0] != x:
                raise EntryNotInTable(f"input {x} outside table {self.name} domain")
            out.append(self.rows[i][1])
        return out

    def ident(self) -> bytes:
        body = ",".join(str(v) for v in self.params)
        return f"{self.name}({body};{self.d_in},{self.d_out},{len(self.rows)})".encode()


def build_function_table(
    function: str, domain: tuple[int, int], scale: int, *, max_rows: int = MAX_TABLE_ROWS
) -> LookupTable:
    """Rows ``(x, round(f(x / scale) * scale))`` for every integer ``x`` in ``domain`` (inclusive)."""
    try:
        fn = FUNCTIONS[function]
    except KeyError:
        raise ValueError(f"unknown table function {function!r}") from None
    lo, hi = domain
    if hi < lo:
        raise ValueError("empty domain")
    if scale < 1:
        raise ValueError("scale must be positive")
    n = hi - lo + 1
    if n > max_rows:
        raise DomainTooLarge(f"{n} rows exceeds the cap of {max_rows}")
    rows = tuple((x, quantize_scalar(fn(x / scale), scale)) for x in range(lo, hi + 1))
    return LookupTable(function, (lo, hi, scale), 1, 1, rows)


def range_table(lo: int, hi: int, *, max_rows: int = MAX_TABLE_ROWS) -> LookupTable:
    """Single column ``lo..hi`` inclusive."""
    n = hi - lo + 1
    if n < 1:
        raise ValueError("empty range")
    if n > max_rows:
        raise DomainTooLarge(f"{n} rows exceeds the cap of {max_rows}")
    return LookupTable("range", (lo, hi), 1, 0, tuple((x,) for x in range(lo, hi + 1)))


def table_from_ident(name: str, params: Sequence[int], *, max_rows: int = MAX_TABLE_ROWS) -> LookupTable:
    if name == "range":
        lo, hi = params
        return range_table(lo, hi, max_rows=max_rows)
    lo, hi, scale = params
    return build_function_table(name, (lo, hi), scale, max_rows=max_rows)
