"""Exact arithmetic in a prime scalar field and a prime-order short-Weierstrass group.

Every profile describes a curve ``y^2 = x^3 + a x + b`` over ``F_q`` whose group of
points has prime order ``p``; the scalar field used by all proofs is ``F_p``, so
``|F| = |G|``.  Curve coordinates are handled as ``gmpy2.mpz`` internally for
speed; everything crossing the public API is a plain ``int``.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass
from math import isqrt
from pathlib import Path
from typing import Iterable, Sequence

import gmpy2
from gmpy2 import mpz

from .errors import DecodingError, InverseOfZero, PointNotOnCurve, ProfileError

WINDOW_BITS = 4
_WINDOW_SIZE = 1 << WINDOW_BITS


# ---------------------------------------------------------------------------
# prime field
# ---------------------------------------------------------------------------


class PrimeField:
    """The field of residues modulo a prime ``p``; elements are canonical ints."""

    def __init__(self, modulus: int):
        if modulus < 2 or not gmpy2.is_prime(modulus):
            raise ProfileError(f"field modulus {modulus} is not prime")
        self.modulus = int(modulus)
        self.byte_width = (self.modulus.bit_length() + 7) // 8
        self.half = (self.modulus - 1) // 2

    def __repr__(self) -> str:
        return f"PrimeField({self.modulus})"

    def __eq__(self, other) -> bool:
        return isinstance(other, PrimeField) and other.modulus == self.modulus

    def __hash__(self) -> int:
        return hash(("PrimeField", self.modulus))

    def __call__(self, value: int) -> FieldElement:
        return FieldElement(value % self.modulus, self)

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.modulus

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.modulus

    def mul(self, a: int, b: int) -> int:
        return a * b % self.modulus

    def neg(self, a: int) -> int:
        return -a % self.modulus

    def inv(self, a: int) -> int:
        if a % self.modulus == 0:
            raise InverseOfZero("inverse of zero in F_%d" % self.modulus)
        return pow(a, -1, self.modulus)

    def pow(self, a: int, e: int) -> int:
        return pow(a, e, self.modulus)

    def batch_inv(self, values: Sequence[int]) -> list[int]:
        """Montgomery's trick: one modular inversion for the whole list."""
        p = self.modulus
        prefix = []
        acc = 1
        for v in values:
            if v % p == 0:
                raise InverseOfZero("inverse of zero in batch inversion")
            prefix.append(acc)
            acc = acc * v % p
        inv_acc = pow(acc, -1, p)
        out = [0] * len(values)
        for i in range(len(values) - 1, -1, -1):
            out[i] = inv_acc * prefix[i] % p
            inv_acc = inv_acc * values[i] % p
        return out

    def lift(self, value: int) -> int:
        """Centered lift of a signed integer into the field."""
        if abs(value) > self.half:
            raise ValueError(f"{value} does not fit the centered range of F_{self.modulus}")
        return value % self.modulus

    def signed(self, x: int) -> int:
        """Inverse of :meth:`lift`: the representative in [-(p-1)/2, (p-1)/2]."""
        return x - self.modulus if x > self.half else x

    def random(self, rng) -> int:
        return rng.randbelow(self.modulus)

    def encode(self, x: int) -> bytes:
        return int(x).to_bytes(self.byte_width, "big")

    def decode(self, data: bytes) -> int:
        if len(data) != self.byte_width:
            raise DecodingError("field element has wrong width")
        v = int.from_bytes(data, "big")
        if v >= self.modulus:
            raise DecodingError("non-canonical field element")
        return v

    def from_hash(self, digest: bytes) -> int:
        """Wide reduction; callers supply at least twice the modulus width."""
        return int.from_bytes(digest, "big") % self.modulus


def field_arith(op: str, a: FieldElement, b: FieldElement | int | None = None) -> FieldElement:
    """Dispatch form of the field operations (``add|sub|mul|inv|neg|pow``)."""
    f = a.field
    if op == "inv":
        return FieldElement(f.inv(a.value), f)
    if op == "neg":
        return FieldElement(f.neg(a.value), f)
    if b is None:
        raise TypeError(f"{op} needs two operands")
    if op == "pow":
        e = b.value if isinstance(b, FieldElement) else int(b)
        return FieldElement(f.pow(a.value, e), f)
    bv = b.value if isinstance(b, FieldElement) else int(b) % f.modulus
    if op == "add":
        return FieldElement(f.add(a.value, bv), f)
    if op == "sub":
        return FieldElement(f.sub(a.value, bv), f)
    if op == "mul":
        return FieldElement(f.mul(a.value, bv), f)
    raise ValueError(f"unknown field op {op!r}")


class FieldElement:
    """Immutable residue bound to its field; supports the usual operators."""

    __slots__ = ("value", "field")

    def __init__(self, value: int, field: PrimeField):
        value = int(value)
        if not 0 <= value < field.modulus:
            raise ValueError("field element not in canonical form")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "field", field)

    def __setattr__(self, name, value):
        raise AttributeError("FieldElement is immutable")

    def _other(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise ValueError("mixing elements of different fields")
            return other.value
        return int(other) % self.field.modulus

    def __add__(self, other):
        return FieldElement((self.value + self._other(other)) % self.field.modulus, self.field)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement((self.value - self._other(other)) % self.field.modulus, self.field)

    def __rsub__(self, other):
        return FieldElement((self._other(other) - self.value) % self.field.modulus, self.field)

    def __mul__(self, other):
        return FieldElement(self.value * self._other(other) % self.field.modulus, self.field)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value % self.field.modulus, self.field)

    def __truediv__(self, other):
        return self * FieldElement(self.field.inv(self._other(other)), self.field)

    def __pow__(self, e: int):
        return FieldElement(pow(self.value, e, self.field.modulus), self.field)

    def inverse(self) -> FieldElement:
        return FieldElement(self.field.inv(self.value), self.field)

    def __eq__(self, other) -> bool:
        if isinstance(other, FieldElement):
            return self.field == other.field and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.field.modulus
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.value, self.field.modulus))

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"F{self.field.modulus}({self.value})"


# ---------------------------------------------------------------------------
# curve group
# ---------------------------------------------------------------------------

_INF_J = (mpz(1), mpz(1), mpz(0))


@dataclass(frozen=True, eq=False)
class GroupPoint:
    """Affine point on a profile's curve; ``x is None`` encodes the identity."""

    curve: CurveProfile
    x: int | None
    y: int | None

    @property
    def infinity(self) -> bool:
        return self.x is None

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupPoint):
            return NotImplemented
        return self.curve.pid == other.curve.pid and self.x == other.x and self.y == other.y

    def __hash__(self) -> int:
        return hash((self.curve.pid, self.x, self.y))

    def __add__(self, other: GroupPoint) -> GroupPoint:
        return self.curve.add(self, other)

    def __neg__(self) -> GroupPoint:
        return self.curve.neg(self)

    def __sub__(self, other: GroupPoint) -> GroupPoint:
        return self.curve.add(self, self.curve.neg(other))

    def __rmul__(self, k: int) -> GroupPoint:
        return self.curve.scalar_mul(self, int(k))

    __mul__ = __rmul__

    def to_bytes(self) -> bytes:
        return self.curve.encode_point(self)

    def __repr__(self) -> str:
        if self.x is None:
            return f"GroupPoint({self.curve.name}, inf)"
        return f"GroupPoint({self.curve.name}, {self.x:#x}, {self.y:#x})"


class CurveProfile:
    """A curve over ``F_q`` with prime group order ``p`` plus a generator seed."""

    def __init__(self, name: str, pid: int, base_modulus: int, a: int, b: int, order: int, seed: bytes):
        q = int(base_modulus)
        if q < 5 or not gmpy2.is_prime(q):
            raise ProfileError(f"base modulus of {name} is not prime")
        if q % 4 != 3:
            # square roots are taken as x^((q+1)/4)
            raise ProfileError("only base moduli q = 3 (mod 4) are supported")
        if (4 * a**3 + 27 * b**2) % q == 0:
            raise ProfileError("singular curve")
        if not 0 < pid < 256:
            raise ProfileError("profile id must fit one byte")
        self.name = name
        self.pid = int(pid)
        self.q = q
        self._q = mpz(q)
        self.a = int(a) % q
        self.b = int(b) % q
        self._a = mpz(self.a)
        self._b = mpz(self.b)
        self.order = int(order)
        self.seed = bytes(seed)
        self.scalar_field = PrimeField(self.order)
        self.base_field = PrimeField(q)
        self.coord_width = (q.bit_length() + 7) // 8
        self.point_width = self.coord_width + 1
        # cofactor 1: #E is a multiple of p inside the Hasse interval
        hi = q + 1 + 2 * isqrt(q) + 2
        if 2 * self.order <= hi or self.order > hi:
            raise ProfileError("group order is not the full (cofactor-1) curve order")
        self._tables: dict[tuple[int, int], list] = {}
        self._gen_cache: dict[bytes, tuple[list[GroupPoint], int]] = {}
        self.infinity = GroupPoint(self, None, None)
        self.base_point = self.hash_to_point(b"base", 0)
        if not self.scalar_mul(self.base_point, self.order).infinity:
            raise ProfileError("declared order does not annihilate the base point")

    def __repr__(self) -> str:
        return f"CurveProfile({self.name!r}, order~2^{self.order.bit_length()})"

    # -- construction helpers ------------------------------------------------

    def point(self, x: int, y: int) -> GroupPoint:
        if not self.is_on_curve(x, y):
            raise PointNotOnCurve(f"({x}, {y}) is not on {self.name}")
        return GroupPoint(self, int(x), int(y))

    def is_on_curve(self, x: int, y: int) -> bool:
        q = self.q
        if not (0 <= x < q and 0 <= y < q):
            return False
        return (y * y - (x * x * x + self.a * x + self.b)) % q == 0

    def contains(self, P: GroupPoint) -> bool:
        return P.infinity or self.is_on_curve(P.x, P.y)

    def _check(self, P: GroupPoint) -> None:
        if P.curve is not self and P.curve.pid != self.pid:
            raise PointNotOnCurve("point belongs to another profile")
        if not P.infinity and not self.is_on_curve(P.x, P.y):
            raise PointNotOnCurve(f"{P!r} is not on the curve")

    # -- Jacobian internals -----------------------------------------------------

    def _jdbl(self, P):
        X, Y, Z = P
        if Z == 0 or Y == 0:
            return _INF_J
        q = self._q
        YY = Y * Y % q
        S = 4 * X * YY % q
        if self.a:
            ZZ = Z * Z % q
            M = (3 * X * X + self._a * ZZ * ZZ) % q
        else:
            M = 3 * X * X % q
        X3 = (M * M - 2 * S) % q
        return (X3, (M * (S - X3) - 8 * YY * YY) % q, 2 * Y * Z % q)

    def _jadd_affine(self, P, x2, y2):
        X1, Y1, Z1 = P
        if Z1 == 0:
            return (x2, y2, mpz(1))
        q = self._q
        Z1Z1 = Z1 * Z1 % q
        H = (x2 * Z1Z1 - X1) % q
        r = (y2 * Z1 * Z1Z1 - Y1) % q
        if H == 0:
            if r == 0:
                return self._jdbl(P)
            return _INF_J
        HH = H * H % q
        HHH = H * HH % q
        V = X1 * HH % q
        X3 = (r * r - HHH - 2 * V) % q
        return (X3, (r * (V - X3) - Y1 * HHH) % q, Z1 * H % q)

    def _jadd(self, P, Q):
        X1, Y1, Z1 = P
        X2, Y2, Z2 = Q
        if Z1 == 0:
            return Q
        if Z2 == 0:
            return P
        q = self._q
        Z1Z1 = Z1 * Z1 % q
        Z2Z2 = Z2 * Z2 % q
        U1 = X1 * Z2Z2 % q
        U2 = X2 * Z1Z1 % q
        S1 = Y1 * Z2 * Z2Z2 % q
        S2 = Y2 * Z1 * Z1Z1 % q
        H = (U2 - U1) % q
        r = (S2 - S1) % q
        if H == 0:
            if r == 0:
                return self._jdbl(P)
            return _INF_J
        HH = H * H % q
        HHH = H * HH % q
        V = U1 * HH % q
        X3 = (r * r - HHH - 2 * V) % q
        return (X3, (r * (V - X3) - S1 * HHH) % q, Z1 * Z2 * H % q)

    def _to_affine(self, P) -> GroupPoint:
        X, Y, Z = P
        if Z == 0:
            return self.infinity
        q = self._q
        zi = gmpy2.invert(Z, q)
        zi2 = zi * zi % q
        return GroupPoint(self, int(X * zi2 % q), int(Y * zi2 * zi % q))

    def _batch_affine(self, pts) -> list:
        """Normalize Jacobian points (none at infinity) with one inversion."""
        q = self._q
        zs = [P[2] for P in pts]
        prefix = []
        acc = mpz(1)
        for z in zs:
            prefix.append(acc)
            acc = acc * z % q
        inv = gmpy2.invert(acc, q)
        out = [None] * len(pts)
        for i in range(len(pts) - 1, -1, -1):
            zi = inv * prefix[i] % q
            inv = inv * zs[i] % q
            zi2 = zi * zi % q
            X, Y, _ = pts[i]
            out[i] = (X * zi2 % q, Y * zi2 * zi % q)
        return out

    @staticmethod
    def _from_affine(P: GroupPoint):
        if P.infinity:
            return _INF_J
        return (mpz(P.x), mpz(P.y), mpz(1))

    # -- group law --------------------------------------------------------------

    def neg(self, P: GroupPoint) -> GroupPoint:
        if P.infinity:
            return P
        return GroupPoint(self, P.x, (-P.y) % self.q)

    def add(self, P: GroupPoint, Q: GroupPoint) -> GroupPoint:
        self._check(P)
        self._check(Q)
        if Q.infinity:
            return P
        return self._to_affine(self._jadd_affine(self._from_affine(P), mpz(Q.x), mpz(Q.y)))

    def double(self, P: GroupPoint) -> GroupPoint:
        self._check(P)
        return self._to_affine(self._jdbl(self._from_affine(P)))

    def point_op(self, op: str, P: GroupPoint, other=None) -> GroupPoint:
        """Dispatch form: ``add`` (other is a point), ``double``, ``scalar_mul`` (other is a scalar)."""
        if op == "add":
            return self.add(P, other)
        if op == "double":
            return self.double(P)
        if op == "scalar_mul":
            k = other.value if isinstance(other, FieldElement) else int(other)
            return self.scalar_mul(P, k)
        raise ValueError(f"unknown point op {op!r}")

    def _wnaf(self, k: int, w: int = 5) -> list[int]:
        digits = []
        half = 1 << (w - 1)
        full = 1 << w
        while k:
            if k & 1:
                d = k & (full - 1)
                if d >= half:
                    d -= full
                k -= d
            else:
                d = 0
            digits.append(d)
            k >>= 1
        return digits

    def _jmul(self, P: GroupPoint, k: int):
        """Variable-base multiplication with width-5 NAF; ``k`` already reduced."""
        if k == 0 or P.infinity:
            return _INF_J
        base = self._from_affine(P)
        twice = self._jdbl(base)
        odd = [base]
        for _ in range(7):
            odd.append(self._jadd(odd[-1], twice))
        if any(o[2] == 0 for o in odd):
            # only reachable on toy curves where a small multiple vanishes
            R = _INF_J
            for bit in bin(k)[2:]:
                R = self._jdbl(R)
                if bit == "1":
                    R = self._jadd(R, base)
            return R
        aff = self._batch_affine(odd)
        q = self._q
        R = _INF_J
        for d in reversed(self._wnaf(k)):
            R = self._jdbl(R)
            if d > 0:
                x, y = aff[d >> 1]
                R = self._jadd_affine(R, x, y)
            elif d < 0:
                x, y = aff[(-d) >> 1]
                R = self._jadd_affine(R, x, q - y)
        return R

    def scalar_mul(self, P: GroupPoint, k: int) -> GroupPoint:
        """``k * P``; ``k`` is reduced modulo the group order."""
        self._check(P)
        k = int(k) % self.order
        if (P.x, P.y) in self._tables:
            return self.msm([k], [P])
        return self._to_affine(self._jmul(P, k))

    # -- fixed-base tables and multi-scalar multiplication ----------------------

    def _table(self, P: GroupPoint) -> list:
        key = (P.x, P.y)
        table = self._tables.get(key)
        if table is not None:
            return table
        windows = (self.order.bit_length() + WINDOW_BITS - 1) // WINDOW_BITS
        table = []
        base = self._from_affine(P)
        for _ in range(windows):
            row = [base]
            for _ in range(_WINDOW_SIZE - 2):
                row.append(self._jadd(row[-1], base))
            aff = self._batch_affine(row)
            table.append(aff)
            base = self._jadd_affine(row[-1], *aff[0])
            base = (*self._batch_affine([base])[0], mpz(1))
        self._tables[key] = table
        return table

    def precompute(self, points: Iterable[GroupPoint]) -> None:
        """Build fixed-base tables so later multiplications by these points are cheap."""
        for P in points:
            if not P.infinity:
                self._table(P)

    def msm(self, scalars: Sequence[int], points: Sequence[GroupPoint]) -> GroupPoint:
        """``sum k_i * P_i``.  Points with fixed-base tables use them; others use wNAF."""
        if len(scalars) != len(points):
            raise ValueError("scalars and points differ in length")
        p = self.order
        half = p // 2
        q = self._q
        acc = _INF_J
        mask = _WINDOW_SIZE - 1
        for k, P in zip(scalars, points):
            k = int(k) % p
            if k == 0 or P.infinity:
                continue
            key = (P.x, P.y)
            table = self._tables.get(key)
            if table is None:
                acc = self._jadd(acc, self._jmul(P, k))
                continue
            negate = k > half
            if negate:
                k = p - k
            w = 0
            while k:
                d = k & mask
                if d:
                    x, y = table[w][d - 1]
                    acc = self._jadd_affine(acc, x, q - y if negate else y)
                k >>= WINDOW_BITS
                w += 1
        return self._to_affine(acc)

    # -- encoding ---------------------------------------------------------------

    def encode_point(self, P: GroupPoint) -> bytes:
        if P.infinity:
            return bytes(self.point_width)
        return bytes([2 + (P.y & 1)]) + P.x.to_bytes(self.coord_width, "big")

    def _sqrt(self, v: int) -> int | None:
        q = self.q
        v %= q
        if v == 0:
            return 0
        r = pow(v, (q + 1) // 4, q)
        return r if r * r % q == v else None

    def decode_point(self, data: bytes) -> GroupPoint:
        if len(data) != self.point_width:
            raise DecodingError("point has wrong width")
        tag = data[0]
        if tag == 0:
            if any(data[1:]):
                raise DecodingError("non-canonical identity encoding")
            return self.infinity
        if tag not in (2, 3):
            raise DecodingError("bad point prefix")
        x = int.from_bytes(data[1:], "big")
        if x >= self.q:
            raise DecodingError("x coordinate out of range")
        y = self._sqrt(x * x * x + self.a * x + self.b)
        if y is None:
            raise DecodingError("x is not on the curve")
        if (y & 1) != (tag & 1):
            if y == 0:
                raise DecodingError("non-canonical parity for y = 0")
            y = self.q - y
        return GroupPoint(self, x, y)

    # -- hash to group ----------------------------------------------------------

    def hash_to_point(self, tag: bytes, index: int) -> GroupPoint:
        """Try-and-increment: nobody knows discrete logs between outputs."""
        width = 2 * self.coord_width + 1
        ctr = 0
        while True:
            prefix = b"verinfer/h2g/v1|%s|%d|%d|" % (self.name.encode(), len(self.seed), len(tag))
            msg = prefix + self.seed + b"|" + tag + b"|%d|%d" % (index, ctr)
            digest = _expand(msg, width)
            x = int.from_bytes(digest[:-1], "big") % self.q
            y = self._sqrt(x * x * x + self.a * x + self.b)
            if y is not None and y != 0:
                if (y & 1) != (digest[-1] & 1):
                    y = self.q - y
                return GroupPoint(self, x, y)
            ctr += 1

    def sample_generators(self, n: int, domain_tag: bytes) -> list[GroupPoint]:
        """First ``n`` points of the deterministic generator stream for ``domain_tag``.

        The stream is prefix-stable, pairwise distinct and never contains the identity.
        """
        if n < 1:
            raise ValueError("need at least one generator")
        gens, next_index = self._gen_cache.get(bytes(domain_tag), ([], 0))
        if len(gens) < n:
            seen = {(g.x, g.y) for g in gens}
            while len(gens) < n:
                P = self.hash_to_point(b"gens|" + bytes(domain_tag), next_index)
                next_index += 1
                if (P.x, P.y) in seen:
                    continue
                seen.add((P.x, P.y))
                gens.append(P)
            self._gen_cache[bytes(domain_tag)] = (gens, next_index)
        return list(gens[:n])

    def enumerate_points(self) -> list[GroupPoint]:
        """All group elements as multiples of the base point (toy profiles only)."""
        if self.order > 1 << 20:
            raise ProfileError("refusing to enumerate a large group")
        out = [self.infinity]
        B = self.base_point
        acc = self._from_affine(B)
        for _ in range(1, self.order):
            out.append(self._to_affine(acc))
            acc = self._jadd_affine(acc, mpz(B.x), mpz(B.y))
        return out


def _expand(msg: bytes, length: int) -> bytes:
    """SHA-256 in counter mode, ``length`` bytes."""
    out = b""
    ctr = 0
    while len(out) < length:
        out += hashlib.sha256(ctr.to_bytes(4, "big") + msg).digest()
        ctr += 1
    return out[:length]


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------

SECP256K1_P = 2**256 - 2**32 - 977
SECP256K1_N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141

_BUILTIN = {
    # 65479 = 3 (mod 4); the point count 65353 was found by exhaustive Legendre summation
    "test": dict(pid=1, base_modulus=65479, a=2, b=5, order=65353, seed=b"verinfer-test"),
    "main": dict(pid=2, base_modulus=SECP256K1_P, a=0, b=7, order=SECP256K1_N, seed=b"verinfer-main"),
}
_loaded: dict[str, CurveProfile] = {}


def get_profile(name: str) -> CurveProfile:
    """Built-in profile by name (``test`` or ``main``), or a profile registered from a file."""
    key = name.lower()
    if key not in _loaded:
        if key not in _BUILTIN:
            raise ProfileError(f"unknown profile {name!r}")
        _loaded[key] = CurveProfile(key, **_BUILTIN[key])
    return _loaded[key]


def profile_by_id(pid: int) -> CurveProfile:
    for name, spec in _BUILTIN.items():
        if spec["pid"] == pid:
            return get_profile(name)
    for prof in _loaded.values():
        if prof.pid == pid:
            return prof
    raise DecodingError(f"unknown profile id {pid}")


def load_profile(path: str | Path) -> CurveProfile:
    """Load a profile from an INI-style text file and register it.

    Format (integers may be decimal or 0x-prefixed hex)::

        [profile]
        name = toy
        id = 7
        modulus = 65479
        a = 2
        b = 5
        order = 65353
        seed = my-seed
    """
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ProfileError(f"cannot read profile file {path}")
    if "profile" not in cp:
        raise ProfileError("missing [profile] section")
    sec = cp["profile"]
    try:
        prof = CurveProfile(
            name=sec["name"].strip().lower(),
            pid=int(sec["id"], 0),
            base_modulus=int(sec["modulus"], 0),
            a=int(sec["a"], 0),
            b=int(sec["b"], 0),
            order=int(sec["order"], 0),
            seed=sec["seed"].strip().encode(),
        )
    except KeyError as exc:
        raise ProfileError(f"profile file lacks key {exc}") from None
    _loaded[prof.name] = prof
    return prof
