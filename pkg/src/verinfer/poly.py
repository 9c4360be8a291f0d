"""Multilinear extensions over the Boolean hypercube and univariate round polynomials.

Index convention: entry ``k`` of a table sits at the Boolean point whose first
variable is the least significant bit of ``k``.  Fixing the first variable to 0
therefore keeps the even-indexed half.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .algebra import PrimeField
from .errors import DegreeExceeded, DimensionMismatch, NoVariables


def next_pow2(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


def log2_exact(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise DimensionMismatch(f"{n} is not a power of two")
    return n.bit_length() - 1


def to_bits(index: int, num_vars: int) -> tuple[int, ...]:
    return tuple((index >> i) & 1 for i in range(num_vars))


def lagrange_basis(field: PrimeField, u: Sequence[int], b: Sequence[int]) -> int:
    """beta(u, b) = prod(u_i b_i + (1 - u_i)(1 - b_i))."""
    if len(u) != len(b):
        raise DimensionMismatch("point and Boolean index differ in length")
    p = field.modulus
    acc = 1
    for ui, bi in zip(u, b):
        acc = acc * (ui * bi + (1 - ui) * (1 - bi)) % p
    return acc


def eq_table(field: PrimeField, u: Sequence[int]) -> list[int]:
    """All values beta(u, b) for b in {0,1}^len(u), in table order."""
    p = field.modulus
    table = [1]
    for ui in u:
        lo = (1 - ui) % p
        table = [t * lo % p for t in table] + [t * ui % p for t in table]
    return table


@dataclass(frozen=True)
class MultilinearPoly:
    """A tensor in evaluation form; ``evals`` has exactly ``2**num_vars`` entries."""

    field: PrimeField
    num_vars: int
    evals: tuple[int, ...]

    def __post_init__(self):
        if len(self.evals) != 1 << self.num_vars:
            raise DimensionMismatch(
                f"{len(self.evals)} evaluations for {self.num_vars} variables"
            )

    @classmethod
    def from_values(cls, field: PrimeField, values: Sequence[int], num_vars: int | None = None) -> MultilinearPoly:
        """Reduce ``values`` into the field and zero-pad to a power of two."""
        size = next_pow2(len(values)) if num_vars is None else 1 << num_vars
        if len(values) > size:
            raise DimensionMismatch("more values than hypercube points")
        p = field.modulus
        evals = tuple(v % p for v in values) + (0,) * (size - len(values))
        return cls(field, log2_exact(size), evals)

    def __len__(self) -> int:
        return len(self.evals)

    def evaluate(self, u: Sequence[int]) -> int:
        return mle_evaluate(self, u)

    def restrict_first_var(self, r: int) -> MultilinearPoly:
        return restrict_first_var(self, r)


def mle_evaluate(S: MultilinearPoly, u: Sequence[int]) -> int:
    """S~(u) = sum_b S(b) beta(u, b), computed in O(d) by folding one variable at a time."""
    if len(u) != S.num_vars:
        raise DimensionMismatch(f"point has {len(u)} coordinates, polynomial has {S.num_vars} variables")
    return fold_evaluate(S.field, S.evals, u)


def fold_evaluate(field: PrimeField, evals: Sequence[int], u: Sequence[int]) -> int:
    p = field.modulus
    cur = list(evals)
    for r in u:
        cur = [(lo + r * (hi - lo)) % p for lo, hi in zip(cur[0::2], cur[1::2])]
    return cur[0]


def restrict_first_var(S: MultilinearPoly, r: int) -> MultilinearPoly:
    if S.num_vars == 0:
        raise NoVariables("cannot restrict a constant")
    p = S.field.modulus
    ev = S.evals
    folded = tuple((lo + r * (hi - lo)) % p for lo, hi in zip(ev[0::2], ev[1::2]))
    return MultilinearPoly(S.field, S.num_vars - 1, folded)


@dataclass(frozen=True)
class UnivariatePoly:
    """Coefficient form, lowest degree first, trailing zeros trimmed."""

    field: PrimeField
    coeffs: tuple[int, ...]
    degree_bound: int | None = None

    def __post_init__(self):
        c = list(self.coeffs)
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))
        if self.degree_bound is not None and self.degree > self.degree_bound:
            raise DegreeExceeded(f"degree {self.degree} > bound {self.degree_bound}")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x: int) -> int:
        p = self.field.modulus
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % p
        return acc

    @classmethod
    def interpolate(cls, field: PrimeField, evals: Sequence[int], degree_bound: int | None = None) -> UnivariatePoly:
        """The unique polynomial of degree < len(evals) through (k, evals[k])."""
        p = field.modulus
        n = len(evals)
        coeffs = [0] * n
        for k, yk in enumerate(evals):
            # basis polynomial prod_{j != k} (X - j) / (k - j)
            basis = [1]
            denom = 1
            for j in range(n):
                if j == k:
                    continue
                basis = [(a - j * b) % p for a, b in zip([0] + basis, basis + [0])]
                denom = denom * (k - j) % p
            scale = yk * pow(denom, -1, p) % p
            for i, c in enumerate(basis):
                coeffs[i] = (coeffs[i] + scale * c) % p
        return cls(field, tuple(coeffs), degree_bound)


def eval_from_points(field: PrimeField, evals: Sequence[int], x: int) -> int:
    """Evaluate the polynomial through (k, evals[k]), k = 0..n-1, at ``x``."""
    p = field.modulus
    n = len(evals)
    x %= p
    if x < n:
        return evals[x] % p
    # prefix/suffix products of (x - j)
    pre = [1] * (n + 1)
    for j in range(n):
        pre[j + 1] = pre[j] * (x - j) % p
    suf = [1] * (n + 1)
    for j in range(n - 1, -1, -1):
        suf[j] = suf[j + 1] * (x - j) % p
    fact = [1] * n
    for i in range(1, n):
        fact[i] = fact[i - 1] * i % p
    total = 0
    for k in range(n):
        num = pre[k] * suf[k + 1] % p
        den = fact[k] * fact[n - 1 - k] % p
        term = evals[k] * num % p * pow(den, -1, p) % p
        total = (total - term) % p if (n - 1 - k) & 1 else (total + term) % p
    return total
