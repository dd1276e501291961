"""Exact complex-rational scalars and multi-index helpers."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from numbers import Rational
from typing import Iterator


class GaussianRational:
    """A complex number ``re + i*im`` with :class:`~fractions.Fraction` parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, GaussianRational):
            if im:
                raise TypeError("imaginary part given twice")
            self.re, self.im = re.re, re.im
            return
        if isinstance(re, complex):
            self.re = Fraction(re.real)
            self.im = Fraction(re.imag) + Fraction(im)
            return
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        return cls(value)

    @classmethod
    def parse(cls, re: str, im: str = "0") -> "GaussianRational":
        return cls(Fraction(re), Fraction(im))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __eq__(self, other) -> bool:
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (Rational, float)):
            return self.im == 0 and self.re == other
        if isinstance(other, complex):
            return self.re == other.real and self.im == other.imag
        return NotImplemented

    def __hash__(self) -> int:
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __neg__(self) -> "GaussianRational":
        return GaussianRational(-self.re, -self.im)

    def __add__(self, other) -> "GaussianRational":
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other) -> "GaussianRational":
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other) -> "GaussianRational":
        return GaussianRational.coerce(other) - self

    def __mul__(self, other) -> "GaussianRational":
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return GaussianRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "GaussianRational":
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        den = other.re * other.re + other.im * other.im
        if den == 0:
            raise ZeroDivisionError("division by zero")
        num = self * other.conjugate()
        return GaussianRational(num.re / den, num.im / den)

    def __rtruediv__(self, other) -> "GaussianRational":
        return GaussianRational.coerce(other) / self

    def __pow__(self, k: int) -> "GaussianRational":
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return GaussianRational(1) / self**(-k)
        out = GaussianRational(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self) -> str:
        return f"GaussianRational({str(self.re)!r}, {str(self.im)!r})"

    def __str__(self) -> str:
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            if abs(self.im) == 1:
                return "i" if self.im > 0 else "-i"
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"


I = GaussianRational(0, 1)


def i_power(k: int) -> GaussianRational:
    """Return ``i**k`` for any integer ``k``."""
    return ((GaussianRational(1), I, GaussianRational(-1), -I))[k % 4]


class MultiIndex(tuple):
    """Tuple of non-negative integers; ``<`` is the graded lexicographic order."""

    def __new__(cls, entries=()):
        entries = tuple(int(e) for e in entries)
        if any(e < 0 for e in entries):
            raise ValueError(f"multi-index entries must be >= 0, got {entries}")
        return super().__new__(cls, entries)

    @property
    def order(self) -> int:
        return sum(self)

    def factorial(self) -> int:
        return math.prod(math.factorial(e) for e in self)

    def _key(self):
        return (sum(self), tuple(self))

    def __lt__(self, other):
        return self._key() < MultiIndex(other)._key()

    def __le__(self, other):
        return self._key() <= MultiIndex(other)._key()

    def __gt__(self, other):
        return self._key() > MultiIndex(other)._key()

    def __ge__(self, other):
        return self._key() >= MultiIndex(other)._key()

    def __add__(self, other):
        return MultiIndex(a + b for a, b in zip(self, other, strict=True))

    def __sub__(self, other):
        return MultiIndex(a - b for a, b in zip(self, other, strict=True))

    def __repr__(self) -> str:
        return f"MultiIndex({tuple(self)})"


def multi_indices(n: int, max_order: int, min_order: int = 0) -> Iterator[MultiIndex]:
    """All multi-indices in ``n`` variables with ``min_order <= |a| <= max_order``, graded order."""
    for order in range(min_order, max_order + 1):
        # reversed lexicographic within a degree puts x1**d first
        block = [MultiIndex(c) for c in _compositions(order, n)]
        yield from sorted(block, key=lambda a: tuple(-e for e in a))


def _compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def bounded_indices(bound) -> Iterator[MultiIndex]:
    """All multi-indices ``a`` with ``a <= bound`` componentwise."""
    for entries in itertools.product(*(range(b + 1) for b in bound)):
        yield MultiIndex(entries)


def binomial(alpha, gamma) -> int:
    return math.prod(math.comb(a, g) for a, g in zip(alpha, gamma))
