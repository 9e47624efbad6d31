"""Closed real intervals with exact rational endpoints.

Arithmetic on rational endpoints is exact.  Transcendental operations
(square roots, logarithms, exponentials, fractional powers) produce dyadic
endpoints rounded outward, so every result encloses the true value.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Optional, Union

from mpmath import iv
from sympy import integer_nthroot
from mpmath.libmp import finf, fninf, fnan

Number = Union[int, Fraction]

DEFAULT_PREC = 96


class OpaqueScalarError(ValueError):
    """Raised when an enclosure cannot be refined (no defining data)."""


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected int or Fraction, got {type(x).__name__}")


def _bitlen(x: Fraction) -> int:
    return max(x.numerator.bit_length(), x.denominator.bit_length())


def round_down(x: Fraction, prec: int) -> Fraction:
    """Largest dyadic with about ``prec`` significant bits that is <= x."""
    if x == 0 or _bitlen(x) <= prec + 2:
        return x
    mag = abs(x.numerator).bit_length() - x.denominator.bit_length()
    shift = prec - mag
    if shift >= 0:
        return Fraction((x.numerator << shift) // x.denominator, 1 << shift)
    return Fraction((x.numerator // (x.denominator << -shift)) << -shift)


def round_up(x: Fraction, prec: int) -> Fraction:
    return -round_down(-x, prec)


def _mpf_to_fraction(t) -> Fraction:
    if t in (finf, fninf, fnan):
        raise OverflowError("non-finite interval endpoint")
    sign, man, exp, _ = t
    man = int(man)
    if sign:
        man = -man
    return Fraction(man << exp) if exp >= 0 else Fraction(man, 1 << -exp)


def _to_iv(x: Fraction):
    # exact when the integers fit; otherwise the division rounds outward
    return iv.mpf(x.numerator) / iv.mpf(x.denominator)


def _exact_root(x: Fraction, n: int) -> Optional[Fraction]:
    """The positive rational n-th root of x if it exists."""
    num, ok_num = integer_nthroot(x.numerator, n)
    den, ok_den = integer_nthroot(x.denominator, n)
    return Fraction(num, den) if ok_num and ok_den else None


class Interval:
    """Closed interval [lo, hi] of reals with Fraction endpoints."""

    __slots__ = ("lo", "hi", "source")

    def __init__(self, lo: Number, hi: Number | None = None,
                 source: Callable[[int], "Interval"] | None = None):
        lo = _frac(lo)
        hi = lo if hi is None else _frac(hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi
        # optional re-evaluation hook used by refine()
        self.source = source

    # -- construction helpers -------------------------------------------
    @classmethod
    def point(cls, x: Number) -> "Interval":
        return cls(x, x)

    @classmethod
    def hull(cls, *items: "Interval") -> "Interval":
        return cls(min(i.lo for i in items), max(i.hi for i in items))

    @staticmethod
    def coerce(x) -> "Interval":
        if isinstance(x, Interval):
            return x
        return Interval(_frac(x))

    def rounded(self, prec: int = DEFAULT_PREC) -> "Interval":
        return Interval(round_down(self.lo, prec), round_up(self.hi, prec), self.source)

    # -- predicates -------------------------------------------------------
    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        if isinstance(x, float):
            return float(self.lo) <= x <= float(self.hi)
        return self.lo <= x <= self.hi

    def overlaps(self, other) -> bool:
        other = Interval.coerce(other)
        return self.lo <= other.hi and other.lo <= self.hi

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi), self.source)

    def certainly_lt(self, other) -> bool:
        return self.hi < Interval.coerce(other).lo

    def certainly_le(self, other) -> bool:
        return self.hi <= Interval.coerce(other).lo

    def certainly_gt(self, other) -> bool:
        return self.lo > Interval.coerce(other).hi

    def certainly_ge(self, other) -> bool:
        return self.lo >= Interval.coerce(other).hi

    def certainly_positive(self) -> bool:
        return self.lo > 0

    # -- arithmetic -------------------------------------------------------
    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __add__(self, other):
        other = Interval.coerce(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other):
        other = Interval.coerce(other)
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other):
        return Interval.coerce(other) - self

    def __mul__(self, other):
        other = Interval.coerce(other)
        if self.lo >= 0 and other.lo >= 0:
            return Interval(self.lo * other.lo, self.hi * other.hi)
        prods = (self.lo * other.lo, self.lo * other.hi,
                 self.hi * other.lo, self.hi * other.hi)
        return Interval(min(prods), max(prods))

    __rmul__ = __mul__

    def reciprocal(self) -> "Interval":
        if self.lo <= 0 <= self.hi:
            raise ZeroDivisionError("interval contains zero")
        return Interval(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other):
        return self * Interval.coerce(other).reciprocal()

    def __rtruediv__(self, other):
        return Interval.coerce(other) * self.reciprocal()

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Interval(0, max(-self.lo, self.hi))

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return self.power(Fraction(n))
        if n < 0:
            return (self ** (-n)).reciprocal()
        if n == 0:
            return Interval(1)
        # square-and-multiply with outward rounding to keep endpoints small
        base = abs(self) if n % 2 == 0 else self
        result = Interval(1)
        while n:
            if n & 1:
                result = (result * base).rounded(4 * DEFAULT_PREC)
            n >>= 1
            if n:
                base = (base * base).rounded(4 * DEFAULT_PREC)
        return result

    def max(self, other):
        other = Interval.coerce(other)
        return Interval(max(self.lo, other.lo), max(self.hi, other.hi))

    def min(self, other):
        other = Interval.coerce(other)
        return Interval(min(self.lo, other.lo), min(self.hi, other.hi))

    # -- transcendental ---------------------------------------------------
    def sqrt(self, prec: int = DEFAULT_PREC) -> "Interval":
        if self.hi < 0:
            raise ValueError("square root of a negative interval")
        return Interval(sqrt_down(max(self.lo, Fraction(0)), prec), sqrt_up(self.hi, prec))

    def _via_mpmath(self, fn, prec: int) -> "Interval":
        saved = iv.prec
        iv.prec = prec + 10
        try:
            arg = iv.mpf([_to_iv(self.lo).a, _to_iv(self.hi).b])
            lo, hi = fn(arg)._mpi_
        finally:
            iv.prec = saved
        return Interval(_mpf_to_fraction(lo), _mpf_to_fraction(hi))

    def log(self, prec: int = DEFAULT_PREC) -> "Interval":
        if self.lo <= 0:
            raise ValueError("logarithm of a non-positive interval")
        if self.lo == self.hi == 1:
            return Interval(0)
        return self._via_mpmath(iv.log, prec)

    def log_plus(self, prec: int = DEFAULT_PREC) -> "Interval":
        """Enclosure of max(log x, 0)."""
        if self.hi <= 1:
            return Interval(0)
        if self.lo >= 1:
            return self.log(prec)
        return Interval(0, Interval(self.hi).log(prec).hi)

    def exp(self, prec: int = DEFAULT_PREC) -> "Interval":
        if self.lo == self.hi == 0:
            return Interval(1)
        return self._via_mpmath(iv.exp, prec)

    def power(self, r: Fraction, prec: int = DEFAULT_PREC) -> "Interval":
        """x ** r for x > 0 and rational r."""
        r = _frac(r)
        if r.denominator == 1:
            return self ** int(r)
        if self.lo <= 0:
            if self.lo == self.hi == 0 and r > 0:
                return Interval(0)
            raise ValueError("fractional power of a non-positive interval")
        if self.is_point:
            exact = _exact_root(self.lo, r.denominator)
            if exact is not None:
                return Interval(exact ** r.numerator)
        if r.denominator == 2 and r.numerator == 1:
            return self.sqrt(prec)
        return self._via_mpmath(lambda t: iv.exp(iv.log(t) * iv.mpf(r.numerator) / r.denominator), prec)

    def root(self, n: int, prec: int = DEFAULT_PREC) -> "Interval":
        return self.power(Fraction(1, n), prec)

    # -- misc ------------------------------------------------------------
    def __float__(self):
        return float(self.mid)

    def __eq__(self, other):
        if isinstance(other, Interval):
            return self.lo == other.lo and self.hi == other.hi
        if isinstance(other, (int, Fraction)):
            return self.lo == self.hi == other
        return NotImplemented

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        if self.is_point:
            return f"Interval({self.lo})"
        return f"Interval([{_fmt(self.lo)}, {_fmt(self.hi)}])"

    def to_json(self) -> list[str]:
        return [fraction_str(self.lo), fraction_str(self.hi)]

    @classmethod
    def from_json(cls, data) -> "Interval":
        return cls(parse_fraction(data[0]), parse_fraction(data[1]))


def _fmt(x: Fraction) -> str:
    try:
        return f"{float(x):.12g}"
    except OverflowError:
        from mpmath import mp, mpf
        return mp.nstr(mpf(x.numerator) / x.denominator, 12)


def sqrt_down(q: Fraction, prec: int = DEFAULT_PREC) -> Fraction:
    q = _frac(q)
    if q < 0:
        raise ValueError("negative")
    if q == 0:
        return q
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    # pick k so that sqrt(q) * 2^k has about prec bits
    mag = (n.bit_length() - d.bit_length()) // 2
    k = max(prec - mag, 0)
    s = math.isqrt((n << (2 * k)) // d)
    return Fraction(s, 1 << k)


def sqrt_up(q: Fraction, prec: int = DEFAULT_PREC) -> Fraction:
    q = _frac(q)
    lo = sqrt_down(q, prec)
    if lo * lo == q:
        return lo
    n, d = q.numerator, q.denominator
    mag = (n.bit_length() - d.bit_length()) // 2
    k = max(prec - mag, 0)
    s = math.isqrt((n << (2 * k)) // d)
    return Fraction(s + 1, 1 << k)


def sqrt_interval(q: Number, prec: int = DEFAULT_PREC) -> Interval:
    q = _frac(q)
    return Interval(sqrt_down(q, prec), sqrt_up(q, prec))


def fraction_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def parse_fraction(text) -> Fraction:
    """Parse "num/den" (or a plain integer) into a Fraction."""
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"not a rational string: {text!r}")
    s = text.strip()
    if "/" in s:
        num, den = s.split("/", 1)
        n, d = int(num), int(den)
        if d == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return Fraction(n, d)
    return Fraction(int(s))
