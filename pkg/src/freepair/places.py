"""Places of Q, certified local scalars, and algebraic numbers.

The finite place p is normalized by |p|_p = 1/p.  Real quantities are
``Interval`` enclosures; p-adic absolute values are ``PadicScalar`` objects
whose value p^(-valuation) is compared exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import sympy

from .intervals import DEFAULT_PREC, Interval, OpaqueScalarError, sqrt_interval


class PlaceError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Place:
    """The real place (prime is None) or the p-adic place."""

    prime: Optional[int] = None

    def __post_init__(self):
        if self.prime is not None:
            if not isinstance(self.prime, int) or not sympy.isprime(self.prime):
                raise PlaceError(f"{self.prime!r} is not a prime")

    @classmethod
    def real(cls) -> "Place":
        return cls(None)

    @classmethod
    def finite(cls, p: int) -> "Place":
        return cls(p)

    @property
    def is_real(self) -> bool:
        return self.prime is None

    @property
    def is_finite(self) -> bool:
        return self.prime is not None

    def __str__(self):
        return "real" if self.prime is None else f"p:{self.prime}"

    @classmethod
    def parse(cls, text: str) -> "Place":
        t = text.strip().lower()
        if t in ("real", "inf", "infinity"):
            return cls(None)
        if t.startswith("p:"):
            return cls(int(t[2:]))
        raise PlaceError(f"cannot parse place {text!r}")


REAL = Place(None)


def valuation(x, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    x = Fraction(x)
    if x == 0:
        raise ValueError("valuation of zero")
    v = 0
    n, d = x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


@dataclass(frozen=True)
class PadicScalar:
    """A p-adic quantity known through its valuation (and optionally unit residue).

    As an absolute value it stands for p^(-valuation).  ``valuation`` None is
    the zero scalar.
    """

    p: int
    valuation: Optional[Fraction]
    unit: Optional[int] = None
    precision: int = 0
    source: Optional[Callable[[int], "PadicScalar"]] = field(default=None, compare=False, repr=False)

    @property
    def is_zero(self) -> bool:
        return self.valuation is None

    @property
    def value(self) -> Fraction:
        """Exact absolute value; requires an integral valuation."""
        if self.valuation is None:
            return Fraction(0)
        if self.valuation.denominator != 1:
            raise ValueError("absolute value is irrational; use enclosure()")
        return Fraction(self.p) ** int(-self.valuation)

    def enclosure(self, prec: int = DEFAULT_PREC) -> Interval:
        if self.valuation is None:
            return Interval(0)
        if self.valuation.denominator == 1:
            return Interval(self.value)
        return Interval(self.p).power(-self.valuation, prec)

    def _check(self, other):
        if not isinstance(other, PadicScalar) or other.p != self.p:
            raise TypeError("comparison of p-adic scalars at different places")

    def compare_rational(self, c) -> int:
        """Sign of p^(-v) - c, computed exactly."""
        c = Fraction(c)
        if self.valuation is None:
            return -1 if c > 0 else (0 if c == 0 else 1)
        if c <= 0:
            return 1
        a, b = -self.valuation.numerator, self.valuation.denominator
        lhs = Fraction(self.p) ** a
        rhs = c ** b
        return (lhs > rhs) - (lhs < rhs)

    def __lt__(self, other):
        if isinstance(other, PadicScalar):
            self._check(other)
            if self.valuation is None:
                return other.valuation is not None
            if other.valuation is None:
                return False
            return self.valuation > other.valuation
        return self.compare_rational(other) < 0

    def __le__(self, other):
        return self == other or self < other

    def __gt__(self, other):
        if isinstance(other, PadicScalar):
            return other < self
        return self.compare_rational(other) > 0

    def __ge__(self, other):
        return self == other or self > other

    def __eq__(self, other):
        if isinstance(other, PadicScalar):
            return self.p == other.p and self.valuation == other.valuation
        if isinstance(other, (int, Fraction)):
            return self.compare_rational(other) == 0
        return NotImplemented

    def __hash__(self):
        return hash((self.p, self.valuation))

    def __mul__(self, other):
        if isinstance(other, PadicScalar):
            if other.p != self.p:
                raise TypeError("place mismatch")
            if self.valuation is None or other.valuation is None:
                return PadicScalar(self.p, None)
            return PadicScalar(self.p, self.valuation + other.valuation)
        if isinstance(other, (int, Fraction)) and other != 0 and _is_p_power(Fraction(other), self.p):
            return self * PadicScalar(self.p, -Fraction(valuation(other, self.p)))
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, PadicScalar):
            return self * other ** -1
        return NotImplemented

    def __pow__(self, r):
        r = Fraction(r)
        if self.valuation is None:
            if r <= 0:
                raise ZeroDivisionError("power of zero")
            return self
        return PadicScalar(self.p, self.valuation * r)

    def log(self, prec: int = DEFAULT_PREC) -> Interval:
        """Enclosure of log of the absolute value."""
        if self.valuation is None:
            raise ValueError("log of zero")
        if self.valuation == 0:
            return Interval(0)
        return Interval(self.p).log(prec) * (-self.valuation)

    def __repr__(self):
        if self.valuation is None:
            return f"PadicScalar(p={self.p}, zero)"
        return f"PadicScalar(p={self.p}, |.|=p^{-self.valuation})"


LocalScalar = Union[Interval, PadicScalar]


def _is_p_power(x: Fraction, p: int) -> bool:
    x = abs(x)
    n, d = x.numerator, x.denominator
    for q in (n, d):
        while q % p == 0:
            q //= p
        if q != 1:
            return False
    return True


def as_interval(x, prec: int = DEFAULT_PREC) -> Interval:
    if isinstance(x, Interval):
        return x
    if isinstance(x, PadicScalar):
        return x.enclosure(prec)
    return Interval(Fraction(x))


def abs_at_place(x, v: Place) -> LocalScalar:
    """|x|_v for a nonzero rational x; exact."""
    x = Fraction(x)
    if x == 0:
        raise ValueError("abs_at_place requires a nonzero rational")
    if v.is_real:
        return Interval(abs(x))
    val = valuation(x, v.prime)
    unit = x / Fraction(v.prime) ** val
    return PadicScalar(v.prime, Fraction(val), unit=unit.numerator * pow(unit.denominator, -1, v.prime) % v.prime,
                       precision=1)


def abs_value(x, v: Place) -> Fraction:
    """|x|_v as an exact rational (real place: |x|; finite: p^-v_p(x)); 0 for 0."""
    x = Fraction(x)
    if x == 0:
        return Fraction(0)
    if v.is_real:
        return abs(x)
    return Fraction(v.prime) ** (-valuation(x, v.prime))


def product_formula_places(x) -> list[Place]:
    """Places where |x|_v differs from 1 (real place first)."""
    x = Fraction(x)
    primes = sorted({int(p) for p in sympy.factorint(abs(x.numerator))}
                    | {int(p) for p in sympy.factorint(x.denominator)})
    return [REAL] + [Place(p) for p in primes]


# --- Newton polygons ----------------------------------------------------------

@dataclass(frozen=True)
class RootValuations:
    """Valuations of the nonzero roots, with multiplicity, plus the zero-root count."""

    valuations: tuple
    zero_roots: int = 0

    def __iter__(self):
        return iter(self.valuations)

    def __len__(self):
        return len(self.valuations)

    def as_multiset(self) -> dict:
        out: dict = {}
        for x in self.valuations:
            out[x] = out.get(x, 0) + 1
        return out


def _lower_hull(points):
    hull = []
    for pt in points:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] if it lies on or above the segment hull[-2] -> pt
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def newton_polygon(coeffs: Sequence, p: int) -> list[tuple[int, Fraction]]:
    """Vertices of the lower convex hull of (i, v_p(c_i)); coefficients low degree first."""
    pts = [(i, Fraction(valuation(c, p))) for i, c in enumerate(coeffs) if Fraction(c) != 0]
    return _lower_hull(pts)


def newton_root_valuations(coeffs: Sequence, p: int) -> RootValuations:
    """p-adic valuations of the roots of sum coeffs[i] x^i, via the Newton polygon."""
    cs = [Fraction(c) for c in coeffs]
    while cs and cs[-1] == 0:
        cs.pop()
    if len(cs) <= 1:
        raise ValueError("constant polynomial has no roots")
    zeros = 0
    while cs[0] == 0:
        cs.pop(0)
        zeros += 1
    hull = newton_polygon(cs, p)
    vals = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        slope = (y2 - y1) / (x2 - x1)
        vals.extend([-slope] * (x2 - x1))
    return RootValuations(tuple(sorted(vals)), zeros)


# --- polynomials -----------------------------------------------------------

_X = sympy.Symbol("x")


def _poly(coeffs: Sequence) -> sympy.Poly:
    return sympy.Poly([sympy.Rational(int(Fraction(c).numerator), int(Fraction(c).denominator))
                       for c in reversed(list(coeffs))], _X)


def _eval(coeffs: Sequence, x):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _derivative(coeffs: Sequence) -> list:
    return [i * c for i, c in enumerate(coeffs)][1:]


def primitive_part(coeffs: Sequence) -> tuple[int, ...]:
    from .linalg import primitive_integer
    ints = primitive_integer([Fraction(c) for c in coeffs])
    if ints and ints[-1] < 0:
        ints = tuple(-c for c in ints)
    return ints


def _disc_radius(cplx_lo, cplx_hi, prec) -> Interval:
    """Range of |z| over the rectangle spanned by two complex corners."""
    a, c = _rat(sympy.re(cplx_lo)), _rat(sympy.im(cplx_lo))
    b, d = _rat(sympy.re(cplx_hi)), _rat(sympy.im(cplx_hi))
    nx = Fraction(0) if a <= 0 <= b else min(abs(a), abs(b))
    ny = Fraction(0) if c <= 0 <= d else min(abs(c), abs(d))
    fx, fy = max(abs(a), abs(b)), max(abs(c), abs(d))
    return Interval(sqrt_interval(nx * nx + ny * ny, prec).lo, sqrt_interval(fx * fx + fy * fy, prec).hi)


def _rat(x) -> Fraction:
    x = sympy.Rational(x)
    return Fraction(int(x.p), int(x.q))


def root_modulus_enclosures(coeffs: Sequence, eps: Fraction, prec: int = DEFAULT_PREC):
    """(modulus enclosure, multiplicity) for every complex root, certified by sympy's isolation."""
    P = _poly(coeffs)
    real, cplx = P.intervals(all=True, eps=sympy.Rational(eps.numerator, eps.denominator))
    out = []
    for (a, b), mult in real:
        a, b = _rat(a), _rat(b)
        lo = Fraction(0) if a <= 0 <= b else min(abs(a), abs(b))
        out.append((Interval(lo, max(abs(a), abs(b))), mult))
    for (lo, hi), mult in cplx:
        out.append((_disc_radius(lo, hi, prec), mult))
    return out


def log_mahler_measure(coeffs: Sequence, tol: Fraction = Fraction(1, 10 ** 12),
                       prec: int = DEFAULT_PREC) -> Interval:
    """Enclosure of log|lead| + sum over complex roots of log+|root|."""
    ints = primitive_part(coeffs)
    lead = Interval(abs(ints[-1])).log(prec)
    eps = Fraction(1, 1 << 20)
    while True:
        total = lead
        for modulus, mult in root_modulus_enclosures(ints, eps, prec):
            total = total + modulus.log_plus(prec) * mult
        if total.width <= tol or eps < Fraction(1, 1 << 400):
            return total
        eps = eps * eps


# --- algebraic numbers ------------------------------------------------------

@dataclass(frozen=True)
class RealSelector:
    lo: Fraction
    hi: Fraction


@dataclass(frozen=True)
class PadicSelector:
    p: int
    residue: int
    precision: int


@dataclass(frozen=True)
class AlgebraicNumber:
    """A root of an irreducible primitive integer polynomial (low degree first)."""

    minpoly: tuple
    selector: Union[RealSelector, PadicSelector]

    def __post_init__(self):
        cs = primitive_part(self.minpoly)
        if tuple(cs) != tuple(self.minpoly):
            raise ValueError("minimal polynomial must be a primitive integer polynomial")
        if len(cs) < 2:
            raise ValueError("minimal polynomial must be non-constant")
        if not _poly(cs).is_irreducible:
            raise ValueError("minimal polynomial is reducible over Q")
        sel = self.selector
        if isinstance(sel, RealSelector):
            n = _poly(cs).count_roots(sympy.Rational(sel.lo.numerator, sel.lo.denominator),
                                      sympy.Rational(sel.hi.numerator, sel.hi.denominator))
            if n != 1:
                raise ValueError(f"interval isolates {n} roots, need exactly one")
        else:
            mod = sel.p ** sel.precision
            if _eval(cs, sel.residue) % mod != 0:
                raise ValueError("residue is not a root modulo p^N")
            if _eval(_derivative(cs), sel.residue) % sel.p == 0:
                raise ValueError("root is not simple modulo p; Hensel data is not isolating")

    @property
    def degree(self) -> int:
        return len(self.minpoly) - 1

    @classmethod
    def rational(cls, x) -> "AlgebraicNumber":
        x = Fraction(x)
        return cls((-x.numerator, x.denominator), RealSelector(x - 1, x + 1))

    def enclosure(self, prec: int = DEFAULT_PREC) -> Interval:
        if not isinstance(self.selector, RealSelector):
            raise TypeError("p-adic root has no real enclosure")
        lo, hi = _refine_real_root(self.minpoly, self.selector.lo, self.selector.hi, prec)
        return Interval(lo, hi, source=self.enclosure)

    def padic(self, precision: int) -> PadicScalar:
        """Hensel-lift the selected p-adic root to residue modulo p^precision."""
        sel = self.selector
        if not isinstance(sel, PadicSelector):
            raise TypeError("real root has no p-adic expansion")
        r = hensel_lift(self.minpoly, sel.p, sel.residue, sel.precision, max(precision, sel.precision))
        n = max(precision, sel.precision)
        if r % sel.p ** n == 0:
            return PadicScalar(sel.p, Fraction(n), unit=None, precision=n, source=self.padic)
        v = 0
        while r % sel.p == 0:
            r //= sel.p
            v += 1
        return PadicScalar(sel.p, Fraction(v), unit=r % sel.p ** (n - v), precision=n - v, source=self.padic)

    def weil_height(self, tol: Fraction = Fraction(1, 10 ** 12)) -> Interval:
        return weil_height(self, tol)


def hensel_lift(coeffs: Sequence, p: int, r: int, n_from: int, n_to: int) -> int:
    """Lift a simple root r mod p^n_from to a root mod p^n_to (Newton iteration)."""
    df = _derivative(list(coeffs))
    n = n_from
    while n < n_to:
        n = min(2 * n, n_to)
        mod = p ** n
        fr = _eval(coeffs, r) % mod
        dr = _eval(df, r) % mod
        r = (r - fr * pow(dr, -1, mod)) % mod
    return r % p ** n_to


def _sign(coeffs, x: Fraction) -> int:
    v = _eval(coeffs, x)
    return (v > 0) - (v < 0)


def _refine_real_root(coeffs, lo: Fraction, hi: Fraction, prec: int) -> tuple[Fraction, Fraction]:
    """Shrink an isolating interval of a simple root to relative width ~2^-prec."""
    cs = [Fraction(c) for c in coeffs]
    slo, shi = _sign(cs, lo), _sign(cs, hi)
    if slo == 0:
        return lo, lo
    if shi == 0:
        return hi, hi
    scale = max(abs(lo), abs(hi), Fraction(1))
    target = scale / (1 << prec)
    # Newton guess followed by a tight sign-change bracket
    import mpmath
    with mpmath.workprec(prec + 20):
        f = lambda t: sum(mpmath.mpf(c.numerator) / c.denominator * t ** i for i, c in enumerate(cs))
        try:
            guess = mpmath.findroot(f, (mpmath.mpf(lo.numerator) / lo.denominator + mpmath.mpf(hi.numerator) / hi.denominator) / 2)
            g = Fraction(guess.real) if isinstance(guess, mpmath.mpc) else Fraction(guess)
        except (ValueError, ZeroDivisionError, TypeError):
            g = None
    if g is not None and lo < g < hi:
        a, b = max(lo, g - target / 4), min(hi, g + target / 4)
        sa, sb = _sign(cs, a), _sign(cs, b)
        if sa == 0:
            return a, a
        if sb == 0:
            return b, b
        if sa != sb:
            return a, b
    while hi - lo > target:
        m = (lo + hi) / 2
        sm = _sign(cs, m)
        if sm == 0:
            return m, m
        if sm == slo:
            lo = m
        else:
            hi = m
    return lo, hi


def weil_height(alpha: AlgebraicNumber, tol: Fraction = Fraction(1, 10 ** 12)) -> Interval:
    """Absolute logarithmic Weil height, via the Mahler measure of the minimal polynomial."""
    m = log_mahler_measure(alpha.minpoly, tol=tol * alpha.degree)
    return m / alpha.degree


def refine(x, target: int):
    """Return an enclosure of x at least as tight as ``target`` bits (never wider)."""
    if isinstance(x, Interval):
        if x.is_point:
            return x
        if x.source is None:
            raise OpaqueScalarError("scalar carries no defining data")
        new = x.source(target)
        out = new.intersect(x) if new.overlaps(x) else new
        out.source = x.source
        return out
    if isinstance(x, PadicScalar):
        if x.unit is None or x.precision >= target:
            return x
        if x.source is None:
            raise OpaqueScalarError("p-adic scalar carries no defining data")
        return x.source(target)
    if isinstance(x, (int, Fraction)):
        return Interval(Fraction(x))
    raise TypeError(f"cannot refine {type(x).__name__}")
