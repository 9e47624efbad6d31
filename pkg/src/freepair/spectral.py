"""Norms, eigenvalue moduli, proximality and contraction estimates at a place of Q.

Eigenvalue moduli are certified: exactly through Newton polygons at finite
places, and through isolated complex root enclosures at the real place, where
coinciding moduli are confirmed by counting roots of the polynomial whose roots
are the products of pairs of eigenvalues.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.linalg
import sympy

from . import linalg as la
from .intervals import DEFAULT_PREC, Interval, round_down, sqrt_interval
from .places import (PadicScalar, Place, abs_value, as_interval, newton_root_valuations,
                     primitive_part, root_modulus_enclosures, valuation)
from .projmetric import (Ball, ball_image, dist_point_hyperplane, fs_distance, frobenius_sq,
                         maps_into, operator_norm)


class PrecisionEscalation(RuntimeError):
    """A comparison could not be decided at the working precision."""


class UnsupportedExtension(ValueError):
    """The computation needs arithmetic in an extension of Q that is not enabled."""


class BudgetExceeded(RuntimeError):
    pass


# --- matrix sets --------------------------------------------------------------

@dataclass(frozen=True)
class MatrixSet:
    """A finite list of invertible rational matrices, in generation order."""

    matrices: tuple
    contains_identity: bool = field(init=False)
    symmetric: bool = field(init=False)

    def __post_init__(self):
        mats = tuple(la.mat(m) for m in self.matrices)
        if not mats:
            raise ValueError("empty matrix set")
        d = len(mats[0])
        for m in mats:
            if len(m) != d or any(len(r) != d for r in m):
                raise ValueError("dimension mismatch in matrix set")
            if la.det(m) == 0:
                raise la.SingularMatrixError("singular matrix in set")
        object.__setattr__(self, "matrices", mats)
        members = set(mats)
        object.__setattr__(self, "contains_identity", la.identity(d) in members)
        object.__setattr__(self, "symmetric", all(la.inverse(m) in members for m in mats))

    @property
    def dim(self) -> int:
        return len(self.matrices[0])

    def __len__(self):
        return len(self.matrices)

    def __iter__(self):
        return iter(self.matrices)

    def closure(self) -> "MatrixSet":
        """Adjoin missing inverses (after the inputs) and then the identity."""
        mats = list(dict.fromkeys(self.matrices))
        seen = set(mats)
        for m in list(mats):
            inv = la.inverse(m)
            if inv not in seen:
                mats.append(inv)
                seen.add(inv)
        ident = la.identity(self.dim)
        if ident not in seen:
            mats.append(ident)
        return MatrixSet(tuple(mats))


# --- product sets -------------------------------------------------------------

def product_levels(F: MatrixSet, n: int, budget: int = 200_000):
    """Yield (q, {matrix: word}) for q = 1..n where the dict is F^q with first-found words.

    Words are tuples of member indices; enumeration is breadth first and
    lexicographic in generation order, so the recorded word is the smallest.
    """
    level = {}
    for i, m in enumerate(F.matrices):
        level.setdefault(m, (i,))
    yield 1, level
    for q in range(2, n + 1):
        nxt = {}
        for m, w in level.items():
            for i, g in enumerate(F.matrices):
                prod = la.mul(m, g)
                if prod not in nxt:
                    nxt[prod] = w + (i,)
                    if len(nxt) > budget:
                        raise BudgetExceeded(f"|F^{q}| exceeds budget {budget}")
        if not F.contains_identity:
            pass
        level = nxt
        yield q, level


def product_set(F: MatrixSet, n: int, budget: int = 200_000) -> dict:
    out = {}
    for _, level in product_levels(F, n, budget):
        out = level
    return out


# --- eigenvalue moduli ------------------------------------------------------------

@dataclass(frozen=True)
class ModulusClass:
    """Eigenvalues of a single |.|_v modulus."""

    modulus: object            # Interval (real) or PadicScalar (finite)
    multiplicity: int
    factors: tuple             # ((factor index, number of its roots in this class), ...)
    rational: bool             # every contributing Q-factor lies entirely in this class


@dataclass(frozen=True)
class FactorData:
    coeffs: tuple              # primitive integer coefficients, low degree first
    multiplicity: int


@lru_cache(maxsize=4096)
def _factor_charpoly(cp: tuple) -> tuple:
    x = sympy.Symbol("x")
    poly = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(cp)], x)
    _, facs = sympy.factor_list(poly)
    out = []
    for f, m in facs:
        coeffs = tuple(int(c) for c in reversed(f.all_coeffs()))
        out.append(FactorData(primitive_part(coeffs), int(m)))
    out.sort(key=lambda fd: (len(fd.coeffs), fd.coeffs))
    return tuple(out)


def charpoly_factors(a: la.Matrix) -> tuple:
    return _factor_charpoly(la.charpoly(a))


@lru_cache(maxsize=512)
def _pair_product_poly(coeffs: tuple) -> sympy.Poly:
    """Squarefree polynomial whose roots include |alpha|^2 for each root alpha."""
    x, y = sympy.symbols("x y")
    D = len(coeffs) - 1
    f = sum(c * x ** i for i, c in enumerate(coeffs))
    g = sum(c * y ** i * x ** (D - i) for i, c in enumerate(coeffs))
    r = sympy.Poly(sympy.resultant(f, g, x), y)
    return sympy.Poly(sympy.sqf_part(r.as_expr()), y)


def _classes_real(a: la.Matrix, prec: int) -> list[ModulusClass]:
    d = len(a)
    if d == 2:
        return _classes_real_2x2(a, prec)
    factors = charpoly_factors(a)
    eps = Fraction(1, 1 << 24)
    for _ in range(12):
        roots = []  # (modulus interval, factor index, root id)
        for k, fd in enumerate(factors):
            for rid, (modulus, mult) in enumerate(root_modulus_enclosures(fd.coeffs, eps, prec)):
                roots.extend([(modulus, k, (k, rid))] * (mult * fd.multiplicity))
        roots.sort(key=lambda t: (t[0].lo, t[0].hi))
        clusters = []
        for r in roots:
            if clusters and max(x[0].hi for x in clusters[-1]) >= r[0].lo:
                clusters[-1].append(r)
            else:
                clusters.append([r])
        undecided = False
        classes = []
        for cl in clusters:
            mod = Interval.hull(*[m for m, _, _ in cl])
            involved = sorted({k for _, k, _ in cl})
            if len({rid for _, _, rid in cl}) > 1:
                # confirm equality: one root of the pair-product polynomial in the hull
                y = sympy.Symbol("y")
                prod = sympy.Integer(1)
                for k in involved:
                    prod = sympy.lcm(prod, _pair_product_poly(factors[k].coeffs).as_expr())
                P = sympy.Poly(sympy.sqf_part(sympy.expand(prod)), y)
                sq = mod * mod
                n_roots = P.count_roots(sympy.Rational(sq.lo.numerator, sq.lo.denominator),
                                        sympy.Rational(sq.hi.numerator, sq.hi.denominator))
                if n_roots != 1:
                    undecided = True
                    break
            counts = {}
            for _, k, _ in cl:
                counts[k] = counts.get(k, 0) + 1
            rational = all(counts[k] == (len(factors[k].coeffs) - 1) * factors[k].multiplicity
                           for k in counts)
            classes.append(ModulusClass(mod, len(cl), tuple(sorted(counts.items())), rational))
        if not undecided:
            classes.sort(key=lambda c: -c.modulus.lo)
            return classes
        eps = eps * eps
    raise PrecisionEscalation("eigenvalue moduli could not be separated or identified")


def _classes_real_2x2(a: la.Matrix, prec: int) -> list[ModulusClass]:
    t = a[0][0] + a[1][1]
    det = a[0][0] * a[1][1] - a[0][1] * a[1][0]
    disc = t * t - 4 * det
    factors = charpoly_factors(a)
    if disc < 0:
        return [ModulusClass(sqrt_interval(det, prec), 2, ((0, 2),), True)]
    if disc == 0 or t == 0:
        return [ModulusClass(abs(Interval(t) / 2) if disc == 0 else sqrt_interval(-det, prec), 2,
                             tuple((k, len(fd.coeffs) - 1) for k, fd in enumerate(factors)), True)]
    root = sqrt_interval(disc, prec + 8)
    big = (root + abs(t)) / 2
    small = abs(det) / big
    if len(factors) == 1 and factors[0].multiplicity == 1:
        return [ModulusClass(big, 1, ((0, 1),), False), ModulusClass(small, 1, ((0, 1),), False)]
    # rational eigenvalues: identify which linear factor is the big one
    roots = [Fraction(-fd.coeffs[0], fd.coeffs[1]) for fd in factors]
    order = sorted(range(len(roots)), key=lambda k: -abs(roots[k]))
    return [ModulusClass(Interval(abs(roots[k])), 1, ((k, 1),), True) for k in order]


def _classes_finite(a: la.Matrix, p: int) -> list[ModulusClass]:
    factors = charpoly_factors(a)
    by_val = {}
    for k, fd in enumerate(factors):
        vals = newton_root_valuations(fd.coeffs, p)
        per = {}
        for v in vals:
            per[v] = per.get(v, 0) + 1
        for v, c in per.items():
            by_val.setdefault(v, []).append((k, c * fd.multiplicity, len(per) == 1))
    classes = []
    for v in sorted(by_val):
        members = by_val[v]
        mult = sum(c for _, c, _ in members)
        rational = all(whole for _, _, whole in members)
        classes.append(ModulusClass(PadicScalar(p, v), mult,
                                    tuple((k, c) for k, c, _ in members), rational))
    return classes


_CLASS_CACHE: dict = {}


def modulus_classes(a: la.Matrix, v: Place, prec: int = DEFAULT_PREC) -> list[ModulusClass]:
    """Eigenvalue modulus classes at v, sorted by decreasing modulus."""
    key = (a, v, prec)
    hit = _CLASS_CACHE.get(key)
    if hit is not None:
        return hit
    out = _classes_real(a, prec) if v.is_real else _classes_finite(a, v.prime)
    if len(_CLASS_CACHE) > 20000:
        _CLASS_CACHE.clear()
    _CLASS_CACHE[key] = out
    return out


def eigen_moduli(a: la.Matrix, v: Place, prec: int = DEFAULT_PREC) -> list:
    """Moduli |lambda_1| >= ... >= |lambda_d| with multiplicity."""
    out = []
    for c in modulus_classes(a, v, prec):
        out.extend([c.modulus] * c.multiplicity)
    return out


def top_modulus(a: la.Matrix, v: Place, prec: int = DEFAULT_PREC):
    """Lambda_v(a)."""
    return modulus_classes(a, v, prec)[0].modulus


def second_modulus(a: la.Matrix, v: Place, prec: int = DEFAULT_PREC):
    """lambda_v(a): modulus of the second eigenvalue counted with multiplicity."""
    cls = modulus_classes(a, v, prec)
    if cls[0].multiplicity > 1:
        return cls[0].modulus
    if len(cls) == 1:
        return Interval(0) if v.is_real else PadicScalar(v.prime, None)
    return cls[1].modulus


def is_proximal(a: la.Matrix, v: Place, prec: int = DEFAULT_PREC) -> bool:
    return modulus_classes(a, v, prec)[0].multiplicity == 1


# --- set-level quantities -----------------------------------------------------------

def _max_scalar(values: Sequence, v: Place):
    if v.is_real:
        return Interval(max(x.lo for x in values), max(x.hi for x in values))
    return max(values, key=lambda s: (-s.valuation if s.valuation is not None else -math.inf))


def matrix_norm(a: la.Matrix, v: Place, prec: int = DEFAULT_PREC):
    """Operator norm: Interval at the real place, PadicScalar at a finite place."""
    if v.is_real:
        return operator_norm(a, v, prec)
    m = max((x for r in a for x in r if x != 0), key=lambda x: abs_value(x, v))
    return PadicScalar(v.prime, Fraction(valuation(m, v.prime)))


def _gram_bound(a: la.Matrix) -> Fraction:
    """Exact upper bound for the top eigenvalue of a^T a (max absolute row sum)."""
    g = la.mul(la.transpose(a), a)
    return max(sum(abs(x) for x in row) for row in g)


def max_operator_norm(mats: Iterable[la.Matrix], v: Place, prec: int = DEFAULT_PREC):
    """max ||m||_v over mats, certifying only the candidates that may attain it."""
    mats = list(mats)
    if v.is_finite:
        best = None
        for m in mats:
            n = matrix_norm(m, v)
            if best is None or n > best:
                best = n
        return best
    arr = np.array([[[float(x) for x in r] for r in m] for m in mats])
    if np.all(np.isfinite(arr)) and arr.size and np.max(np.abs(arr)) < 1e150:
        est = np.linalg.norm(arr, 2, axis=(1, 2))
        order = list(np.argsort(-est, kind="stable"))
    else:
        order = list(range(len(mats)))
    best = None
    for idx in order:
        m = mats[idx]
        if best is not None and _gram_bound(m) < best.lo * best.lo:
            continue
        n = operator_norm(m, v, prec)
        best = n if best is None else best.max(n)
    return best


def set_norm(F: MatrixSet | Sequence, v: Place, prec: int = DEFAULT_PREC):
    """||F||_v = max over members of the operator norm at v."""
    mats = F.matrices if isinstance(F, MatrixSet) else [la.mat(m) for m in F]
    return max_operator_norm(mats, v, prec)


def _float_spectral_radius(m: la.Matrix) -> float:
    try:
        return float(max(abs(np.linalg.eigvals(la.to_float(m)))))
    except (OverflowError, np.linalg.LinAlgError):
        return math.inf


def lambda_max(F: MatrixSet | Sequence, v: Place, prec: int = DEFAULT_PREC):
    """Lambda_v(F): the largest eigenvalue modulus over members of F."""
    mats = F.matrices if isinstance(F, MatrixSet) else [la.mat(m) for m in F]
    return max_top_modulus(mats, v, prec)[0]


def max_top_modulus(mats: Sequence[la.Matrix], v: Place, prec: int = DEFAULT_PREC):
    """(max_m Lambda_v(m), index attaining it first in the given order)."""
    if v.is_finite:
        best, arg = None, None
        for i, m in enumerate(mats):
            t = top_modulus(m, v, prec)
            if best is None or t > best:
                best, arg = t, i
        return best, arg
    est = [_float_spectral_radius(m) for m in mats]
    order = sorted(range(len(mats)), key=lambda i: (-est[i], i))
    best = None
    seen = []
    for i in order:
        m = mats[i]
        if best is not None:
            # Lambda(m) is at most any operator norm; the float estimate only prefilters
            if _cheap_norm_bound(m) < best.lo:
                continue
            if len(m) > 2 and math.isfinite(est[i]) and est[i] < float(best.lo) * (1 - FLOAT_PREFILTER):
                continue
        t = top_modulus(m, v, prec)
        seen.append((i, t))
        best = t if best is None else best.max(t)
    arg = min(i for i, t in seen if t.hi >= best.lo)
    return best, arg


# relative margin under which float eigenvalue estimates skip exact work (d >= 3 only)
FLOAT_PREFILTER = 1e-3


def _cheap_norm_bound(m: la.Matrix) -> Fraction:
    """min of the 1- and infinity- operator norms, an upper bound for every eigenvalue modulus."""
    rows = max(sum(abs(x) for x in r) for r in m)
    cols = max(sum(abs(r[j]) for r in m) for j in range(len(m)))
    return min(rows, cols)


def _root_scalar(x, q: int, v: Place, prec: int):
    if q == 1:
        return x
    if v.is_real:
        return x.root(q, prec)
    return x ** Fraction(1, q)


@dataclass(frozen=True)
class Estimate:
    """A local estimate and whether it is exact or only a lower bound."""

    value: object
    tag: str                   # "exact" | "lower-bound" | "upper-sample"
    witness: tuple = ()        # word attaining the value (member indices)
    q: int = 1


def minimal_norm_estimate(F: MatrixSet, v: Place, prec: int = DEFAULT_PREC,
                          budget: int = 50_000) -> Estimate:
    """max over q <= d^2 of Lambda_v(F^q)^(1/q).

    Exact (equal to the minimal norm) at finite places; a lower bound at the
    real place.  When |F^q| exceeds the budget the scan stops and the value is
    tagged as a lower bound.
    """
    if not F.contains_identity:
        raise ValueError("minimal_norm_estimate requires the identity in F")
    d = F.dim
    best = None
    best_word, best_q = (), 1
    tag = "exact" if v.is_finite else "lower-bound"
    try:
        for q, level in product_levels(F, d * d, budget):
            mats = list(level.keys())
            top, idx = max_top_modulus(mats, v, prec)
            val = _root_scalar(top, q, v, prec)
            if best is None or _strictly_greater(val, best, v):
                best, best_word, best_q = val, level[mats[idx]], q
            elif v.is_real:
                best = best.max(val)
    except BudgetExceeded:
        tag = "lower-bound"
    return Estimate(best, tag, best_word, best_q)


def _strictly_greater(x, y, v: Place) -> bool:
    if v.is_real:
        return x.lo > y.hi
    return x > y


def spectral_radius_estimate(F: MatrixSet, v: Place, n: int, prec: int = DEFAULT_PREC,
                             budget: int = 200_000):
    """||F^n||_v^(1/n), an upper sample for the joint spectral radius R_v(F)."""
    if n < 1:
        raise ValueError("n must be positive")
    mats = list(product_set(F, n, budget).keys())
    nrm = max_operator_norm(mats, v, prec)
    return _root_scalar(nrm, n, v, prec)


# --- eigenspaces ---------------------------------------------------------------------

def _round_vector(x: Sequence[Fraction], v: Place, bits: int) -> tuple:
    """Scale and round a vector to a short rational representative of its line."""
    if v.is_real:
        m = max(abs(t) for t in x)
        return tuple(round_down(t / m, bits) if t >= 0 else -round_down(-t / m, bits) for t in x)
    p = v.prime
    k = min(valuation(t, p) for t in x if t != 0)
    mod = p ** bits
    out = []
    for t in x:
        t = t / Fraction(p) ** k
        out.append(Fraction(t.numerator * pow(t.denominator, -1, mod) % mod) if t != 0 else Fraction(0))
    return tuple(out)


def _normalize_matrix(m: la.Matrix, v: Place, bits: int) -> la.Matrix:
    """Scalar multiple of m with entries rounded (projectively harmless)."""
    rows = [list(r) for r in m]
    flat = [x for r in rows for x in r if x != 0]
    if v.is_real:
        s = max(abs(x) for x in flat)
        return tuple(tuple(round_down(x / s, bits) if x >= 0 else -round_down(-x / s, bits) for x in r)
                     for r in rows)
    p = v.prime
    k = min(valuation(x, p) for x in flat)
    mod = p ** bits
    out = []
    for r in rows:
        row = []
        for x in r:
            t = x / Fraction(p) ** k
            row.append(Fraction(t.numerator * pow(t.denominator, -1, mod) % mod) if t != 0 else Fraction(0))
        out.append(tuple(row))
    return tuple(out)


def _power_normalized(a: la.Matrix, n: int, v: Place, bits: int) -> la.Matrix:
    result = None
    base = _normalize_matrix(a, v, bits)
    while n:
        if n & 1:
            result = base if result is None else _normalize_matrix(la.mul(result, base), v, bits)
        n >>= 1
        if n:
            base = _normalize_matrix(la.mul(base, base), v, bits)
    return result


def _abs_v(x: Fraction, v: Place) -> float:
    if v.is_real:
        return abs(float(x))
    if x == 0:
        return 0.0
    return float(v.prime) ** (-valuation(x, v.prime))


def _dominant_columns(m: la.Matrix, l: int, v: Place) -> list:
    """l columns of m spanning its dominant l-dimensional part (largest l-minor)."""
    d = len(m)
    cols = la.transpose(m)
    best, best_cols = -1.0, None
    for J in combinations(range(d), l):
        sub = [cols[j] for j in J]
        pl = la.plucker(sub)
        size = max(_abs_v(x, v) for x in pl)
        if size > best:
            best, best_cols = size, J
    return [cols[j] for j in best_cols]


def _modulus_float(x) -> float:
    if isinstance(x, Interval):
        return float(x.mid)
    if x.valuation is None:
        return 0.0
    return float(x.p) ** float(-x.valuation)


def _iterations_for(ratio: float, bits: int) -> int:
    if ratio <= 0:
        return 4
    if ratio >= 1:
        raise PrecisionEscalation("no modulus gap")
    return min(max(4, int(math.ceil(bits * math.log(2) / -math.log(ratio))) + 4), 1 << 14)


def dominant_subspace(a: la.Matrix, l: int, v: Place, ratio: float, bits: int = 80) -> list:
    """Rational basis approximating the sum of the top-l generalized eigenspaces of a."""
    n = _iterations_for(ratio, bits)
    power = _power_normalized(a, n, v, bits + 16)
    basis = _dominant_columns(power, l, v)
    return [_round_vector(b, v, bits) for b in la.row_space(basis)] if v.is_finite else \
        [_round_vector(b, v, bits) for b in basis]


@dataclass(frozen=True)
class EigenGroup:
    modulus: object
    multiplicity: int
    basis: tuple
    exact: bool
    radius: Optional[Fraction] = None   # certified ball radius around a non-exact line


@dataclass(frozen=True)
class EigenStructure:
    place: Place
    groups: tuple
    provenance: str            # "rational-exact" | "extension-certified" | "extension-approximate"


def _exact_class_space(a: la.Matrix, cls: ModulusClass, factors) -> list:
    poly = [Fraction(1)]
    for k, _ in cls.factors:
        fd = factors[k]
        for _ in range(fd.multiplicity):
            poly = _poly_mul(poly, [Fraction(c) for c in fd.coeffs])
    return la.kernel(la.poly_of_matrix(poly, a))


def _poly_mul(f, g):
    out = [Fraction(0)] * (len(f) + len(g) - 1)
    for i, x in enumerate(f):
        for j, y in enumerate(g):
            out[i + j] += x * y
    return out


def _class_ratios(classes) -> list:
    mods = [_modulus_float(c.modulus) for c in classes]
    return mods


def _project_along(vectors, onto, along) -> list:
    """Project vectors onto span(onto) along span(along) (complementary bases)."""
    basis = list(onto) + list(along)
    m = la.transpose(tuple(basis))
    out = []
    for x in vectors:
        coords = la.solve(m, x)
        out.append(tuple(sum(coords[i] * onto[i][j] for i in range(len(onto))) for j in range(len(x))))
    return out


def eigenstructure(a: la.Matrix, v: Place, prec: int = DEFAULT_PREC) -> EigenStructure:
    """Generalized eigenspaces grouped by certified modulus class."""
    return _eigenstructure(la.mat(a), v, prec)


@lru_cache(maxsize=1024)
def _eigenstructure(a: la.Matrix, v: Place, prec: int) -> EigenStructure:
    if la.det(a) == 0:
        raise la.SingularMatrixError("eigenstructure requires an invertible matrix")
    classes = modulus_classes(a, v, prec)
    factors = charpoly_factors(a)
    mods = _class_ratios(classes)
    groups = []
    exact_all = True
    ainv = la.inverse(a)
    for idx, cls in enumerate(classes):
        if cls.rational:
            basis = _exact_class_space(a, cls, factors)
            groups.append(EigenGroup(cls.modulus, cls.multiplicity, tuple(la.row_space(basis)), True))
            continue
        exact_all = False
        top_dim = sum(c.multiplicity for c in classes[:idx + 1])
        bottom_dim = sum(c.multiplicity for c in classes[idx:])
        # attracting parts of a (classes 0..idx) and of a^-1 (classes idx..end)
        above = dominant_subspace(a, top_dim, v, mods[idx + 1] / mods[idx] if idx + 1 < len(mods) else 0.0)
        below = dominant_subspace(ainv, bottom_dim, v,
                                  (1 / mods[idx - 1]) / (1 / mods[idx]) if idx > 0 else 0.0)
        if idx == 0:
            basis = above
        elif idx == len(classes) - 1:
            basis = below
        else:
            strictly_below = dominant_subspace(ainv, bottom_dim - cls.multiplicity, v,
                                               (1 / mods[idx]) / (1 / mods[idx + 1]))
            basis = _project_along(below, above, strictly_below)[:cls.multiplicity]
            basis = la.row_space(basis)
        radius = None
        if cls.multiplicity == 1 and idx in (0, len(classes) - 1):
            # extreme simple lines are attracting for a or a^-1: certify a ball
            m = a if idx == 0 else ainv
            nb = mods[1] / mods[0] if idx == 0 else mods[-1] / mods[-2]
            ball, _ = _certify_fixed_ball(m, tuple(basis[0]), v, prec, nb)
            radius = ball.radius if ball is not None else None
        groups.append(EigenGroup(cls.modulus, cls.multiplicity, tuple(basis), False, radius))
    if exact_all:
        prov = "rational-exact"
    elif all(g.exact or g.radius is not None for g in groups):
        prov = "extension-certified"
    else:
        prov = "extension-approximate"
    return EigenStructure(v, tuple(groups), prov)


# --- proximality -----------------------------------------------------------------

@dataclass(frozen=True)
class ProximalProfile:
    top: object                # Lambda
    second: object             # lambda
    attracting: tuple          # rational point equal to or certified near V_a
    repelling: tuple           # linear form f whose kernel is (or is certified near) H_a
    attracting_radius: Fraction   # V_a lies in ball(attracting, radius); 0 if exact
    repelling_radius: Fraction    # f_a lies in the dual ball of this radius; 0 if exact
    sep: Interval              # enclosure of d(V_a, H_a)
    exact: bool


def _certify_fixed_ball(a: la.Matrix, c: tuple, v: Place, prec: int, ratio: float):
    """Smallest ball around c that a maps strictly into itself with Lipschitz < 1."""
    err = fs_distance(la.apply(a, c), c, v, prec)
    base = float(err.hi) / max(1e-300, 1 - min(ratio, 0.999999)) * 4
    # radii much below the working precision cannot be certified
    floor = Fraction(1, 1 << max(8, prec - 24))
    r = max(Fraction(base).limit_denominator(1 << 62) if base > 1e-300 else floor, floor)
    if v.is_finite:
        # p-adic balls: radii are powers of p
        p = v.prime
        k = 0
        while Fraction(1, p ** (k + 1)) >= r and k < 4000:
            k += 1
        r = Fraction(1, p ** k) if k > 0 else Fraction(1, p)
    while r < Fraction(1, 2):
        ball = Ball(c, r)
        ok, _ = maps_into(a, ball, ball, v, prec)
        img = ball_image(a, ball, v, prec) if ok else None
        if ok and img is not None and img.lipschitz.hi < 1:
            return ball, img.lipschitz
        r = r * 4 if v.is_real else r * v.prime
        if v.is_finite and r >= 1:
            break
    return None, None


def tits_converse_check(a: la.Matrix, ball: Ball, v: Place, prec: int = DEFAULT_PREC):
    """If a maps closed ball into its interior with Lipschitz constant < 1, return a certificate.

    The certificate records that a is proximal, V_a lies in the ball and
    lambda/Lambda <= the Lipschitz bound.
    """
    a = la.mat(a)
    ok, reach = maps_into(a, ball, ball, v, prec)
    if not ok:
        return None
    img = ball_image(a, ball, v, prec)
    if img is None or not img.lipschitz.hi < 1:
        return None
    return TitsCertificate(ball, img.lipschitz, reach)


@dataclass(frozen=True)
class TitsCertificate:
    ball: Ball
    lipschitz: Interval        # lambda/Lambda <= lipschitz.hi
    reach: Interval            # image of the ball lies within this distance of the center


def proximal_profile(a: la.Matrix, v: Place, prec: int = DEFAULT_PREC) -> Optional[ProximalProfile]:
    """Attracting point, repelling hyperplane and separation of a proximal matrix; None if not proximal."""
    return _proximal_profile(la.mat(a), v, prec)


@lru_cache(maxsize=2048)
def _proximal_profile(a: la.Matrix, v: Place, prec: int) -> Optional[ProximalProfile]:
    classes = modulus_classes(a, v, prec)
    if classes[0].multiplicity != 1 or len(classes) == 1:
        return None
    top, second = classes[0].modulus, classes[1].modulus
    if classes[0].rational:
        factors = charpoly_factors(a)
        (vec,) = _exact_class_space(a, classes[0], factors)
        rest = []
        for cls in classes[1:]:
            rest.extend(_exact_class_space(a, cls, factors) if cls.rational else [])
        if len(rest) == len(a) - 1:
            form = la.kernel(rest)[0]
        else:
            # H_a = kernel of the top factor's complement polynomial; its annihilator is
            # the top eigenvector of a^T
            at = la.transpose(a)
            form = _exact_class_space(at, modulus_classes(at, v, prec)[0], charpoly_factors(at))[0]
        sep = dist_point_hyperplane(vec, form, v, prec)
        return ProximalProfile(top, second, vec, form, Fraction(0), Fraction(0), sep, True)
    ratio = _modulus_float(second) / _modulus_float(top)
    c = dominant_subspace(a, 1, v, ratio, bits=min(prec, 120))[0]
    at = la.transpose(a)
    g = dominant_subspace(at, 1, v, ratio, bits=min(prec, 120))[0]
    ball_c, _ = _certify_fixed_ball(a, c, v, prec, ratio)
    ball_g, _ = _certify_fixed_ball(at, g, v, prec, ratio)
    if ball_c is None or ball_g is None:
        raise PrecisionEscalation("could not certify attracting/repelling data")
    mid = dist_point_hyperplane(c, g, v, prec)
    sep = separation_enclosure(mid, ball_c.radius, ball_g.radius, v)
    return ProximalProfile(top, second, c, g, ball_c.radius, ball_g.radius, sep, False)


def separation_enclosure(mid: Interval, r: Fraction, s: Fraction, v: Place) -> Interval:
    """Enclosure of d(x, ker h) for x within r of c and h within s of g, given d(c, ker g)."""
    if v.is_real:
        return Interval(max(Fraction(0), mid.lo - r - s), min(Fraction(1), mid.hi + r + s))
    if mid.lo > max(r, s):
        return mid
    return Interval(0, max(mid.hi, r, s))


# --- almost proximality ----------------------------------------------------------------

@dataclass(frozen=True)
class AlmostProximalProfile:
    omega: object              # cursor (a modulus value)
    top: object                # Lambda(a)
    big: object                # Lambda^omega
    small: object              # lambda^omega
    second: object             # lambda(a)
    dim: int                   # l_omega
    L_const: Interval          # L^omega
    eta: Fraction
    index: int                 # i0 of the scan
    attracting: tuple          # approximate basis of V^omega
    repelling: tuple           # approximate basis of H^omega

    @property
    def is_proximal(self) -> bool:
        return self.dim == 1


class NoCursor(Exception):
    """All eigenvalue moduli coincide (A = 1)."""


def _log_modulus(x, prec) -> Interval:
    if isinstance(x, PadicScalar):
        return x.log(prec)
    return x.log(prec)


def cursor_constant(eps: Fraction, d: int) -> Fraction:
    """C(eps, d) bounding log A in the failing case of the gap scan."""
    c = Fraction(1)
    for _ in range(d - 2):
        c = (1 + 1 / eps) * c + 1
    return c


def select_omega(a: la.Matrix, v: Place, eps: Fraction, prec: int = DEFAULT_PREC) -> AlmostProximalProfile:
    """Scan ordered eigenvalue gaps for the cursor omega."""
    a = la.mat(a)
    eps = Fraction(eps)
    if not eps > 0:
        raise ValueError("eps must be positive")
    d = len(a)
    moduli = eigen_moduli(a, v, prec)
    classes = modulus_classes(a, v, prec)
    if len(classes) == 1:
        raise NoCursor("all eigenvalue moduli are equal")
    work = prec
    while not all(m.lo > 0 for m in moduli if not isinstance(m, PadicScalar)):
        if work > 16 * prec:
            raise ValueError("eigenvalue modulus enclosure does not exclude zero")
        work *= 2
        moduli = eigen_moduli(a, v, work)
    logs = [_log_modulus(m, work) for m in moduli]
    ell = [logs[i] - logs[i + 1] for i in range(d - 1)]
    # exact zero gaps inside a class
    bounds = []
    acc = 0
    for c in classes:
        acc += c.multiplicity
        bounds.append(acc)
    for i in range(d - 1):
        if (i + 1) not in bounds:
            ell[i] = Interval(0)
    logA = logs[0] - logs[-1]
    eta = 1 / (4 * cursor_constant(eps, d))
    partial = Interval(0)
    for i0 in range(d - 1):
        lhs = ell[i0] - logA * eta
        rhs = partial / eps
        if (i0 + 1) in bounds and lhs.certainly_ge(rhs) and ell[i0].lo > 0:
            l = i0 + 1
            big, small = moduli[i0], moduli[i0 + 1]
            if v.is_real:
                bi, si = as_interval(big), as_interval(small)
                L = bi / (bi - si)
            else:
                L = Interval(1)
            ratio = _modulus_float(small) / _modulus_float(big)
            att = dominant_subspace(a, l, v, ratio)
            forms = dominant_subspace(la.transpose(a), l, v, ratio)
            rep = la.kernel(forms)
            return AlmostProximalProfile(big, moduli[0], big, small, second_modulus(a, v, prec), l,
                                         L, eta, i0, tuple(att), tuple(rep))
        partial = partial + ell[i0]
    raise PrecisionEscalation("gap scan undecided at this precision")


def almostprox_inequality(profile: AlmostProximalProfile, eps: Fraction, top_inv, prec: int = DEFAULT_PREC):
    """(lhs, rhs) of A^eta (Lambda/Lambda^omega)^(1/eps) <= Lambda^omega/lambda^omega in logs."""
    logA = _log_modulus(profile.top, prec) + _log_modulus(top_inv, prec)
    lhs = logA * profile.eta + (_log_modulus(profile.top, prec) - _log_modulus(profile.big, prec)) / Fraction(eps)
    rhs = _log_modulus(profile.big, prec) - _log_modulus(profile.small, prec)
    return lhs, rhs


# --- contraction bounds ---------------------------------------------------------------

def place_constants(v: Place, d: int) -> dict:
    """C_k, C_{k,1}, C_{k,2} and p(d) at v."""
    if v.is_real:
        return {"C": Fraction(2), "C1": Fraction(d), "C2": Fraction(d * 2 ** d), "p": 10 ** d}
    return {"C": Fraction(1), "C1": Fraction(1), "C2": Fraction(1), "p": 10 ** d}


def normalized_norm(a: la.Matrix, v: Place, prec: int = DEFAULT_PREC) -> Interval:
    """||a||_v / |det a|_v^(1/d): the norm of the SL_d representative of a."""
    d = len(a)
    det = la.det(a)
    nrm = as_interval(matrix_norm(a, v, prec), prec)
    dv = abs_value(det, v)
    if dv == 1:
        return nrm
    return nrm / Interval(dv).power(Fraction(1, d), prec)


def contraction_bound(a: la.Matrix, profile: AlmostProximalProfile, n: int, v: Place,
                      prec: int = DEFAULT_PREC) -> tuple[Interval, Interval]:
    """Right-hand sides of the (cont) and (lipa) contraction inequalities.

    The norm entering the prefactor is that of a / det(a)^(1/d), which acts
    identically on projective space, so the bounds also apply to GL_d inputs.
    """
    d = len(a)
    K = place_constants(v, d)
    nrm = normalized_norm(a, v, prec)
    top, big, small, second = (as_interval(x, prec) for x in
                               (profile.top, profile.big, profile.small, profile.second))
    l = profile.dim
    pre_cont = (nrm * K["C"]) ** K["p"]
    pre_lipa = (nrm * K["C"] * profile.L_const) ** K["p"]
    ratio_cont = Interval(K["C1"]) ** l * (top / big) ** (l - 1) * small / big
    ratio_lipa = Interval(K["C1"]) ** (2 * l + 2) * (top / big) ** (2 * l - 1) * second / top
    return (pre_cont * ratio_cont ** n).rounded(prec), (pre_lipa * ratio_lipa ** n).rounded(prec)


def interm_bound(a: la.Matrix, profile: AlmostProximalProfile, v: Place, prec: int = DEFAULT_PREC) -> Interval:
    """(C_k L^omega ||a||^l)^(binom(d, l) - 1), bounding d(V^omega, H^omega)^-1."""
    d = len(a)
    K = place_constants(v, d)
    nrm = normalized_norm(a, v, prec)
    l = profile.dim
    return (nrm ** l * K["C"] * profile.L_const) ** (math.comb(d, l) - 1)


# --- Cayley-Hamilton escape -----------------------------------------------------------

@dataclass(frozen=True)
class EscapeResult:
    j: int
    distance: Interval         # d(a0^j u, H)
    bound: Interval            # right-hand side of the escape inequality


class EscapeError(ValueError):
    pass


def cayley_escape(a0: la.Matrix, H, u: Sequence, v: Place, prec: int = DEFAULT_PREC) -> EscapeResult:
    """First j in [1, d] with d(a0^j u, H) >= (1/C2) (Lambda/||a0||)^j |det a0| / Lambda^d · d(u, H).

    The Cayley-Hamilton relation expresses det(a0) as a combination of
    a0, ..., a0^d, so j = d may be needed (e.g. a rotation by a right angle).
    """
    a0 = la.mat(a0)
    u = la.vec(u)
    form = H.form if hasattr(H, "form") else la.vec(H)
    d = len(a0)
    du = dist_point_hyperplane(u, form, v, prec)
    if du.hi == 0:
        raise EscapeError("u lies in H")
    K = place_constants(v, d)
    lam = as_interval(top_modulus(a0, v, prec), prec)
    nrm = as_interval(matrix_norm(a0, v, prec), prec)
    det = Interval(abs_value(la.det(a0), v))
    base = det / lam ** d * du / K["C2"]
    if v.is_finite:
        # every quantity is a rational power of p here, so compare exactly (equality does occur)
        lam_p, nrm_p = top_modulus(a0, v, prec), matrix_norm(a0, v, prec)
        base_p = lam_p ** (-d) * abs_value(la.det(a0), v) * du.lo
    x = u
    for j in range(1, d + 1):
        x = la.apply(a0, x)
        dist = dist_point_hyperplane(x, form, v, prec)
        if v.is_finite:
            exact = base_p * (lam_p / nrm_p) ** j
            if exact.compare_rational(dist.lo) <= 0:
                return EscapeResult(j, dist, as_interval(exact, prec))
            continue
        bound = (base * (lam / nrm) ** j).rounded(prec)
        if dist.certainly_ge(bound):
            return EscapeResult(j, dist, bound)
    raise PrecisionEscalation("no escape exponent certified")


# --- norm-reducing conjugation --------------------------------------------------------

def _flag_basis_p(a: la.Matrix, p: int, eigs: Sequence[Fraction]) -> la.Matrix:
    """Columns b_1..b_d in GL_d(Z_(p)) with a b_j in span(b_1..b_j)."""
    d = len(a)
    # flag from successive eigenvectors of a acting on quotients
    basis = []
    pivots = []
    current = []
    for lam in eigs:
        # vectors w with (a - lam) w in span(current)
        m = la.add(a, la.scale(la.identity(d), -lam))
        # solve (a - lam) w = sum c_i b_i  <=> [m | -B] (w, c) = 0
        cols = [tuple(m[i][j] for i in range(d)) for j in range(d)] + [tuple(-x for x in b) for b in current]
        system = [[c[i] for c in cols] for i in range(d)]
        found = None
        for sol in la.kernel(system):
            w = sol[:d]
            if any(w) and not la.span_contains(current, w) if current else any(w):
                found = w
                break
        if found is None:
            raise UnsupportedExtension("could not extend the invariant flag")
        w = list(found)
        # p-adic elimination against earlier pivots
        for b, r in zip(basis, pivots):
            if w[r] != 0:
                c = w[r] / b[r]
                w = [x - c * y for x, y in zip(w, b)]
        k = min(valuation(x, p) for x in w if x != 0)
        w = [x / Fraction(p) ** k for x in w]
        r = next(i for i in range(d) if i not in pivots and w[i] != 0 and valuation(w[i], p) == 0)
        basis.append(tuple(w))
        pivots.append(r)
        current = basis[:]
    return la.transpose(tuple(basis))


def fd_complex(fd: FactorData) -> bool:
    """True if the factor has a non-real root."""
    x = sympy.Symbol("x")
    P = sympy.Poly(list(reversed(fd.coeffs)), x)
    return P.count_roots() < P.degree()


def _rational_orthogonal(q: np.ndarray, max_den: int = 1 << 40) -> la.Matrix:
    """Exactly orthogonal rational matrix near q (Cayley transform)."""
    d = q.shape[0]
    q = q.copy()
    # make -1 a non-eigenvalue by flipping columns
    for j in range(d):
        if q[j, j] < 0:
            q[:, j] = -q[:, j]
    ident = np.eye(d)
    k = np.linalg.solve((ident + q).T, (ident - q).T).T
    ks = [[Fraction(0)] * d for _ in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            val = Fraction(float((k[i, j] - k[j, i]) / 2)).limit_denominator(max_den)
            ks[i][j] = val
            ks[j][i] = -val
    K = la.mat(ks)
    I = la.identity(d)
    return la.mul(la.add(I, la.scale(K, -1)), la.inverse(la.add(I, K)))


@dataclass(frozen=True)
class Conjugation:
    h: la.Matrix               # the conjugator diag(s^1, ..., s^d) g (SL_d scalar omitted)
    conjugate: la.Matrix       # h a h^-1
    scale_abs: Fraction        # |s|_v, at most ||a||_v
    norm_lower: Fraction       # exact rational lower bound for ||a||_v
    g_isometry: bool           # ||g||_v = ||g^-1||_v = 1, checked exactly
    norm_conj: Interval        # ||h a h^-1||_v
    norm_h_sl: Interval        # max(||h_SL||, ||h_SL^-1||) = |s|^((d-1)/2)
    bound_conj: Interval       # C_{k,1} Lambda_v(a)
    bound_h: Interval          # ||a||_v^((d-1)/2)

    @property
    def verified(self) -> bool:
        # |s| <= ||a|| gives |s|^((d-1)/2) <= ||a||^((d-1)/2) exactly
        return (self.norm_conj.certainly_le(self.bound_conj) and self.g_isometry
                and self.scale_abs <= self.norm_lower)


def reduce_norm_conjugate(a: la.Matrix, v: Place, prec: int = DEFAULT_PREC) -> Conjugation:
    """Triangularize a, then rescale by a diagonal matrix of powers of s with |s|_v = ||a||_v.

    The triangular form is upper triangular, so the rescaled off-diagonal
    entries T_ij s^(i-j) have modulus at most ||a|| / |s|^(j-i) <= 1.
    """
    a = la.mat(a)
    d = len(a)
    factors = charpoly_factors(a)
    lam_top = as_interval(top_modulus(a, v, prec), prec)
    nrm = as_interval(matrix_norm(a, v, prec), prec)
    if nrm.hi < 1 or lam_top.hi < 1:
        raise ValueError("the norm bounds require ||a||_v >= 1 and Lambda_v(a) >= 1")
    if v.is_finite:
        if any(len(fd.coeffs) != 2 for fd in factors):
            raise UnsupportedExtension("triangularization needs eigenvalues outside Q")
        eigs = []
        for fd in factors:
            eigs.extend([Fraction(-fd.coeffs[0], fd.coeffs[1])] * fd.multiplicity)
        eigs.sort(key=lambda x: (-abs_value(x, v), x))
        B = _flag_basis_p(a, v.prime, eigs)
        g = la.inverse(B)
        # ||a||_p = p^k exactly; s = p^-k
        s = 1 / nrm.lo
        isometry = matrix_norm(g, v).valuation == 0 and matrix_norm(B, v).valuation == 0
    else:
        if any(fd_complex(fd) for fd in factors):
            raise UnsupportedExtension("complex eigenvalues: real triangularization impossible")
        _, Z = scipy.linalg.schur(la.to_float(a), output="real")
        Q = _rational_orthogonal(Z)
        g = la.transpose(Q)
        s = nrm.lo
        isometry = la.is_identity(la.mul(g, Q))
    S = la.diag(*[s ** i for i in range(1, d + 1)])
    h = la.mul(S, g)
    conj = la.mul(la.mul(h, a), la.inverse(h))
    norm_conj = as_interval(matrix_norm(conj, v, prec), prec)
    K = place_constants(v, d)
    bound_conj = lam_top * K["C1"]
    s_abs = abs_value(s, v)
    # h_SL = s^(-(d+1)/2) diag(s^i) g: entries |s|^(i-(d+1)/2), symmetric under inversion
    norm_h_sl = Interval(s_abs).power(Fraction(d - 1, 2), prec)
    bound_h = nrm.power(Fraction(d - 1, 2), prec)
    return Conjugation(h, conj, s_abs, nrm.lo, isometry, norm_conj, norm_h_sl, bound_conj, bound_h)


# --- set-level frame balancing -------------------------------------------------------

def frobenius_energy(mats: Sequence[la.Matrix]) -> Fraction:
    """Sum of squared Frobenius norms; conjugation-balancing objective."""
    return sum((frobenius_sq(m) for m in mats), Fraction(0))


def _conj_all(g: la.Matrix, mats: Sequence[la.Matrix]) -> list:
    gi = la.inverse(g)
    return [la.mul(la.mul(g, m), gi) for m in mats]


def _shear(d: int, i: int, j: int, t) -> la.Matrix:
    return tuple(tuple(Fraction(int(r == c)) + (Fraction(t) if (r, c) == (i, j) else 0) for c in range(d))
                 for r in range(d))


def _best_integer_shear(mats, i, j):
    d = len(mats[0])
    # the energy along a shear is a quartic polynomial in t: interpolate exactly
    pts = [-2, -1, 0, 1, 2]
    vals = [frobenius_energy(_conj_all(_shear(d, i, j, t), mats)) for t in pts]
    coeffs = np.polyfit(pts, [float(v) for v in vals], 4)
    crit = [r.real for r in np.roots(np.polyder(coeffs)) if abs(r.imag) < 1e-9 * max(1.0, abs(r))]
    cands = {int(math.floor(c)) for c in crit} | {int(math.ceil(c)) for c in crit}
    return sorted(c for c in cands if c != 0 and abs(c) < 1 << 62)


def balance_set(mats: Sequence[la.Matrix], refine: bool = True, max_rounds: int = 400):
    """Rational g with g M g^-1 of small total Frobenius energy (heuristic).

    First exact integer shears and power-of-two scalings (a lattice-reduction
    style descent), then a floating-point refinement over upper triangular
    frames whose result is rounded to a rational matrix.  Returns (g, conjugated).
    """
    mats = [la.mat(m) for m in mats]
    d = len(mats[0])
    g = la.identity(d)
    cur = list(mats)
    energy = frobenius_energy(cur)
    for _ in range(max_rounds):
        improved = False
        for i in range(d):
            A = sum((m[i][j] ** 2 for m in cur for j in range(d) if j != i), Fraction(0))
            B = sum((m[j][i] ** 2 for m in cur for j in range(d) if j != i), Fraction(0))
            if A > 0 and B > 0:
                k = round(math.log2(float(B) / float(A)) / 4) if float(A) > 0 else 0
                if k:
                    s = la.diag(*[Fraction(2) ** k if r == i else 1 for r in range(d)])
                    new = _conj_all(s, cur)
                    e = frobenius_energy(new)
                    if e < energy:
                        g, cur, energy, improved = la.mul(s, g), new, e, True
        for i in range(d):
            for j in range(d):
                if i == j:
                    continue
                for t in _best_integer_shear(cur, i, j):
                    s = _shear(d, i, j, t)
                    new = _conj_all(s, cur)
                    e = frobenius_energy(new)
                    if e < energy:
                        g, cur, energy, improved = la.mul(s, g), new, e, True
                        break
        if not improved:
            break
    if refine:
        h = _refine_frame(cur)
        if h is not None:
            new = _conj_all(h, cur)
            if frobenius_energy(new) < energy:
                g, cur = la.mul(h, g), new
    return g, cur


def _refine_frame(mats, den_bits: int = 24) -> Optional[la.Matrix]:
    """Float minimization of log energy over upper triangular frames, rounded to rationals."""
    from scipy.optimize import minimize

    d = len(mats[0])
    arr = np.array([la.to_float(m) for m in mats])
    if not np.all(np.isfinite(arr)):
        return None
    iu = [(i, j) for i in range(d) for j in range(i + 1, d)]

    def frame(x):
        g = np.eye(d)
        logs = np.concatenate([x[:d - 1], [-np.sum(x[:d - 1])]])
        for i in range(d):
            g[i, i] = math.exp(logs[i])
        for k, (i, j) in enumerate(iu):
            g[i, j] = x[d - 1 + k]
        return g

    def objective(x):
        g = frame(x)
        gi = np.linalg.inv(g)
        return math.log(sum(np.sum((g @ m @ gi) ** 2) for m in arr))

    x0 = np.zeros(d - 1 + len(iu))
    res = minimize(objective, x0, method="BFGS", options={"gtol": 1e-12, "maxiter": 500})
    if not res.success and res.fun >= objective(x0):
        return None
    g = frame(res.x)
    den = 1 << den_bits
    h = la.mat([[Fraction(round(g[i][j] * den), den) for j in range(d)] for i in range(d)])
    if la.det(h) == 0 or la.is_identity(h):
        return None
    return h
