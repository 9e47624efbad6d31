"""Exact linear algebra over Q on tuple-of-tuple matrices of Fractions."""
from __future__ import annotations

from fractions import Fraction
from functools import reduce
from itertools import combinations
from math import gcd, lcm
from typing import Iterable, Sequence

Vector = tuple  # tuple[Fraction, ...]
Matrix = tuple  # tuple[tuple[Fraction, ...], ...]


class SingularMatrixError(ValueError):
    pass


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        from .intervals import parse_fraction
        return parse_fraction(x)
    return Fraction(x)


def mat(rows: Iterable[Iterable]) -> Matrix:
    out = tuple(tuple(to_fraction(x) for x in row) for row in rows)
    if out and any(len(r) != len(out[0]) for r in out):
        raise ValueError("ragged matrix")
    return out


def vec(xs: Iterable) -> Vector:
    return tuple(to_fraction(x) for x in xs)


def identity(d: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d))


def diag(*entries) -> Matrix:
    d = len(entries)
    return tuple(tuple(to_fraction(entries[i]) if i == j else Fraction(0) for j in range(d))
                 for i in range(d))


def dim(a: Matrix) -> int:
    return len(a)


def is_identity(a: Matrix) -> bool:
    return all(a[i][j] == (1 if i == j else 0) for i in range(len(a)) for j in range(len(a)))


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a))


def mul(a: Matrix, b: Matrix) -> Matrix:
    bt = tuple(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a)


def mul_many(mats: Sequence[Matrix], d: int | None = None) -> Matrix:
    if not mats:
        if d is None:
            raise ValueError("empty product needs a dimension")
        return identity(d)
    return reduce(mul, mats)


def apply(a: Matrix, v: Vector) -> Vector:
    return tuple(sum(x * y for x, y in zip(row, v)) for row in a)


def add(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(r, s)) for r, s in zip(a, b))


def scale(a: Matrix, c) -> Matrix:
    c = to_fraction(c)
    return tuple(tuple(c * x for x in r) for r in a)


def matpow(a: Matrix, n: int) -> Matrix:
    if n < 0:
        a, n = inverse(a), -n
    result = identity(len(a))
    base = a
    while n:
        if n & 1:
            result = mul(result, base)
        n >>= 1
        if n:
            base = mul(base, base)
    return result


def rref(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and pivot columns."""
    m = [list(map(to_fraction, r)) for r in rows]
    if not m:
        return m, []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows) -> int:
    return len(rref(rows)[1])


def det(a: Matrix) -> Fraction:
    m = [list(r) for r in a]
    n = len(m)
    result = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            result = -result
        result *= m[c][c]
        inv = 1 / m[c][c]
        for i in range(c + 1, n):
            if m[i][c] != 0:
                f = m[i][c] * inv
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return result


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    aug = [list(a[i]) + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    red, piv = rref(aug)
    if piv[:n] != list(range(n)):
        raise SingularMatrixError("matrix is singular")
    return tuple(tuple(r[n:]) for r in red)


def kernel(a: Sequence[Sequence[Fraction]]) -> list[Vector]:
    """Basis of the right null space {x : a x = 0}."""
    if not a:
        return []
    ncols = len(a[0])
    red, piv = rref(a)
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for row, p in zip(red, piv):
            x[p] = -row[f]
        basis.append(tuple(x))
    return basis


def row_space(vectors: Sequence[Vector]) -> list[Vector]:
    red, _ = rref(vectors)
    return [tuple(r) for r in red]


def span_contains(basis: Sequence[Vector], v: Vector) -> bool:
    if not basis:
        return all(x == 0 for x in v)
    return rank(list(basis) + [v]) == rank(basis)


def solve(a: Matrix, b: Vector) -> Vector:
    n = len(a)
    aug = [list(a[i]) + [b[i]] for i in range(n)]
    red, piv = rref(aug)
    if piv[:n] != list(range(n)):
        raise SingularMatrixError("matrix is singular")
    return tuple(r[n] for r in red)


def trace(a: Matrix) -> Fraction:
    return sum((a[i][i] for i in range(len(a))), Fraction(0))


def charpoly(a: Matrix) -> tuple[Fraction, ...]:
    """Characteristic polynomial det(xI - a), coefficients low degree first.

    Faddeev-LeVerrier recursion, exact over Q.
    """
    n = len(a)
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    m = identity(n)
    for k in range(1, n + 1):
        am = mul(a, m)
        c = -trace(am) / k
        coeffs[n - k] = c
        m = add(am, scale(identity(n), c))
    return tuple(coeffs)


def poly_of_matrix(coeffs: Sequence, a: Matrix) -> Matrix:
    """Evaluate a polynomial (low degree first) at a matrix via Horner."""
    n = len(a)
    result = tuple(tuple(Fraction(0) for _ in range(n)) for _ in range(n))
    for c in reversed(coeffs):
        result = add(mul(result, a), scale(identity(n), c))
    return result


def minor(a: Matrix, rows: Sequence[int], cols: Sequence[int]) -> Fraction:
    return det(tuple(tuple(a[i][j] for j in cols) for i in rows))


def compound(a: Matrix, l: int) -> Matrix:
    """l-th exterior power of a in the lexicographic basis of l-subsets."""
    n = len(a)
    subsets = list(combinations(range(n), l))
    if l == 1:
        return a
    return tuple(tuple(minor(a, r, c) for c in subsets) for r in subsets)


def plucker(basis: Sequence[Vector]) -> Vector:
    """Plücker coordinates (all maximal minors) of the span of the given rows."""
    l = len(basis)
    if l == 0:
        return (Fraction(1),)
    n = len(basis[0])
    if l == 1:
        return tuple(basis[0])
    return tuple(det(tuple(tuple(b[j] for j in cols) for b in basis))
                 for cols in combinations(range(n), l))


def wedge_vectors(u: Sequence[Vector], w: Sequence[Vector]) -> Vector:
    return plucker(list(u) + list(w))


def primitive_integer(v: Sequence[Fraction]) -> tuple[int, ...]:
    """Scale a rational vector to a primitive integer vector (first nonzero sign kept)."""
    den = lcm(*[x.denominator for x in v]) if v else 1
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        return tuple(ints)
    return tuple(x // g for x in ints)


def intersect_subspaces(v: Sequence[Vector], w: Sequence[Vector]) -> list[Vector]:
    """Basis of span(v) ∩ span(w)."""
    if not v or not w:
        return []
    # solve sum a_i v_i = sum b_j w_j
    n = len(v[0])
    cols = list(v) + [tuple(-x for x in y) for y in w]
    system = [[c[i] for c in cols] for i in range(n)]
    sols = kernel(system)
    out = []
    for s in sols:
        x = tuple(sum(s[k] * v[k][i] for k in range(len(v))) for i in range(n))
        out.append(x)
    return row_space(out)


def sum_subspaces(v: Sequence[Vector], w: Sequence[Vector]) -> list[Vector]:
    return row_space(list(v) + list(w))


def annihilator(basis: Sequence[Vector], n: int) -> list[Vector]:
    """Linear forms vanishing on span(basis)."""
    if not basis:
        return [tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)]
    return kernel(basis)


def is_invariant(a: Matrix, basis: Sequence[Vector]) -> bool:
    return all(span_contains(basis, apply(a, b)) for b in basis)


def common_denominator(a: Matrix) -> int:
    return lcm(*[x.denominator for r in a for x in r])


def to_float(a: Matrix):
    import numpy as np
    return np.array([[float(x) for x in r] for r in a], dtype=float)


def rationalize(x: float, max_den: int = 1 << 40) -> Fraction:
    return Fraction(x).limit_denominator(max_den)
