"""Invariant structure of matrix sets: algebra closure, invariant subspaces, solvability verdicts."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Callable, Optional, Sequence

import sympy

from . import linalg as la
from .places import log_mahler_measure
from .spectral import MatrixSet, charpoly_factors


def _flat(m: la.Matrix) -> tuple:
    return tuple(x for r in m for x in r)


def _unflat(v: Sequence, d: int) -> la.Matrix:
    return tuple(tuple(v[i * d:(i + 1) * d]) for i in range(d))


class _Echelon:
    """Incrementally maintained reduced basis for membership tests."""

    def __init__(self):
        self.rows = []     # (pivot, row) with row[pivot] == 1
        self.kept = []

    def reduce(self, v: Sequence) -> list:
        v = list(v)
        for piv, row in self.rows:
            c = v[piv]
            if c != 0:
                v = [x - c * y for x, y in zip(v, row)]
        return v

    def add(self, v: Sequence, original=None) -> bool:
        r = self.reduce(v)
        piv = next((i for i, x in enumerate(r) if x != 0), None)
        if piv is None:
            return False
        inv = 1 / r[piv]
        r = [x * inv for x in r]
        self.rows.append((piv, r))
        self.kept.append(original if original is not None else tuple(v))
        return True


def algebra_closure(F: MatrixSet | Sequence) -> list:
    """Basis of the associative algebra generated by F and the identity."""
    mats = list(F.matrices if isinstance(F, MatrixSet) else [la.mat(m) for m in F])
    d = len(mats[0])
    ech = _Echelon()
    queue = []
    for m in [la.identity(d)] + mats:
        if ech.add(_flat(m), m):
            queue.append(m)
    i = 0
    while i < len(queue) and len(ech.kept) < d * d:
        x = queue[i]
        i += 1
        for g in mats:
            y = la.mul(x, g)
            if ech.add(_flat(y), y):
                queue.append(y)
    return list(ech.kept)


def is_closed_algebra(basis: Sequence[la.Matrix]) -> bool:
    ech = _Echelon()
    for b in basis:
        ech.add(_flat(b))
    return all(not any(ech.reduce(_flat(la.mul(x, y)))) for x in basis for y in basis)


def _spin(vec: Sequence, mats: Sequence[la.Matrix]) -> list:
    """Basis of the smallest subspace containing vec and invariant under mats."""
    ech = _Echelon()
    ech.add(vec)
    queue = [tuple(vec)]
    i = 0
    d = len(vec)
    while i < len(queue) and len(queue) < d:
        u = queue[i]
        i += 1
        for g in mats:
            w = la.apply(g, u)
            if ech.add(w):
                queue.append(w)
    return la.row_space(queue)


def is_invariant_under(W: Sequence, mats: Sequence[la.Matrix]) -> bool:
    return all(la.is_invariant(g, W) for g in mats)


def _random_algebra_element(basis, rng) -> la.Matrix:
    d = len(basis[0])
    m = [[Fraction(0)] * d for _ in range(d)]
    for b in basis:
        c = rng.randint(-3, 3)
        if c:
            for i in range(d):
                for j in range(d):
                    m[i][j] += c * b[i][j]
    return la.mat(m)


@dataclass(frozen=True)
class IrreducibilityWitness:
    element: la.Matrix            # algebra element x
    factor: tuple                 # irreducible f with dim ker f(x) = deg f


def invariant_subspace(F: MatrixSet | Sequence, attempts: int = 40, seed: int = 0):
    """A proper nonzero rational F-invariant subspace, or None.

    Kernels of irreducible factors of random algebra elements are spun up
    under F (and dually under the transposes).  When the algebra is full the
    answer is None immediately.  A second return value records an
    irreducibility witness when one is found (None otherwise).
    """
    W, _ = _invariant_search(F, attempts, seed)
    return W


def _invariant_search(F, attempts: int, seed: int):
    mats = list(F.matrices if isinstance(F, MatrixSet) else [la.mat(m) for m in F])
    d = len(mats[0])
    if d == 1:
        return None, "dimension one"
    basis = algebra_closure(mats)
    if len(basis) == d * d:
        return None, "full algebra"
    rng = random.Random(seed)
    trans = [la.transpose(g) for g in mats]
    candidates = list(mats) + [_random_algebra_element(basis, rng) for _ in range(attempts)]
    for x in candidates:
        for fd in charpoly_factors(x):
            fx = la.poly_of_matrix([Fraction(c) for c in fd.coeffs], x)
            ker = la.kernel(fx)
            for k in ker[:2]:
                W = _spin(k, mats)
                if 0 < len(W) < d:
                    return W, None
            kerT = la.kernel(la.transpose(fx))
            for k in kerT[:2]:
                U = _spin(k, trans)
                if 0 < len(U) < d:
                    return la.row_space(la.kernel(U)), None
            if len(ker) == len(fd.coeffs) - 1 and ker:
                # Holt-Rees: spinning one kernel vector (and a dual one) gave everything
                return None, IrreducibilityWitness(x, fd.coeffs)
    return None, "search exhausted"


def _restrict(mats: Sequence[la.Matrix], W: Sequence) -> tuple[list, list]:
    """Blocks of each matrix on W and on the quotient Q^d / W."""
    d = len(mats[0])
    k = len(W)
    ext = list(W)
    for i in range(d):
        e = tuple(Fraction(int(i == j)) for j in range(d))
        if not la.span_contains(ext, e):
            ext.append(e)
    P = la.transpose(tuple(ext))
    Pinv = la.inverse(P)
    sub, quo = [], []
    for g in mats:
        c = la.mul(la.mul(Pinv, g), P)
        sub.append(tuple(tuple(c[i][j] for j in range(k)) for i in range(k)))
        quo.append(tuple(tuple(c[i][j] for j in range(k, d)) for i in range(k, d)))
    return sub, quo


# --- element orders ---------------------------------------------------------------

@dataclass(frozen=True)
class OrderType:
    finite: bool
    order: Optional[int] = None
    reason: str = ""

    def __str__(self):
        return f"finite({self.order})" if self.finite else f"infinite({self.reason})"


def _cyclotomic_index(coeffs: tuple, d: int) -> Optional[int]:
    x = sympy.Symbol("x")
    deg = len(coeffs) - 1
    for n in range(1, 2 * d * d + 3):
        if sympy.totient(n) == deg:
            c = sympy.Poly(sympy.cyclotomic_poly(n, x), x).all_coeffs()
            if tuple(int(t) for t in reversed(c)) == tuple(coeffs):
                return n
    return None


def element_order_type(a: la.Matrix) -> OrderType:
    a = la.mat(a)
    d = len(a)
    if la.det(a) == 0:
        raise la.SingularMatrixError("element_order_type requires an invertible matrix")
    factors = charpoly_factors(a)
    orders = []
    for fd in factors:
        n = _cyclotomic_index(fd.coeffs, d) if fd.coeffs[-1] == 1 else None
        if n is None:
            h = log_mahler_measure(fd.coeffs) / (len(fd.coeffs) - 1)
            return OrderType(False, None, f"eigenvalue of height >= {float(h.lo):.6g} > 0 "
                                          f"(minimal polynomial coefficients {list(fd.coeffs)})")
        orders.append(n)
    # semisimple iff the product of distinct factors kills a
    prod = [Fraction(1)]
    for fd in factors:
        q = [Fraction(c) for c in fd.coeffs]
        out = [Fraction(0)] * (len(prod) + len(q) - 1)
        for i, s in enumerate(prod):
            for j, t in enumerate(q):
                out[i + j] += s * t
        prod = out
    if any(x != 0 for r in la.poly_of_matrix(prod, a) for x in r):
        return OrderType(False, None, "nontrivial unipotent part")
    n = lcm(*orders)
    if not la.is_identity(la.matpow(a, n)):
        raise AssertionError("semisimple cyclotomic element failed its order check")
    for m in sympy.divisors(n)[:-1]:
        if la.is_identity(la.matpow(a, m)):
            n = m
            break
    return OrderType(True, n)


def finite_group_order(mats: Sequence[la.Matrix], budget: int = 5000) -> Optional[int]:
    """Order of the group generated by mats if it is finite and at most budget; else None."""
    mats = [la.mat(m) for m in mats]
    d = len(mats[0])
    seen = {la.identity(d)}
    frontier = [la.identity(d)]
    while frontier:
        nxt = []
        for x in frontier:
            for g in mats:
                y = la.mul(x, g)
                if y not in seen:
                    seen.add(y)
                    if len(seen) > budget:
                        return None
                    nxt.append(y)
        frontier = nxt
    return len(seen)


# --- solvability verdicts ----------------------------------------------------------

CERT_SOLVABLE = "certified-virtually-solvable"
CERT_NOT_SOLVABLE = "certified-not-virtually-solvable"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class FlagPiece:
    """A flag quotient with the reason its image group is virtually solvable."""

    dim: int
    reason: str                    # "dimension-one" | "finite(N)" | "abelian"


@dataclass(frozen=True)
class SolvabilityVerdict:
    status: str
    flag: tuple = ()               # chain of rational subspaces 0 < W_1 < ... < Q^d
    pieces: tuple = ()
    witness: object = None         # free-pair certificate or irreducibility data
    note: str = ""

    def to_json(self) -> dict:
        from .intervals import fraction_str
        return {
            "status": self.status,
            "flag": [[[fraction_str(x) for x in v] for v in W] for W in self.flag],
            "pieces": [{"dim": p.dim, "reason": p.reason} for p in self.pieces],
            "note": self.note,
        }


def _commute(mats) -> bool:
    return all(la.mul(x, y) == la.mul(y, x) for i, x in enumerate(mats) for y in mats[i + 1:])


def _flag_search(mats, budget: list, seed: int):
    """(subspace chain in the coordinates of mats, pieces) or None when stuck."""
    d = len(mats[0])
    if budget[0] <= 0:
        return None
    budget[0] -= 1
    if d == 1:
        return [], [FlagPiece(1, "dimension-one")]
    if _commute(mats):
        return [], [FlagPiece(d, "abelian")]
    order = finite_group_order(mats)
    if order is not None:
        return [], [FlagPiece(d, f"finite({order})")]
    W, _ = _invariant_search(mats, 40, seed)
    if W is None:
        return None
    sub, quo = _restrict(mats, W)
    left = _flag_search(sub, budget, seed)
    right = _flag_search(quo, budget, seed)
    if left is None or right is None:
        return None
    k = len(W)
    # lift subspaces: the sub chain lives in W's coordinates, the quotient chain on top of W
    Wb = list(W)
    ext = list(W)
    for i in range(d):
        e = tuple(Fraction(int(i == j)) for j in range(d))
        if not la.span_contains(ext, e):
            ext.append(e)
    comp = ext[k:]
    chain = []
    for U in left[0]:
        chain.append(la.row_space([tuple(sum(u[i] * Wb[i][j] for i in range(k)) for j in range(d)) for u in U]))
    chain.append(la.row_space(Wb))
    for U in right[0]:
        lifted = [tuple(sum(u[i] * comp[i][j] for i in range(d - k)) for j in range(d)) for u in U]
        chain.append(la.row_space(Wb + lifted))
    return chain, left[1] + right[1]


def verify_flag(mats: Sequence[la.Matrix], flag: Sequence, pieces: Sequence) -> bool:
    """Re-check that every flag member is invariant and the pieces are consistent."""
    mats = [la.mat(m) for m in mats]
    d = len(mats[0])
    dims = [len(W) for W in flag]
    if dims != sorted(set(dims)) or any(not 0 < k < d for k in dims):
        return False
    if not all(is_invariant_under(W, mats) for W in flag):
        return False
    for a, b in zip(flag, flag[1:]):
        if la.rank(list(a) + list(b)) != len(b):
            return False
    steps = [0] + dims + [d]
    if [b - a for a, b in zip(steps, steps[1:])] != [p.dim for p in pieces]:
        return False
    chain = [[]] + [list(W) for W in flag] + [[tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d)]]
    for piece, lo, hi in zip(pieces, chain, chain[1:]):
        blocks = _quotient_blocks(mats, lo, hi)
        if piece.reason == "dimension-one":
            ok = piece.dim == 1
        elif piece.reason == "abelian":
            ok = _commute(blocks)
        elif piece.reason.startswith("finite("):
            ok = finite_group_order(blocks) == int(piece.reason[7:-1])
        else:
            ok = False
        if not ok:
            return False
    return True


def _quotient_blocks(mats, lo, hi) -> list:
    """Action on hi / lo in a basis extending lo inside hi."""
    d = len(mats[0])
    ext = list(lo)
    for h in hi:
        if not la.span_contains(ext, h):
            ext.append(h)
    k0, k1 = len(lo), len(ext)
    full = list(ext)
    for i in range(d):
        e = tuple(Fraction(int(i == j)) for j in range(d))
        if not la.span_contains(full, e):
            full.append(e)
    P = la.transpose(tuple(full))
    Pinv = la.inverse(P)
    out = []
    for g in mats:
        c = la.mul(la.mul(Pinv, g), P)
        out.append(tuple(tuple(c[i][j] for j in range(k0, k1)) for i in range(k0, k1)))
    return out


def solvability_verdict(F: MatrixSet | Sequence, budget: int = 64, seed: int = 0,
                        certify: Optional[Callable] = None) -> SolvabilityVerdict:
    """Witness-backed virtual-solvability verdict.

    ``certify`` (typically the free-pair pipeline) is called when the algebra
    is full and some generator has infinite order; its non-None result is the
    witness for the negative verdict.
    """
    mats = list(F.matrices if isinstance(F, MatrixSet) else [la.mat(m) for m in F])
    found = _flag_search(mats, [budget], seed)
    if found is not None:
        flag, pieces = found
        if verify_flag(mats, flag, pieces):
            return SolvabilityVerdict(CERT_SOLVABLE, tuple(tuple(W) for W in flag), tuple(pieces))
    d = len(mats[0])
    full = len(algebra_closure(mats)) == d * d
    if full and certify is not None:
        if any(not element_order_type(g).finite for g in mats):
            cert = certify(F)
            if cert is not None:
                return SolvabilityVerdict(CERT_NOT_SOLVABLE, witness=cert, note="free pair certified")
    return SolvabilityVerdict(UNKNOWN, note="no flag over Q and no free-pair certificate")
