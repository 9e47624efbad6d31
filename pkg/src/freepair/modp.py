"""Reduction mod p, Cayley-graph girth, ball growth, relation counting and small-set expansion."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Optional, Sequence

import numpy as np
import sympy

from . import kernels
from . import linalg as la
from .spectral import BudgetExceeded, MatrixSet


class BadPrime(ValueError):
    """p divides a denominator, or a reduced matrix is singular mod p."""


@dataclass(frozen=True)
class PrimeFieldMatrix:
    entries: tuple                 # row-major residue tuples
    p: int

    @property
    def dim(self) -> int:
        return len(self.entries)

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)

    def __mul__(self, other: "PrimeFieldMatrix") -> "PrimeFieldMatrix":
        return PrimeFieldMatrix(_tuple((self.array() @ other.array()) % self.p), self.p)

    def inverse(self) -> "PrimeFieldMatrix":
        m = sympy.Matrix(self.entries).inv_mod(self.p)
        return PrimeFieldMatrix(tuple(tuple(int(x) for x in row) for row in m.tolist()), self.p)


def _tuple(a: np.ndarray) -> tuple:
    return tuple(tuple(int(x) for x in row) for row in a)


def reduce_rational(x: Fraction, p: int) -> int:
    x = Fraction(x)
    if x.denominator % p == 0:
        raise BadPrime(f"denominator of {x} is divisible by {p}")
    return x.numerator * pow(x.denominator, -1, p) % p


def reduce_matrix(m: la.Matrix, p: int) -> PrimeFieldMatrix:
    red = tuple(tuple(reduce_rational(x, p) for x in row) for row in m)
    if sympy.Matrix(red).det() % p == 0:
        raise BadPrime(f"matrix is singular mod {p}")
    return PrimeFieldMatrix(red, p)


def reduce_mod_p(F: MatrixSet | Sequence, p: int) -> list[PrimeFieldMatrix]:
    if not sympy.isprime(p):
        raise ValueError(f"{p} is not prime")
    mats = F.matrices if isinstance(F, MatrixSet) else [la.mat(m) for m in F]
    return [reduce_matrix(m, p) for m in mats]


# --- girth ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GirthResult:
    girth: Optional[int]           # None when no relation of length <= max_len exists
    lower_bound: int               # girth >= this
    relation: tuple = ()           # letters (0=a, 1=a^-1, 2=b, 3=b^-1) of a shortest relation

    def __str__(self):
        return str(self.girth) if self.girth is not None else f">={self.lower_bound}"


def _letters(a: PrimeFieldMatrix, b: PrimeFieldMatrix) -> np.ndarray:
    return np.array([a.array(), a.inverse().array(), b.array(), b.inverse().array()], dtype=np.int64)


INVERSE_LETTER = np.array([1, 0, 3, 2], dtype=np.int64)


def girth(a: PrimeFieldMatrix, b: PrimeFieldMatrix, max_len: int = 64,
          budget: int = 5_000_000) -> GirthResult:
    """Shortest nontrivial reduced word in a, b equal to the identity.

    Breadth-first search of the Cayley graph from the identity along
    non-backtracking edges; a collision between a new endpoint and a known
    vertex closes a cycle of length depth(x) + depth(y) + 1.  The graph is
    vertex transitive, so the least such value is the girth.
    """
    p = a.p
    gens = _letters(a, b)
    d = a.dim
    ident = np.eye(d, dtype=np.int64)
    depth = {ident.tobytes(): 0}
    words = {ident.tobytes(): ()}
    frontier = ident[None, :, :]
    last = np.array([-1], dtype=np.int64)
    best, best_word = None, ()
    k = 0
    while frontier.shape[0] and (best is None or 2 * k + 1 < best) and 2 * k + 1 <= max_len:
        kids, parents, letters = kernels.expand_layer(frontier, last, gens, INVERSE_LETTER, p)
        new_f, new_last = [], []
        for idx in range(kids.shape[0]):
            key = kids[idx].tobytes()
            par_key = frontier[parents[idx]].tobytes()
            word = words[par_key] + (int(letters[idx]),)
            if key == par_key:
                cand, rel = 1, (int(letters[idx]),)
            elif key in depth:
                cand = k + depth[key] + 1
                rel = _reduce(word + _inverse_word(words[key]))
            else:
                depth[key] = k + 1
                words[key] = word
                new_f.append(kids[idx])
                new_last.append(letters[idx])
                if len(depth) > budget:
                    raise BudgetExceeded("girth search exceeded its memory budget")
                continue
            if best is None or cand < best:
                best, best_word = cand, rel
        frontier = np.array(new_f, dtype=np.int64).reshape(-1, d, d)
        last = np.array(new_last, dtype=np.int64)
        k += 1
    if best is not None and best <= max_len:
        return GirthResult(best, best, best_word)
    return GirthResult(None, max_len + 1)


def _inverse_word(w: Sequence[int]) -> tuple:
    return tuple(int(INVERSE_LETTER[x]) for x in reversed(w))


def _reduce(w: Sequence[int]) -> tuple:
    out = []
    for x in w:
        if out and INVERSE_LETTER[out[-1]] == x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def evaluate_word_mod_p(a: PrimeFieldMatrix, b: PrimeFieldMatrix, word: Sequence[int]) -> np.ndarray:
    gens = _letters(a, b)
    m = np.eye(a.dim, dtype=np.int64)
    for x in word:
        m = (m @ gens[x]) % a.p
    return m


def sanov_girths(primes: Iterable[int], max_len: int = 64) -> dict:
    A = ((1, 2), (0, 1))
    B = ((1, 0), (2, 1))
    out = {}
    for p in primes:
        a, b = reduce_mod_p([A, B], p)
        out[p] = girth(a, b, max_len)
    return out


# --- ball growth ---------------------------------------------------------------------

def _integer_scaled(F: Sequence[la.Matrix]) -> tuple[int, list]:
    den = lcm(*[la.common_denominator(m) for m in F])
    return den, [tuple(tuple(int(x * den) for x in row) for row in m) for m in F]


def _imul(x, y):
    return tuple(tuple(sum(a * b for a, b in zip(row, col)) for col in zip(*y)) for row in x)


def ball_growth(F: MatrixSet | Sequence, n_max: int, p: Optional[int] = None,
                budget: int = 2_000_000) -> list[int]:
    """|F^n| for n = 1..n_max, exactly (over Q, or over F_p when p is given)."""
    mats = list(F.matrices if isinstance(F, MatrixSet) else [la.mat(m) for m in F])
    if p is not None:
        gens = [reduce_matrix(m, p).entries for m in mats]
        mul = lambda x, y: tuple(tuple(v % p for v in row) for row in _imul(x, y))
    else:
        # common denominator D: level-n elements are stored scaled by D^n
        _, gens = _integer_scaled(mats)
        mul = _imul
    level = set(gens)
    sizes = [len(level)]
    for _ in range(2, n_max + 1):
        nxt = set()
        for x in level:
            for g in gens:
                nxt.add(mul(x, g))
            if len(nxt) > budget:
                raise BudgetExceeded("ball growth exceeded its budget")
        level = nxt
        sizes.append(len(level))
    return sizes


# --- relation counting ---------------------------------------------------------------

FILTER_PRIMES = (2147483647, 2147483629, 2147483587)


def _filter_primes(mats: Sequence[la.Matrix], count: int = 2) -> list[int]:
    out = []
    for p in FILTER_PRIMES + tuple(sympy.prevprime(2147483587 - 1000 * i) for i in range(1, 40)):
        try:
            for m in mats:
                reduce_matrix(m, p)
        except BadPrime:
            continue
        out.append(p)
        if len(out) == count:
            return out
    raise BadPrime("no usable filter primes")


def _word_matrix(letters: Sequence[la.Matrix], word: Sequence[int]) -> la.Matrix:
    d = len(letters[0])
    m = la.identity(d)
    for x in word:
        m = la.mul(m, letters[x])
    return m


@dataclass(frozen=True)
class RelationCount:
    relations: int
    words: int
    by_length: tuple               # relations of each length 1..n
    examples: tuple                # a few relation words

    @property
    def proportion(self) -> Fraction:
        return Fraction(self.relations, self.words)


def reduced_word_count(n: int, k: int = 4) -> int:
    """Number of nonempty reduced words of length <= n over k/2 generators and inverses."""
    return sum(k * (k - 1) ** (L - 1) for L in range(1, n + 1))


def count_relations(x: la.Matrix, y: la.Matrix, n: int, cap: int = 100_000) -> RelationCount:
    """Exact count of reduced words of length 1..n in x, y equal to the identity over Q.

    Words are screened modulo large primes by the compiled scanner; every
    candidate is then confirmed with exact rational arithmetic.
    """
    x, y = la.mat(x), la.mat(y)
    letters = [x, la.inverse(x), y, la.inverse(y)]
    primes = _filter_primes(letters)
    gens = np.array([[np.array(reduce_matrix(m, p).entries, dtype=np.int64) for m in letters] for p in primes],
                    dtype=np.int64)
    counts, hits = kernels.word_identity_scan(gens, INVERSE_LETTER, np.array(primes, dtype=np.int64), n, cap)
    if sum(counts) > len(hits):
        raise BudgetExceeded("too many candidate relations to confirm exactly")
    by_len = [0] * (n + 1)
    confirmed = []
    for w in hits:
        if la.is_identity(_word_matrix(letters, w)):
            by_len[len(w)] += 1
            if len(confirmed) < 8:
                confirmed.append(w)
    return RelationCount(sum(by_len), reduced_word_count(n), tuple(by_len[1:]), tuple(confirmed))


def relation_proportion(x: la.Matrix, y: la.Matrix, n: int) -> Fraction:
    """(# reduced words of length <= n equal to 1) / (# nonempty reduced words of length <= n)."""
    return count_relations(x, y, n).proportion


def relation_proportion_mod_p(a: PrimeFieldMatrix, b: PrimeFieldMatrix, n: int) -> Fraction:
    gens = np.array([_letters(a, b)], dtype=np.int64)
    counts, _ = kernels.word_identity_scan(gens, INVERSE_LETTER, np.array([a.p], dtype=np.int64), n, 0)
    return Fraction(sum(counts), reduced_word_count(n))


def brute_force_no_relation(x: la.Matrix, y: la.Matrix, L: int) -> bool:
    """True iff no nonempty reduced word of length <= L in x, y equals the identity.

    Meet in the middle: a relation of length <= L exists iff two distinct
    reduced words of length <= ceil(L/2) take the same value with the
    reduced form of u v^-1 of length <= L.
    """
    x, y = la.mat(x), la.mat(y)
    letters = [x, la.inverse(x), y, la.inverse(y)]
    den, ints = _integer_scaled(letters)
    half = (L + 1) // 2
    d = len(x)
    ident = tuple(tuple(int(i == j) for j in range(d)) for i in range(d))
    # value -> words; values of length-k words are scaled by den^k, so key on (projective-free) exact Fractions
    seen = {la.identity(d): [()]}
    frontier = [((), ident, 0)]
    for k in range(1, half + 1):
        nxt = []
        for w, m, _ in frontier:
            for g in range(4):
                if w and INVERSE_LETTER[w[-1]] == g:
                    continue
                mm = _imul(m, ints[g])
                word = w + (g,)
                nxt.append((word, mm, k))
                key = tuple(tuple(Fraction(v, den ** k) for v in row) for row in mm)
                for other in seen.get(key, []):
                    rel = _reduce(word + _inverse_word(other))
                    if rel and len(rel) <= L:
                        return False
                seen.setdefault(key, []).append(word)
        frontier = nxt
    return True


# --- small-set expansion -------------------------------------------------------------

def small_set_expansion(gens: Sequence[PrimeFieldMatrix], A: Iterable[PrimeFieldMatrix]) -> Fraction:
    """max over generators f of |A symmetric-difference fA| / |A|."""
    A = {m.entries for m in A}
    if not A:
        raise ValueError("A must be nonempty")
    best = Fraction(0)
    for f in gens:
        arr = np.array(sorted(A), dtype=np.int64)
        fa = kernels.left_multiply_all(f.array(), arr, f.p)
        fA = {_tuple(m) for m in fa}
        best = max(best, Fraction(len(A ^ fA), len(A)))
    return best


def cayley_ball(gens: Sequence[PrimeFieldMatrix], radius: int) -> list[PrimeFieldMatrix]:
    """Elements within word length radius (generators and inverses), built by left multiplication."""
    p = gens[0].p
    letters = []
    for g in gens:
        letters.extend([g, g.inverse()])
    d = gens[0].dim
    ident = tuple(tuple(int(i == j) for j in range(d)) for i in range(d))
    ball = {ident}
    frontier = [ident]
    for _ in range(radius):
        nxt = []
        for m in frontier:
            for g in letters:
                y = _tuple((g.array() @ np.array(m, dtype=np.int64)) % p)
                if y not in ball:
                    ball.add(y)
                    nxt.append(y)
        frontier = nxt
    return [PrimeFieldMatrix(m, p) for m in sorted(ball)]


def generated_group(gens: Sequence[PrimeFieldMatrix], budget: int = 1_000_000) -> list[PrimeFieldMatrix]:
    p = gens[0].p
    d = gens[0].dim
    ident = tuple(tuple(int(i == j) for j in range(d)) for i in range(d))
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for m in frontier:
            for g in gens:
                y = _tuple((np.array(m, dtype=np.int64) @ g.array()) % p)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
                    if len(seen) > budget:
                        raise BudgetExceeded("group too large")
        frontier = nxt
    return [PrimeFieldMatrix(m, p) for m in sorted(seen)]
