from __future__ import annotations

import json
import random
from fractions import Fraction
from math import gcd
from pathlib import Path

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from freepair import linalg as la
from freepair.modp import (BadPrime, PrimeFieldMatrix, ball_growth, brute_force_no_relation, cayley_ball,
                           count_relations, evaluate_word_mod_p, generated_group, girth, reduce_mod_p,
                           reduced_word_count, relation_proportion, relation_proportion_mod_p,
                           sanov_girths, small_set_expansion)
from freepair.pingpong import certified_pair
from strategies import A, B, SANOV, random_sl_matrix, sanov_closure

GOLDEN = Path(__file__).parent / "golden"
U = ((1, 1), (0, 1))


def _pf(rows, p):
    return PrimeFieldMatrix(tuple(tuple(x % p for x in r) for r in rows), p)


# --- reduction ------------------------------------------------------------------------

def test_reduce_sanov_mod_5():
    (a,) = reduce_mod_p([A], 5)
    assert a.entries == ((1, 2), (0, 1)) and a.p == 5


def test_reduce_half_mod_3():
    (m,) = reduce_mod_p([la.diag(Fraction(1, 2), 2)], 3)
    assert m.entries == ((2, 0), (0, 2))


def test_reduce_bad_prime():
    with pytest.raises(BadPrime):
        reduce_mod_p([la.diag(Fraction(1, 2), 2)], 2)


def test_reduce_singular_mod_p():
    with pytest.raises(BadPrime):
        reduce_mod_p([la.diag(3, 1)], 3)


def test_reduce_rejects_composite():
    with pytest.raises(ValueError):
        reduce_mod_p([A], 4)


# --- girth ----------------------------------------------------------------------------

def test_girth_identity_pair():
    i = _pf(((1, 0), (0, 1)), 7)
    assert girth(i, i).girth == 1


def test_girth_sanov_mod_2():
    # A = [[1,2],[0,1]] is already the identity mod 2
    a, b = reduce_mod_p(SANOV, 2)
    r = girth(a, b)
    assert r.girth == 1 and len(r.relation) == 1


def test_girth_golden():
    golden = {int(k): v for k, v in json.loads((GOLDEN / "sanov_girth.json").read_text()).items()}
    got = sanov_girths(golden)
    assert {p: r.girth for p, r in got.items()} == golden
    values = [golden[p] for p in sorted(golden)]
    assert all(v > 0 for v in values) and values == sorted(values)


@pytest.mark.parametrize("p", [3, 5, 11, 23])
def test_girth_relation_is_a_relation(p):
    a, b = reduce_mod_p(SANOV, p)
    r = girth(a, b)
    assert len(r.relation) == r.girth
    assert (evaluate_word_mod_p(a, b, r.relation) == [[1, 0], [0, 1]]).all()


def test_girth_lower_bound_when_unresolved():
    a, b = reduce_mod_p(SANOV, 101)
    r = girth(a, b, max_len=6)
    assert r.girth is None and r.lower_bound == 7 and str(r) == ">=7"


def _largest_bad_prime(L: int) -> int:
    """Largest prime p for which some reduced Sanov word of length <= L is trivial mod p."""
    mats = [la.mat(A), la.inverse(la.mat(A)), la.mat(B), la.inverse(la.mat(B))]
    worst = 2
    frontier = [(la.identity(2), None)]
    for _ in range(L):
        nxt = []
        for m, last in frontier:
            for k, g in enumerate(mats):
                if last is not None and k == last ^ 1:
                    continue
                w = la.mul(m, g)
                diff = [int(w[i][j] - (i == j)) for i in range(2) for j in range(2)]
                g0 = 0
                for x in diff:
                    g0 = gcd(g0, x)
                if g0 > 1:
                    worst = max(worst, max(sympy.factorint(g0)))
                nxt.append((w, k))
        frontier = nxt
    return worst


@pytest.mark.parametrize("L", [2, 4, 6, 8])
def test_rational_freeness_lifts_to_large_primes(L):
    assert brute_force_no_relation(la.mat(A), la.mat(B), L)
    p = sympy.nextprime(_largest_bad_prime(L))
    a, b = reduce_mod_p(SANOV, p)
    r = girth(a, b, max_len=L)
    assert r.girth is None


# --- growth ---------------------------------------------------------------------------

def test_growth_unipotent():
    assert ball_growth([la.identity(2), U], 6) == [2, 3, 4, 5, 6, 7]


def test_growth_sanov_closure():
    assert ball_growth(sanov_closure(), 8) == [2 * 3 ** n - 1 for n in range(1, 9)]


def test_growth_identity():
    assert ball_growth([la.identity(3)], 4) == [1, 1, 1, 1]


def test_growth_mod_p_saturates():
    sizes = ball_growth(sanov_closure(), 12, p=5)
    assert sizes[-1] == len(generated_group(reduce_mod_p(SANOV, 5)))


@given(st.integers(0, 10 ** 6), st.integers(1, 3), st.integers(1, 3))
@settings(max_examples=15)
def test_growth_submultiplicative(seed, m, n):
    rng = random.Random(seed)
    g, h = random_sl_matrix(rng, 2, 2), random_sl_matrix(rng, 2, 2)
    F = [la.identity(2), g, h, la.inverse(g), la.inverse(h)]
    sizes = ball_growth(F, m + n)
    assert sizes == sorted(sizes)
    assert sizes[m + n - 1] <= sizes[m - 1] * sizes[n - 1]


# --- relation proportions -------------------------------------------------------------

def test_reduced_word_count():
    assert [reduced_word_count(n) for n in (1, 2, 3)] == [4, 16, 52]


def test_proportion_certified_pair_is_zero(sanov_result, sanov):
    x, y = certified_pair(sanov_result.certificate, sanov)
    assert all(relation_proportion(x, y, n) == 0 for n in range(1, 6))


def test_proportion_commuting_diagonals():
    c = count_relations(la.diag(2, Fraction(1, 2)), la.diag(3, Fraction(1, 3)), 4)
    assert c.relations > 0 and c.by_length[3] > 0 and c.proportion > 0


def test_proportion_order_two_mod_p():
    p = 7
    x = _pf(((0, 1), (1, 0)), p)
    y = _pf(((1, 1), (0, 1)), p)
    assert relation_proportion_mod_p(x, y, 2) >= Fraction(1, reduced_word_count(2))


def test_proportion_matches_brute_force(sanov_result, sanov):
    assert brute_force_no_relation(*certified_pair(sanov_result.certificate, sanov), 8)


# --- expansion ------------------------------------------------------------------------

def test_expansion_whole_group_zero():
    gens = reduce_mod_p(SANOV, 3)
    assert small_set_expansion(gens, generated_group(gens)) == 0


def test_expansion_identity_two():
    gens = reduce_mod_p(SANOV, 11)
    assert small_set_expansion(gens, [_pf(((1, 0), (0, 1)), 11)]) == 2


def test_expansion_ball_golden():
    gens = reduce_mod_p(SANOV, 11)
    ball = cayley_ball(gens, 2)
    assert len(ball) == 17
    assert small_set_expansion(gens, ball) == Fraction(18, 17)


@given(st.integers(0, 10 ** 6), st.sampled_from([5, 7, 11]))
@settings(max_examples=15)
def test_expansion_bounded_by_two(seed, p):
    rng = random.Random(seed)
    gens = reduce_mod_p(SANOV, p)
    group = generated_group(gens)
    A_ = rng.sample(group, rng.randint(1, min(30, len(group))))
    r = small_set_expansion(gens, A_)
    assert 0 <= r <= 2
