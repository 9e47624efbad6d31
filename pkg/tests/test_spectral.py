from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freepair import linalg as la
from freepair.intervals import Interval
from freepair.places import REAL, PadicScalar, Place, abs_value, as_interval
from freepair.projmetric import Ball, dist_point_hyperplane, fs_distance, subspace_distance
from freepair.spectral import (MatrixSet, NoCursor, UnsupportedExtension, almostprox_inequality, cayley_escape,
                               contraction_bound, eigenstructure, interm_bound, lambda_max, matrix_norm,
                               minimal_norm_estimate, place_constants, proximal_profile, reduce_norm_conjugate,
                               select_omega, set_norm, spectral_radius_estimate, tits_converse_check,
                               top_modulus)
from strategies import A, B, proximal_with_eigenbasis, random_sl_matrix, sanov_closure

ROT = ((0, -1), (1, 0))
HALF = Fraction(1, 2)


def _val(x) -> float:
    return float(x.value) if isinstance(x, PadicScalar) else float(x)


def _with_identity(*mats) -> MatrixSet:
    return MatrixSet((la.identity(len(mats[0])),) + tuple(la.mat(m) for m in mats))


# --- norms and moduli ----------------------------------------------------------------

def test_set_norm_sanov_real():
    n = set_norm([A, B], REAL)
    assert n.lo <= 1 + Interval(2).sqrt(80).hi and (1 + Interval(2).sqrt(80)).lo <= n.hi
    assert abs(float(n) - (1 + math.sqrt(2))) < 1e-12


def test_set_norm_padic_diag():
    n = set_norm([la.diag(2, HALF)], Place(2))
    assert n.valuation == -1 and n.value == 2


def test_lambda_max_examples():
    assert lambda_max([la.diag(4, 1)], REAL) == Interval(4)
    assert _val(lambda_max([((1, 1), (0, 1))], Place(3))) == 1
    assert _val(lambda_max([((0, -2), (1, 3))], Place(2))) == 1


def test_minimal_norm_padic_exact():
    est = minimal_norm_estimate(_with_identity(la.diag(2, HALF)), Place(2))
    assert est.tag == "exact" and est.q == 1 and _val(est.value) == 2


def test_minimal_norm_unipotent_padic():
    est = minimal_norm_estimate(_with_identity(((1, 1), (0, 1))), Place(3))
    assert est.tag == "exact" and _val(est.value) == 1


def test_minimal_norm_sanov_real():
    est = minimal_norm_estimate(MatrixSet(sanov_closure()), REAL)
    assert est.tag == "lower-bound"
    assert est.q == 2
    assert abs(float(est.value) - (1 + math.sqrt(2))) < 1e-9


def test_minimal_norm_requires_identity():
    with pytest.raises(ValueError):
        minimal_norm_estimate(MatrixSet((la.mat(A),)), REAL)


def test_spectral_radius_diag():
    assert spectral_radius_estimate(_with_identity(la.diag(2, HALF)), REAL, 4) == Interval(2)


def test_spectral_radius_unipotent():
    # ||u^8|| = ||[[1,8],[0,1]]|| = (8 + sqrt(68)) / 2 = 4 + sqrt(17)
    r = spectral_radius_estimate(_with_identity(((1, 1), (0, 1))), REAL, 8)
    exact = (4 + math.sqrt(17)) ** (1 / 8)
    assert r.lo <= Fraction(exact) + Fraction(1, 10 ** 12) and Fraction(exact) - Fraction(1, 10 ** 12) <= r.hi
    assert r.width < Fraction(1, 10 ** 15)


def test_spectral_radius_rejects_zero():
    with pytest.raises(ValueError):
        spectral_radius_estimate(_with_identity(A), REAL, 0)


# --- eigenstructure -------------------------------------------------------------------

def test_eigenstructure_diagonal():
    es = eigenstructure(la.diag(4, 1, Fraction(1, 4)), REAL)
    assert [g.multiplicity for g in es.groups] == [1, 1, 1]
    assert [tuple(g.basis) for g in es.groups][0] == ((1, 0, 0),)


def test_eigenstructure_sanov_product():
    es = eigenstructure(la.mul(la.mat(A), la.mat(B)), REAL)
    assert len(es.groups) == 2
    top = es.groups[0]
    assert abs(_val(top.modulus) - (3 + 2 * math.sqrt(2))) < 1e-12
    (u,) = top.basis
    assert abs(float(u[1] / u[0]) - (math.sqrt(2) - 1)) < 1e-12


def test_eigenstructure_rotation_single_group():
    es = eigenstructure(ROT, REAL)
    assert len(es.groups) == 1 and es.groups[0].multiplicity == 2


# --- almost proximality ---------------------------------------------------------------

def test_select_omega_diag():
    prof = select_omega(la.diag(8, 1, Fraction(1, 8)), REAL, HALF)
    assert _val(prof.omega) == 8 and prof.dim == 1 and prof.index == 0
    assert prof.eta == Fraction(1, 16)
    lhs, rhs = almostprox_inequality(prof, HALF, top_modulus(la.diag(Fraction(1, 8), 1, 8), REAL))
    assert lhs.hi <= rhs.lo


def test_select_omega_rotation():
    with pytest.raises(NoCursor):
        select_omega(ROT, REAL, HALF)


def test_contraction_bound_prefactor_and_rate():
    a = la.diag(9, 1, Fraction(1, 9))
    v = Place(3)
    prof = select_omega(a, v, HALF)
    assert prof.dim == 1
    cont0, _ = contraction_bound(a, prof, 0, v)
    assert cont0.contains(Fraction(9) ** 1000)
    cont3, _ = contraction_bound(a, prof, 3, v)
    assert cont3.contains(Fraction(3) ** 2000 / Fraction(9) ** 3)


# --- Tits converse, escape, conjugation -----------------------------------------------

def test_tits_converse_diag():
    cert = tits_converse_check(la.diag(4, 1), Ball((1, 0), HALF), REAL)
    assert cert is not None and cert.lipschitz.hi < 1


def test_tits_converse_rotation():
    assert tits_converse_check(ROT, Ball((1, 0), HALF), REAL) is None


def test_tits_converse_padic():
    cert = tits_converse_check(la.diag(3, 1), Ball((0, 1), Fraction(1, 3)), Place(3))
    assert cert is not None and cert.lipschitz == Interval(Fraction(1, 3))


def test_cayley_escape_identity():
    r = cayley_escape(la.identity(2), (1, 0), (1, 1), REAL)
    assert r.j == 1
    assert abs(float(r.bound) - (1 / math.sqrt(2)) / 8) < 1e-12


def test_cayley_escape_diag():
    r = cayley_escape(la.diag(2, 1), (1, 0), (1, 1), REAL)
    assert r.j == 1 and abs(float(r.distance) - 2 / math.sqrt(5)) < 1e-12


def test_cayley_escape_padic():
    r = cayley_escape(la.diag(3, 1), (1, 0), (1, 1), Place(3))
    assert r.j == 1 and r.distance == Interval(Fraction(1, 3))


def test_cayley_escape_rotation_needs_full_dimension():
    r = cayley_escape(ROT, (1, 0), (1, 0), REAL)
    assert r.j == 2


def test_reduce_norm_conjugate_examples():
    c = reduce_norm_conjugate(((1, 100), (0, 1)), REAL)
    assert c.verified and c.norm_conj.hi <= 2
    c = reduce_norm_conjugate(((1, Fraction(1, 27)), (0, 1)), Place(3))
    assert c.verified and c.conjugate == la.mat(((1, 1), (0, 1)))
    assert reduce_norm_conjugate(la.diag(3, Fraction(1, 3)), REAL).verified


# --- properties -----------------------------------------------------------------------

seeds = st.integers(0, 10 ** 6)


@given(seeds, st.sampled_from([2, 3, 5]))
@settings(max_examples=15)
def test_finite_place_minimal_norm_is_attained(seed, p):
    rng = random.Random(seed)
    F = _with_identity(random_sl_matrix(rng, 2, 2), la.diag(p, Fraction(1, p)))
    v = Place(p)
    est = minimal_norm_estimate(F, v)
    w = la.identity(2)
    for i in est.witness:
        w = la.mul(w, F.matrices[i])
    assert len(est.witness) == est.q
    assert top_modulus(w, v).value == est.value.value ** est.q


@given(seeds, st.sampled_from([None, 2, 3]), st.integers(1, 4))
@settings(max_examples=15)
def test_lambda_at_most_spectral_sample(seed, p, n):
    rng = random.Random(seed)
    F = _with_identity(random_sl_matrix(rng, 2, 2), random_sl_matrix(rng, 2, 2))
    v = REAL if p is None else Place(p)
    lam = lambda_max(F, v)
    r = spectral_radius_estimate(F, v, n)
    if v.is_real:
        assert lam.lo <= r.hi
    else:
        assert lam <= r
        assert minimal_norm_estimate(F, v).value <= r


@given(seeds)
@settings(max_examples=10)
def test_growth_lower_bound(seed):
    # E(F^n) >= E(F)^sqrt(n/8d) for F containing 1 in SL_2, using the lower-bound tag
    rng = random.Random(seed)
    g = random_sl_matrix(rng, 2, 2)
    F = _with_identity(g, la.inverse(g))
    F2 = MatrixSet(tuple(dict.fromkeys(la.mul(x, y) for x in F.matrices for y in F.matrices)))
    e1 = minimal_norm_estimate(F, REAL).value
    e2 = minimal_norm_estimate(F2, REAL).value
    # sqrt(2/16) < 1/2 and e1 >= 1, so e2 >= e1^(1/2) implies the claim
    assert e1.lo >= 1 and e2.hi ** 2 >= e1.lo


def _measured(cols, rows, l, a, n, u, w, v):
    """(d(a^n u, pi a^n u) d(u, H), d(a^n u, a^n w) d(w, H) d(u, H) / d(u, w)) with exact eigenspaces."""
    H = cols[l:]
    an = la.matpow(a, n)
    x = la.apply(an, u)
    coeffs = [sum(r * t for r, t in zip(rows[i], x)) for i in range(l)]
    px = tuple(sum(c * col[k] for c, col in zip(coeffs, cols)) for k in range(len(u)))
    du, dw = subspace_distance([u], H, v), subspace_distance([w], H, v)
    cont = fs_distance(x, px, v) * du if any(px) else None
    lipa = fs_distance(x, la.apply(an, w), v) * dw * du / fs_distance(u, w, v)
    return cont, lipa


@given(seeds, st.sampled_from([None, 3, 5]), st.integers(0, 6))
@settings(max_examples=12)
def test_contraction_inequalities_hold(seed, p, n):
    rng = random.Random(seed)
    v = REAL if p is None else Place(p)
    a, cols, rows, _ = proximal_with_eigenbasis(rng, 2, p)
    prof = select_omega(a, v, HALF)
    u = tuple(Fraction(rng.randint(-5, 5)) for _ in range(2)) or (1, 0)
    w = tuple(Fraction(rng.randint(-5, 5)) for _ in range(2))
    if not any(u) or not any(w) or la.rank([u, w]) < 2:
        return
    cont, lipa = _measured(cols, rows, prof.dim, a, n, u, w, v)
    rc, rl = contraction_bound(a, prof, n, v)
    if cont is not None:
        assert cont.lo <= rc.hi
    assert lipa.lo <= rl.hi


@given(seeds, st.sampled_from([None, 3]))
@settings(max_examples=12)
def test_interm_bound(seed, p):
    rng = random.Random(seed)
    v = REAL if p is None else Place(p)
    a, cols, rows, _ = proximal_with_eigenbasis(rng, 2, p)
    prof = proximal_profile(a, v)
    sel = select_omega(a, v, HALF)
    assert prof is not None and prof.exact
    assert (1 / prof.sep.lo) <= interm_bound(a, sel, v).hi


@given(seeds, st.sampled_from([None, 2, 3]))
@settings(max_examples=12)
def test_cayley_escape_random(seed, p):
    rng = random.Random(seed)
    v = REAL if p is None else Place(p)
    d = rng.choice([2, 3])
    a0 = la.mat([[rng.randint(-4, 4) for _ in range(d)] for _ in range(d)])
    if la.det(a0) == 0:
        return
    H = tuple(Fraction(rng.randint(-3, 3)) for _ in range(d))
    u = tuple(Fraction(rng.randint(-3, 3)) for _ in range(d))
    if not any(H) or sum(h * x for h, x in zip(H, u)) == 0:
        return
    r = cayley_escape(a0, H, u, v)
    assert 1 <= r.j <= d
    x = la.apply(la.matpow(a0, r.j), u)
    assert dist_point_hyperplane(x, H, v).certainly_ge(r.bound)
    # recompute the right-hand side from primitives
    K = place_constants(v, d)
    lam = as_interval(top_modulus(a0, v))
    nrm = as_interval(matrix_norm(a0, v))
    expect = (Interval(abs_value(la.det(a0), v)) / lam ** d * dist_point_hyperplane(u, H, v) / K["C2"]
              * (lam / nrm) ** r.j)
    assert expect.overlaps(r.bound)


@given(seeds, st.sampled_from([None, 3]))
@settings(max_examples=12)
def test_reduce_norm_conjugate_random(seed, p):
    rng = random.Random(seed)
    v = REAL if p is None else Place(p)
    a, *_ = proximal_with_eigenbasis(rng, 2, p)
    try:
        c = reduce_norm_conjugate(a, v)
    except (UnsupportedExtension, ValueError):
        return
    assert c.verified
    h = c.h
    assert la.mul(la.mul(h, a), la.inverse(h)) == c.conjugate
    direct = matrix_norm(c.conjugate, v)
    direct = as_interval(direct)
    assert direct.certainly_le(c.bound_conj)


@given(seeds, st.sampled_from([None, 2, 3]), st.sampled_from([Fraction(1, 4), HALF, Fraction(1)]))
@settings(max_examples=12)
def test_cursor_satisfies_gap_inequality(seed, p, eps):
    rng = random.Random(seed)
    v = REAL if p is None else Place(p)
    a, *_ = proximal_with_eigenbasis(rng, 3, p)
    prof = select_omega(a, v, eps)
    lhs, rhs = almostprox_inequality(prof, eps, top_modulus(la.inverse(a), v))
    assert lhs.hi <= rhs.lo
    assert 1 <= prof.dim <= 2
