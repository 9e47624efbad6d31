from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freepair.intervals import Interval
from freepair.places import (REAL, AlgebraicNumber, OpaqueScalarError, PadicScalar, PadicSelector, Place,
                             PlaceError, RealSelector, abs_at_place, abs_value, newton_root_valuations,
                             product_formula_places, refine, weil_height)
from strategies import nonzero_rationals


# --- places and absolute values ------------------------------------------------------

def test_place_parse_and_str():
    assert Place.parse("real") == REAL
    assert Place.parse("p:7") == Place(7)
    assert str(Place(7)) == "p:7" and str(REAL) == "real"
    with pytest.raises(PlaceError):
        Place(4)
    with pytest.raises(PlaceError):
        Place.parse("q:3")


def test_abs_12_at_2():
    s = abs_at_place(12, Place(2))
    assert isinstance(s, PadicScalar)
    assert s.value == Fraction(1, 4)


def test_abs_12_real():
    assert abs_at_place(12, REAL) == Interval(12)


def test_product_formula_six():
    prod = abs_value(6, REAL) * abs_value(6, Place(2)) * abs_value(6, Place(3))
    assert prod == 1


def test_abs_rejects_zero():
    with pytest.raises(ValueError):
        abs_at_place(0, REAL)


@given(nonzero_rationals())
def test_product_formula_exact(x):
    prod = Fraction(1)
    for v in product_formula_places(x):
        prod *= abs_value(x, v)
    assert prod == 1


@given(nonzero_rationals(10 ** 6), nonzero_rationals(10 ** 6), st.sampled_from([2, 3, 5, 7]))
def test_multiplicative(x, y, p):
    for v in (REAL, Place(p)):
        assert abs_value(x * y, v) == abs_value(x, v) * abs_value(y, v)


@given(nonzero_rationals(10 ** 6), nonzero_rationals(10 ** 6), st.sampled_from([2, 3, 5, 7]))
def test_ultrametric(x, y, p):
    v = Place(p)
    assert abs_value(x + y, v) <= max(abs_value(x, v), abs_value(y, v))


@given(nonzero_rationals(10 ** 6))
def test_rational_abs_is_point(x):
    assert abs_at_place(x, REAL).is_point


# --- Newton polygons -----------------------------------------------------------------

def test_newton_x2_minus_2():
    assert sorted(newton_root_valuations((-2, 0, 1), 2).valuations) == [Fraction(1, 2)] * 2


def test_newton_roots_1_and_2():
    assert sorted(newton_root_valuations((2, -3, 1), 2).valuations) == [0, 1]


@pytest.mark.parametrize("p", [2, 3, 101])
def test_newton_unit_root(p):
    assert newton_root_valuations((-1, 1), p).valuations == (0,)


def test_newton_zero_roots_reported():
    rv = newton_root_valuations((0, 0, -3, 1), 3)
    assert rv.zero_roots == 2 and rv.valuations == (1,)


def test_newton_rejects_constant():
    with pytest.raises(ValueError):
        newton_root_valuations((5,), 5)


# --- refinement ----------------------------------------------------------------------

def test_refine_point_is_fixed():
    assert refine(Interval(3), 200) == Interval(3)


def test_refine_sqrt2():
    sqrt2 = AlgebraicNumber((-2, 0, 1), RealSelector(Fraction(1), Fraction(2)))
    coarse = sqrt2.enclosure(10)
    fine = refine(coarse, 53)
    assert coarse.lo <= fine.lo and fine.hi <= coarse.hi
    assert fine.width < Fraction(1, 2 ** 50)
    assert abs(float(fine.mid) - math.sqrt(2)) < 1e-15
    assert fine.lo ** 2 <= 2 <= fine.hi ** 2


def test_refine_padic_sqrt_minus_one():
    i5 = AlgebraicNumber((1, 0, 1), PadicSelector(5, 7, 2))
    s = i5.padic(2)
    assert (s.unit, s.precision) == (7, 2)
    t = refine(s, 4)
    assert (t.unit, t.precision) == (182, 4)
    assert (182 ** 2 + 1) % 625 == 0


def test_refine_opaque():
    with pytest.raises(OpaqueScalarError):
        refine(Interval(1, 2), 60)


@given(st.integers(5, 80), st.integers(0, 60))
@settings(max_examples=30, deadline=None)
def test_refine_never_widens(bits, extra):
    x = AlgebraicNumber((-3, 0, 1), RealSelector(Fraction(1), Fraction(2))).enclosure(bits)
    y = refine(x, bits + extra)
    assert x.lo <= y.lo and y.hi <= x.hi


# --- Weil heights --------------------------------------------------------------------

def test_weil_height_of_two():
    h = weil_height(AlgebraicNumber((-2, 1), RealSelector(Fraction(1), Fraction(3))))
    assert abs(float(h.lo) - math.log(2)) < 1e-12 and abs(float(h.hi) - math.log(2)) < 1e-12


def test_weil_height_root_of_unity():
    h = weil_height(AlgebraicNumber((1, 0, 1), PadicSelector(5, 2, 1)))
    assert h.lo <= 0 and h.hi < Fraction(1, 10 ** 12)


def test_weil_height_golden_ratio():
    h = weil_height(AlgebraicNumber((-1, -1, 1), RealSelector(Fraction(1), Fraction(2))))
    assert abs(float(h) - 0.5 * math.log((1 + math.sqrt(5)) / 2)) < 1e-12


def test_weil_height_rejects_reducible():
    with pytest.raises(ValueError):
        AlgebraicNumber((2, -3, 1), RealSelector(Fraction(3, 2), Fraction(3)))


@given(st.integers(2, 60), st.integers(1, 60).filter(lambda n: n > 0))
@settings(max_examples=30, deadline=None)
def test_weil_height_inverse_and_power(num, den):
    x = Fraction(num, den)
    if x == 1:
        return
    alpha = AlgebraicNumber.rational(x)
    inv = AlgebraicNumber.rational(1 / x)
    sq = AlgebraicNumber.rational(x * x)
    h, hi, h2 = (weil_height(a) for a in (alpha, inv, sq))
    tol = Fraction(1, 10 ** 9)
    assert abs(h.mid - hi.mid) < tol
    assert abs(2 * h.mid - h2.mid) < tol
