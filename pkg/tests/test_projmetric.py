from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from freepair import linalg as la
from freepair.intervals import Interval
from freepair.places import REAL, Place
from freepair.projmetric import (Ball, DimensionError, HyperplaneForm, ProjSubspace, dist_point_hyperplane,
                                 dist_subspaces, fs_distance, lipschitz_bound, maps_into, standard_norm,
                                 subspace_distance)
from strategies import invertible_int_matrices, vectors

PLACES = [REAL, Place(2), Place(3), Place(5)]
place_st = st.sampled_from(PLACES)


# --- examples ------------------------------------------------------------------------

def test_norm_3_4():
    assert standard_norm((3, 4), REAL) == Interval(5)


def test_norm_4_6_at_2():
    assert standard_norm((4, 6), Place(2)) == Interval(Fraction(1, 2))


@pytest.mark.parametrize("v", PLACES)
def test_norm_unit_vector(v):
    assert standard_norm((1, 0, 0), v) == Interval(1)


def test_fs_orthogonal():
    assert fs_distance((1, 0), (0, 1), REAL) == Interval(1)


@pytest.mark.parametrize("v", PLACES)
def test_fs_same_point(v):
    assert fs_distance((2, 3), (4, 6), v) == Interval(0)


def test_fs_padic():
    assert fs_distance((1, 0), (1, 5), Place(5)) == Interval(Fraction(1, 5))


def test_fs_rejects_zero():
    with pytest.raises(ValueError):
        fs_distance((0, 0), (1, 0), REAL)


def test_point_hyperplane_examples():
    assert dist_point_hyperplane((1, 0), (1, 0), REAL) == Interval(1)
    assert dist_point_hyperplane((0, 1), (1, 0), REAL) == Interval(0)
    d = dist_point_hyperplane((1, 1), (1, 0), REAL)
    assert abs(float(d) - 1 / math.sqrt(2)) < 1e-15
    assert d.lo ** 2 <= Fraction(1, 2) <= d.hi ** 2


def test_subspaces_coordinate_split():
    e = [tuple(Fraction(int(i == j)) for j in range(4)) for i in range(4)]
    assert dist_subspaces([e[0]], e[1:], REAL) == Interval(1)


def test_subspaces_diagonals():
    assert dist_subspaces([(1, 1)], [(1, -1)], REAL) == Interval(1)
    assert dist_subspaces([(1, 1)], [(1, -1)], Place(2)) == Interval(Fraction(1, 2))


def test_subspaces_intersecting_is_zero():
    assert dist_subspaces([(1, 0, 0), (0, 1, 0)], [(1, 1, 0)], REAL) == Interval(0)


def test_subspaces_dimension_mismatch():
    with pytest.raises(DimensionError):
        dist_subspaces([(1, 0, 0)], [(0, 1, 0)], REAL)


def test_lipschitz_examples():
    assert lipschitz_bound(la.identity(2), REAL) == Interval(1)
    h = la.diag(2, Fraction(1, 2))
    assert lipschitz_bound(h, REAL) == Interval(16)
    assert lipschitz_bound(h, Place(2)) == Interval(16)


def test_ball_validation():
    with pytest.raises(ValueError):
        Ball((1, 0), 1)
    assert maps_into(la.diag(4, 1), Ball((1, 0), Fraction(1, 2)), Ball((1, 0), Fraction(1, 2)), REAL)[0]


def test_projsubspace():
    W = ProjSubspace.span((1, 1, 0), (2, 2, 0), (0, 0, 1))
    assert W.dim == 2
    assert HyperplaneForm((1, -1, 0)).kernel().dim == 2


# --- properties ----------------------------------------------------------------------

@given(vectors(3), vectors(3), vectors(3), place_st)
def test_fs_metric(u, w, x, v):
    duw, dwu = fs_distance(u, w, v), fs_distance(w, u, v)
    assert duw == dwu
    assert 0 <= duw.lo and duw.hi <= 1
    assert (duw == Interval(0)) == (la.rank([u, w]) == 1)
    tri = fs_distance(u, x, v) + fs_distance(x, w, v)
    assert duw.lo <= tri.hi


@given(vectors(3), vectors(3), st.permutations(range(3)), st.lists(st.sampled_from([1, -1]), min_size=3, max_size=3),
       place_st)
def test_signed_permutation_isometry(u, w, perm, signs, v):
    k = la.mat([[signs[i] if j == perm[i] else 0 for j in range(3)] for i in range(3)])
    assert fs_distance(la.apply(k, u), la.apply(k, w), v) == fs_distance(u, w, v)


@given(st.data(), place_st)
def test_dist0_identity(data, v):
    d = 3
    V = la.row_space([data.draw(vectors(d, 5)) for _ in range(2)])
    assume(len(V) == 2)
    f = data.draw(vectors(d, 5))
    coeffs = data.draw(vectors(2, 5))
    x = tuple(coeffs[0] * V[0][j] + coeffs[1] * V[1][j] for j in range(d))
    fx = sum(a * b for a, b in zip(f, x))
    assume(fx != 0)
    H = la.kernel([f])
    VH = la.intersect_subspaces(V, H)
    assume(len(VH) == 1)
    Vstar = la.annihilator(V, d)
    lhs = dist_point_hyperplane(x, f, v)
    rhs = subspace_distance([x], VH, v) * subspace_distance([f], Vstar, v)
    if v.is_real:
        assert lhs.overlaps(rhs) and rhs.width < Fraction(1, 10 ** 20)
    else:
        assert lhs == rhs


@given(st.data(), place_st)
def test_dist1_inequality(data, v):
    d = 3
    V = la.row_space([data.draw(vectors(d, 5)) for _ in range(2)])
    W = la.row_space([data.draw(vectors(d, 5))])
    assume(len(V) == 2 and len(W) == 1 and la.rank(V + W) == 3)
    f = data.draw(vectors(d, 5))
    H = la.kernel([f])
    VH = la.intersect_subspaces(V, H)
    assume(len(VH) == 1)
    u = data.draw(vectors(d, 5))
    assume(la.rank(W + [u]) == 2)
    coords = la.solve(la.transpose(tuple(V + W)), u)
    pu = tuple(coords[0] * V[0][j] + coords[1] * V[1][j] for j in range(d))
    lhs = subspace_distance([pu], VH, v)
    rhs = subspace_distance([u], W + VH, v) * dist_subspaces(V, W, v)
    assert lhs.hi >= rhs.lo


@given(invertible_int_matrices(3), vectors(3), vectors(3), place_st)
def test_lipschitz_empirical(h, u, w, v):
    assume(la.rank([u, w]) == 2)
    lhs = fs_distance(la.apply(h, u), la.apply(h, w), v)
    rhs = lipschitz_bound(h, v) * fs_distance(u, w, v)
    assert lhs.lo <= rhs.hi
