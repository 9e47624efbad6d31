"""Standard norms and the Fubini-Study metric on projective space over Q_v.

Vectors and matrices have exact rational entries.  At the real place norms
are Euclidean (spectral for operators) and returned as certified intervals;
at a finite place they are sup norms and returned as exact point intervals.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import linalg as la
from .intervals import DEFAULT_PREC, Interval, _mpf_to_fraction, sqrt_interval
from .places import Place, abs_value


class PlaceMismatchError(ValueError):
    pass


class DimensionError(ValueError):
    pass


# --- data -------------------------------------------------------------------

@dataclass(frozen=True)
class ProjSubspace:
    """Span of rational basis vectors with its Plücker vector."""

    basis: tuple
    plucker: tuple = field(init=False, repr=False)

    def __post_init__(self):
        basis = tuple(la.vec(b) for b in self.basis)
        object.__setattr__(self, "basis", basis)
        if basis and la.rank(basis) != len(basis):
            raise ValueError("basis vectors are linearly dependent")
        object.__setattr__(self, "plucker", la.plucker(basis))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @classmethod
    def span(cls, *vectors) -> "ProjSubspace":
        return cls(tuple(la.row_space([la.vec(v) for v in vectors])))


@dataclass(frozen=True)
class HyperplaneForm:
    """Linear form f (coefficients in the dual basis); the hyperplane is ker f."""

    form: tuple

    def __post_init__(self):
        f = la.vec(self.form)
        if all(x == 0 for x in f):
            raise ValueError("zero linear form")
        object.__setattr__(self, "form", f)

    def __call__(self, u) -> Fraction:
        return sum((a * b for a, b in zip(self.form, u)), Fraction(0))

    def kernel(self) -> ProjSubspace:
        return ProjSubspace(tuple(la.kernel([self.form])))


# --- norms ------------------------------------------------------------------

def norm_sq(u: Sequence[Fraction]) -> Fraction:
    return sum((Fraction(x) * x for x in u), Fraction(0))


def sup_abs(u: Sequence, v: Place) -> Fraction:
    return max((abs_value(x, v) for x in u), default=Fraction(0))


def standard_norm(u: Sequence, v: Place, prec: int = DEFAULT_PREC) -> Interval:
    """Euclidean norm at the real place, exact sup norm at a finite place."""
    if len(u) < 1:
        raise DimensionError("empty vector")
    u = la.vec(u)
    if v.is_real:
        return sqrt_interval(norm_sq(u), prec)
    return Interval(sup_abs(u, v))


def _ratio(num: Sequence, dens: Sequence[Sequence], v: Place, prec: int) -> Interval:
    """||num|| / prod ||den_i|| with a single rounding step."""
    if v.is_real:
        q = norm_sq(num)
        for d in dens:
            q /= norm_sq(d)
        return sqrt_interval(q, prec)
    q = sup_abs(num, v)
    for d in dens:
        q /= sup_abs(d, v)
    return Interval(q)


def subspace_distance(V: Sequence, W: Sequence, v: Place, prec: int = DEFAULT_PREC) -> Interval:
    """||v_ ∧ w_|| / (||v_||·||w_||) for rational bases V, W (any dimensions)."""
    V = [la.vec(x) for x in V]
    W = [la.vec(x) for x in W]
    if V and W and len(V[0]) != len(W[0]):
        raise DimensionError("ambient dimensions differ")
    pv, pw = la.plucker(V), la.plucker(W)
    if all(x == 0 for x in pv) or all(x == 0 for x in pw):
        raise ValueError("degenerate basis")
    if len(V) + len(W) > len((V or W)[0]):
        return Interval(0)
    return _ratio(la.plucker(V + W), [pv, pw], v, prec)


def fs_distance(u: Sequence, w: Sequence, v: Place, prec: int = DEFAULT_PREC) -> Interval:
    """Fubini-Study distance between the projective points [u] and [w]."""
    if isinstance(u, Place) or isinstance(w, Place):
        raise PlaceMismatchError("vectors expected")
    if len(u) != len(w):
        raise DimensionError("dimension mismatch")
    if all(Fraction(x) == 0 for x in u) or all(Fraction(x) == 0 for x in w):
        raise ValueError("zero vector is not a projective point")
    return subspace_distance([u], [w], v, prec)


def dist_point_hyperplane(u: Sequence, H: HyperplaneForm | Sequence, v: Place,
                          prec: int = DEFAULT_PREC) -> Interval:
    """|f(u)| / (||f||·||u||)."""
    f = H if isinstance(H, HyperplaneForm) else HyperplaneForm(tuple(H))
    u = la.vec(u)
    if all(x == 0 for x in u):
        raise ValueError("zero vector")
    fu = f(u)
    if fu == 0:
        return Interval(0)
    return _ratio((fu,), [f.form, u], v, prec)


def dist_subspaces(V: ProjSubspace | Sequence, W: ProjSubspace | Sequence, v: Place,
                   prec: int = DEFAULT_PREC) -> Interval:
    """Distance between complementary subspaces; 0 when they intersect."""
    Vb = V.basis if isinstance(V, ProjSubspace) else tuple(V)
    Wb = W.basis if isinstance(W, ProjSubspace) else tuple(W)
    d = len((Vb or Wb)[0])
    if len(Vb) + len(Wb) != d:
        raise DimensionError(f"dim V + dim W = {len(Vb) + len(Wb)} != {d}")
    return subspace_distance(Vb, Wb, v, prec)


# --- operator norms -----------------------------------------------------------

def _is_positive_definite(m: Sequence[Sequence[Fraction]]) -> bool:
    """Exact LDL^T test on a symmetric rational matrix."""
    a = [list(r) for r in m]
    n = len(a)
    for k in range(n):
        if a[k][k] <= 0:
            return False
        for i in range(k + 1, n):
            f = a[i][k] / a[k][k]
            if f:
                for j in range(k + 1, n):
                    a[i][j] -= f * a[k][j]
    return True


def _gram(a: la.Matrix) -> la.Matrix:
    return la.mul(la.transpose(a), a)


def _top_eig_estimate(g: la.Matrix, prec: int):
    """Top eigenpair of a symmetric rational matrix: (value, vector) as Fractions."""
    big = max((abs(x) for r in g for x in r), default=Fraction(0))
    if prec <= 48 and big < Fraction(10) ** 150 and big > Fraction(1, 10 ** 150):
        w, vecs = np.linalg.eigh(la.to_float(g))
        lam = Fraction(float(w[-1]))
        x = tuple(Fraction(float(t)) for t in vecs[:, -1])
        return lam, x
    import mpmath
    with mpmath.workprec(prec + 30):
        M = mpmath.matrix([[mpmath.mpf(x.numerator) / x.denominator for x in r] for r in g])
        w, vecs = mpmath.eigsy(M)
        k = max(range(len(w)), key=lambda i: w[i])
        lam = _mpf_to_fraction(mpmath.mpf(w[k])._mpf_)
        x = tuple(_mpf_to_fraction(mpmath.mpf(vecs[i, k])._mpf_) for i in range(len(w)))
        return lam, x


def spectral_norm_sq(a: la.Matrix, prec: int = 48) -> Interval:
    """Certified enclosure of the largest eigenvalue of a^T a."""
    g = _gram(a)
    n = len(g)
    if n == 1:
        return Interval(g[0][0])
    if all(g[i][j] == 0 for i in range(n) for j in range(n) if i != j):
        top = max(g[i][i] for i in range(n))
        return Interval(top)
    if n == 2:
        # closed form ((t + sqrt(t^2 - 4 det)) / 2), sharp to the requested precision
        t = g[0][0] + g[1][1]
        dt = g[0][0] * g[1][1] - g[0][1] * g[1][0]
        disc = sqrt_interval(t * t - 4 * dt, prec + 20)
        return (disc + t) / 2
    lam, x = _top_eig_estimate(g, prec)
    lower = Fraction(0)
    if any(x):
        lower = norm_sq(la.apply(a, x)) / norm_sq(x)
    # upper bound: U*I - g must be positive definite
    scale = max(abs(lam), max(abs(g[i][i]) for i in range(n)))
    slack = scale / (1 << max(prec - 8, 20)) + Fraction(1, 1 << (prec + 60))
    upper = max(lam, lower) + slack
    while not _is_positive_definite([[(upper if i == j else 0) - g[i][j] for j in range(n)] for i in range(n)]):
        slack *= 4
        upper = max(lam, lower) + slack
    return Interval(min(lower, upper), upper)


def operator_norm(a: la.Matrix, v: Place, prec: int = DEFAULT_PREC) -> Interval:
    """Operator norm for the standard norm at v (spectral norm at the real place)."""
    if v.is_real:
        return spectral_norm_sq(a, 48 if prec <= DEFAULT_PREC else prec).sqrt(prec)
    return Interval(max(abs_value(x, v) for r in a for x in r))


def frobenius_sq(a: la.Matrix) -> Fraction:
    return sum((x * x for r in a for x in r), Fraction(0))


def lipschitz_bound(h: la.Matrix, v: Place, prec: int = DEFAULT_PREC) -> Interval:
    """(||h||·||h^-1||)^2, an upper bound for the projective Lipschitz constant of h."""
    hinv = la.inverse(h)
    return (operator_norm(h, v, prec) * operator_norm(hinv, v, prec)) ** 2


# --- balls in projective space -----------------------------------------------

@dataclass(frozen=True)
class Ball:
    """Closed Fubini-Study ball of a rational radius around a rational point."""

    center: tuple
    radius: Fraction

    def __post_init__(self):
        object.__setattr__(self, "center", la.vec(self.center))
        object.__setattr__(self, "radius", Fraction(self.radius))
        if not 0 < self.radius < 1:
            raise ValueError("ball radius must lie in (0, 1)")


@dataclass(frozen=True)
class BallImage:
    """Bounds for the image of a ball under a matrix."""

    center: tuple              # a · (ball center)
    radius: Interval            # every image point lies within this distance of center
    lipschitz: Interval         # Lipschitz constant of the action on the ball


def _orth_complement_projector(c: Sequence[Fraction]) -> la.Matrix:
    n = len(c)
    cc = norm_sq(c)
    return tuple(tuple((1 if i == j else 0) - c[i] * c[j] / cc for j in range(n)) for i in range(n))


def ball_image(a: la.Matrix, ball: Ball, v: Place, prec: int = DEFAULT_PREC) -> BallImage | None:
    """Certified image radius and Lipschitz constant of a acting on ball; None if not controlled.

    Real place: for a unit point u = cos(t) c + sin(t) e in the ball, with e
    orthogonal to c, ||a u|| >= sqrt(1 - r^2) ||a c|| - r ||a Q|| =: m where Q
    projects onto the orthogonal complement of c.  Then
    d(au, ac) <= ||Λ²a|| r / (m ||a c||) and Lip <= ||Λ²a|| / m².
    Finite place: with c scaled so its largest coordinate c_i equals 1, the
    ball is c + {w : w_i = 0, ||w|| <= r}, and if ||a Q_i|| r < ||a c|| then
    ||a u|| = ||a c|| on the whole ball (Q_i zeroes coordinate i).
    """
    c = ball.center
    r = ball.radius
    ac = la.apply(a, c)
    wedge_norm = operator_norm(la.compound(a, 2), v, prec) if len(a) > 1 else Interval(0)
    if v.is_real:
        cnorm_sq = norm_sq(c)
        ac_hat = sqrt_interval(norm_sq(ac) / cnorm_sq, prec)
        aq = operator_norm(la.mul(a, _orth_complement_projector(c)), v, prec)
        m = sqrt_interval(1 - r * r, prec) * ac_hat - aq * r
        if m.lo <= 0:
            return None
        radius = wedge_norm * r / (m * ac_hat)
        lip = wedge_norm / (m * m)
        return BallImage(ac, radius.rounded(prec), lip.rounded(prec))
    i = max(range(len(c)), key=lambda k: (abs_value(c[k], v), -k))
    cn = tuple(x / c[i] for x in c)
    acn = la.apply(a, cn)
    n_ac = sup_abs(acn, v)
    qa = tuple(tuple(Fraction(0) if j == i else a[k][j] for j in range(len(c))) for k in range(len(c)))
    n_aq = max(abs_value(x, v) for row in qa for x in row)
    if not n_aq * r < n_ac:
        return None
    radius = wedge_norm.hi * r / (n_ac * n_ac)
    lip = wedge_norm.hi / (n_ac * n_ac)
    return BallImage(acn, Interval(radius), Interval(lip))


def point_in_ball_bound(p: Sequence, ball: Ball, v: Place, prec: int = DEFAULT_PREC) -> Interval:
    return fs_distance(p, ball.center, v, prec)


def maps_into(a: la.Matrix, source: Ball, target: Ball, v: Place,
              prec: int = DEFAULT_PREC) -> tuple[bool, Interval | None]:
    """Certify a(source) ⊂ interior(target).  Returns (ok, certified upper bound on the spread)."""
    img = ball_image(a, source, v, prec)
    if img is None:
        return False, None
    offset = fs_distance(img.center, target.center, v, prec)
    if v.is_real:
        reach = offset + img.radius
    else:
        reach = offset.max(img.radius)
    return reach.certainly_lt(target.radius), reach


def balls_disjoint(b1: Ball, b2: Ball, v: Place, prec: int = DEFAULT_PREC) -> tuple[bool, Interval]:
    """Certify that two closed balls are disjoint (sum of radii, or max when ultrametric)."""
    dist = fs_distance(b1.center, b2.center, v, prec)
    need = b1.radius + b2.radius if v.is_real else max(b1.radius, b2.radius)
    return dist.certainly_gt(need), dist
