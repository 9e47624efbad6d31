"""Global heights of matrix sets, Arakelov heights of subspaces and adelic distances."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import sympy

from . import linalg as la
from .intervals import DEFAULT_PREC, Interval
from .places import REAL, Place, as_interval
from .projmetric import subspace_distance
from .spectral import (MatrixSet, minimal_norm_estimate, product_set, set_norm,
                       spectral_radius_estimate)


@dataclass(frozen=True)
class HeightReport:
    kind: str                          # "h" | "h-hat" | "e" | "arakelov" | "adelic-distance"
    places: tuple                      # ((Place, Interval), ...) nonzero contributions
    total: Interval
    tag: str = "exact"                 # "exact" | "lower-bound" | "infinite"
    note: str = ""

    def contribution(self, v: Place) -> Interval:
        for p, val in self.places:
            if p == v:
                return val
        return Interval(0)

    @property
    def is_infinite(self) -> bool:
        return self.tag == "infinite"

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "places": [{"place": str(p), "value": val.to_json()} for p, val in self.places],
            "total": self.total.to_json(),
            "tag": self.tag,
        }


def _report(kind: str, contribs: Sequence, tag: str = "exact", note: str = "") -> HeightReport:
    contribs = tuple((v, c) for v, c in contribs if not c == 0)
    total = Interval(0)
    for _, c in contribs:
        total = total + c
    return HeightReport(kind, contribs, total, tag, note)


def _primes_of(xs, numerators: bool = False) -> list[int]:
    primes = set()
    for x in xs:
        x = Fraction(x)
        if x == 0:
            continue
        primes |= {int(p) for p in sympy.factorint(x.denominator)}
        if numerators:
            primes |= {int(p) for p in sympy.factorint(abs(x.numerator))}
    return sorted(primes)


def _entries(mats) -> list:
    return [x for m in mats for r in m for x in r]


def _log_plus(x, prec: int) -> Interval:
    return as_interval(x, prec).log_plus(prec)


def set_height(F: MatrixSet | Sequence, prec: int = DEFAULT_PREC) -> HeightReport:
    """h(F): sum over places of log+ ||F||_v."""
    if not isinstance(F, MatrixSet):
        F = MatrixSet(tuple(F))
    places = [REAL] + [Place(p) for p in _primes_of(_entries(F.matrices))]
    return _report("h", [(v, _log_plus(set_norm(F, v, prec), prec)) for v in places])


@dataclass(frozen=True)
class NormalizedSample:
    n: int
    sequence: HeightReport             # h(F^n) / n
    placewise: HeightReport            # sum_v log+ ||F^n||_v^(1/n), via spectral radius samples


def normalized_height_estimate(F: MatrixSet, n_max: int, prec: int = DEFAULT_PREC,
                               budget: int = 200_000) -> list[NormalizedSample]:
    """Samples h(F^n)/n and sum_v log+ R_v-samples for n = 1..n_max (brackets, not a limit)."""
    if not F.contains_identity:
        raise ValueError("normalized_height_estimate requires the identity in F")
    places = [REAL] + [Place(p) for p in _primes_of(_entries(F.matrices))]
    out = []
    for n in range(1, n_max + 1):
        Fn = MatrixSet(tuple(product_set(F, n, budget).keys()))
        h = set_height(Fn, prec)
        seq = _report("h-hat", [(v, c / n) for v, c in h.places], note=f"h(F^{n})/{n}")
        pw = _report("h-hat", [(v, _log_plus(spectral_radius_estimate(F, v, n, prec, budget), prec))
                               for v in places], note=f"sum log+ ||F^{n}||_v^(1/{n})")
        out.append(NormalizedSample(n, seq, pw))
    return out


def minimal_height_estimate(F: MatrixSet, prec: int = DEFAULT_PREC, budget: int = 50_000) -> HeightReport:
    """e(F) = sum_v log+ E_v(F); exact at finite places, a lower bound at the real place."""
    if not F.contains_identity:
        raise ValueError("minimal_height_estimate requires the identity in F")
    places = [REAL] + [Place(p) for p in _primes_of(_entries(F.matrices), numerators=True)]
    contribs = []
    tag = "exact"
    for v in places:
        est = minimal_norm_estimate(F, v, prec, budget)
        c = _log_plus(est.value, prec)
        if est.tag != "exact":
            tag = "lower-bound"
        contribs.append((v, c))
    return _report("e", contribs, tag)


# --- Arakelov heights ----------------------------------------------------------------

def _basis(W) -> list:
    if hasattr(W, "basis"):
        W = W.basis
    return la.row_space([la.vec(w) for w in W]) if W else []


def primitive_plucker(W) -> tuple:
    """Primitive integer Plücker vector of span(W)."""
    basis = _basis(W)
    return la.primitive_integer(la.plucker(basis))


def arakelov_height(W, prec: int = DEFAULT_PREC) -> HeightReport:
    """h_Ar(W) = (1/2) log of the squared Euclidean norm of a primitive integer Plücker vector."""
    basis = _basis(W)
    if not basis:
        return _report("arakelov", [])
    pl = la.primitive_integer(la.plucker(basis))
    nsq = sum(x * x for x in pl)
    val = Interval(nsq).log(prec) / 2
    return _report("arakelov", [(REAL, val)], note=f"(1/2) log {nsq}")


def form_height(f: Sequence, prec: int = DEFAULT_PREC) -> HeightReport:
    """Arakelov height of a linear form viewed as a point of the dual projective space."""
    return arakelov_height([la.vec(f)], prec)


@dataclass(frozen=True)
class AdelicDistance:
    placewise: HeightReport            # sum_v log 1/d_v(V, W)
    identity: HeightReport             # h(V) + h(W) - h(V+W)

    @property
    def agree(self) -> bool:
        if self.placewise.is_infinite or self.identity.is_infinite:
            return self.placewise.is_infinite and self.identity.is_infinite
        return self.placewise.total.overlaps(self.identity.total)


def adelic_distance(V, W, prec: int = DEFAULT_PREC) -> AdelicDistance:
    """delta(V; W) summed over places, alongside the Arakelov-height identity."""
    bv, bw = _basis(V), _basis(W)
    if not bv or not bw:
        raise ValueError("adelic distance needs nonzero subspaces")
    if la.rank(bv + bw) < len(bv) + len(bw):
        inf = HeightReport("adelic-distance", (), Interval(0), "infinite", "V and W intersect")
        return AdelicDistance(inf, inf)
    pv, pw = la.plucker(bv), la.plucker(bw)
    wedge = la.plucker(bv + bw)
    primes = _primes_of(list(pv) + list(pw) + list(wedge), numerators=True)
    contribs = []
    for v in [REAL] + [Place(p) for p in primes]:
        d = subspace_distance(bv, bw, v, prec)
        contribs.append((v, -d.log(prec)))
    placewise = _report("adelic-distance", contribs)
    total = (arakelov_height(bv, prec).total + arakelov_height(bw, prec).total
             - arakelov_height(la.row_space(bv + bw), prec).total)
    ident = HeightReport("adelic-distance", ((REAL, total),), total, "exact", "h(V)+h(W)-h(V+W)")
    return AdelicDistance(placewise, ident)


# --- matrix heights used by bounds ---------------------------------------------------

def matrix_height(g: la.Matrix, prec: int = DEFAULT_PREC) -> Interval:
    """h(g) = h({g})."""
    return set_height(MatrixSet((g,)), prec).total


def admissible_height_bound(a: la.Matrix, prec: int = DEFAULT_PREC) -> Interval:
    """d^2 (2 h(a) + log 2), bounding h_Ar of a-admissible subspaces for rational spectra."""
    d = len(a)
    return (matrix_height(a, prec) * 2 + Interval(2).log(prec)) * (d * d)
