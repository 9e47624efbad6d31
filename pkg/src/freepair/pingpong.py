"""Free subgroup certificates: proximal words, escape searches and four-ball ping-pong.

Every quantity that ends up in a certificate is recomputed by
:func:`verify_certificate` from the input matrices and the certificate fields
alone.  Search heuristics (frames, thresholds, scan orders) only decide what
gets certified; soundness rests on the ball containments and disjointness.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from . import linalg as la
from .intervals import DEFAULT_PREC, Interval, fraction_str, parse_fraction
from .modp import brute_force_no_relation
from .places import REAL, Place, as_interval
from .projmetric import (Ball, balls_disjoint, dist_point_hyperplane, fs_distance, lipschitz_bound,
                         maps_into, subspace_distance)
from .reducibility import CERT_SOLVABLE, solvability_verdict
from .spectral import (BudgetExceeded, MatrixSet, _float_spectral_radius, max_operator_norm, PrecisionEscalation, ProximalProfile, balance_set,
                       cursor_constant, eigenstructure, matrix_norm, minimal_norm_estimate,
                       modulus_classes, place_constants, product_levels, proximal_profile, select_omega,
                       NoCursor)

__all__ = [
    "PingPongConstants", "FreeGroupCertificate", "Inequality", "ConditionReport", "Workspace",
    "select_place", "find_proximal_word", "escape_search", "check_conditions", "build_very_proximal",
    "build_pair", "certify_free", "verify_certificate", "brute_force_no_relation",
    "PipelineError", "NotFound", "ConditionError", "MalformedCertificate", "CertifyResult",
]

CERT_VERSION = 1


class PipelineError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it and ``diagnostics`` explains why."""

    def __init__(self, stage: str, message: str, diagnostics: Optional[dict] = None):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.diagnostics = diagnostics or {}


class NotFound(PipelineError):
    pass


class ConditionError(PipelineError):
    pass


class MalformedCertificate(ValueError):
    pass


# --- constants -------------------------------------------------------------------------

@dataclass(frozen=True)
class PingPongConstants:
    eps0: Fraction = Fraction(1, 2)
    eps: Optional[Fraction] = None          # defaults to eps0 / (12 d^2)
    T0: Fraction = Fraction(4)
    T1: Fraction = Fraction(4)
    T2: Fraction = Fraction(4)
    T3: Fraction = Fraction(4)
    tau1: Fraction = Fraction(4)
    tau3: Fraction = Fraction(4)
    k1: int = 4                              # proximal word search depth (capped at d^2)
    k2: int = 4                              # escape depth for b
    k3: int = 4                              # escape depth for t
    k4: int = 8                              # proximal candidates tried
    k5: int = 4                              # escape depth for c
    l: int = 6                               # l0, l1 range of the very proximal scan
    l2: int = 1                              # least exponent n tried for the pair
    n_budget: int = 24                       # exponents tried after l2

    def __post_init__(self):
        for name in ("eps0", "T0", "T1", "T2", "T3", "tau1", "tau3"):
            val = Fraction(getattr(self, name))
            if val <= 0:
                raise ValueError(f"{name} must be positive")
            object.__setattr__(self, name, val)
        if self.eps is not None:
            object.__setattr__(self, "eps", Fraction(self.eps))
            if self.eps <= 0:
                raise ValueError("eps must be positive")
        for name in ("k1", "k2", "k3", "k4", "k5", "l", "l2", "n_budget"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.T1 < self.tau1:
            raise ValueError("T1 is below the configured tau1 threshold")
        if self.T3 < self.tau3:
            raise ValueError("T3 is below the configured tau3 threshold")

    def epsilon(self, d: int) -> Fraction:
        eps = self.eps if self.eps is not None else self.eps0 / (12 * d * d)
        if eps > self.eps0 / (12 * d * d):
            raise ValueError("eps must not exceed eps0 / (12 d^2)")
        return eps

    def worst_case_tau1(self, d: int) -> Fraction:
        """max(2/eta, 3/(eta eps), 4/eps0) with eta = 1/(4 C(eps, d)); reported, not enforced."""
        eps = self.epsilon(d)
        eta = 1 / (4 * cursor_constant(eps, d))
        return max(2 / eta, 3 / (eta * eps), 4 / self.eps0)

    def to_json(self) -> dict:
        out = {}
        for k in self.__dataclass_fields__:
            val = getattr(self, k)
            out[k] = fraction_str(val) if isinstance(val, Fraction) else val
        return out

    @classmethod
    def from_json(cls, data: dict) -> "PingPongConstants":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown constants: {sorted(unknown)}")
        kw = {}
        for k, val in data.items():
            if k.startswith("k") or k in ("l", "l2", "n_budget"):
                kw[k] = int(val)
            elif val is None:
                kw[k] = None
            else:
                kw[k] = parse_fraction(val)
        return cls(**kw)


# --- words -----------------------------------------------------------------------------

def reduce_word(word: Sequence[int]) -> tuple:
    out = []
    for x in word:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def inverse_word(word: Sequence[int]) -> tuple:
    return tuple(-x for x in reversed(word))


def _pow_word(word, n: int) -> tuple:
    return reduce_word(tuple(word) * n if n >= 0 else inverse_word(word) * (-n))


# --- inequalities ----------------------------------------------------------------------

@dataclass(frozen=True)
class Inequality:
    condition: str          # "(i)".."(vi)", "very-proximal", "ping-pong", "ball-disjointness"
    label: str
    lhs: Interval
    rhs: Interval
    relation: str           # ">", ">=" or "<"
    certified: bool = True  # False when the enclosure rests on uncertified eigen-approximations

    @property
    def status(self) -> str:
        lhs, rhs = self.lhs, self.rhs
        if self.relation == ">":
            ok, bad = lhs.lo > rhs.hi, lhs.hi <= rhs.lo
        elif self.relation == ">=":
            ok, bad = lhs.lo >= rhs.hi, lhs.hi < rhs.lo
        elif self.relation == "<":
            ok, bad = lhs.hi < rhs.lo, lhs.lo >= rhs.hi
        else:
            raise ValueError(f"unknown relation {self.relation}")
        return "pass" if ok else ("fail" if bad else "undecided")

    @property
    def holds(self) -> bool:
        return self.status == "pass"

    def to_json(self) -> dict:
        return {"condition": self.condition, "label": self.label, "lhs": self.lhs.to_json(),
                "rhs": self.rhs.to_json(), "relation": self.relation, "status": self.status,
                "certified": self.certified}


@dataclass(frozen=True)
class ConditionReport:
    entries: tuple

    def status(self, condition: str) -> str:
        sts = [e.status for e in self.entries if e.condition == condition]
        if not sts:
            return "pass"
        if "fail" in sts:
            return "fail"
        return "undecided" if "undecided" in sts else "pass"

    def passed(self, *conditions: str) -> bool:
        return all(self.status(c) == "pass" for c in conditions)

    def failing(self) -> list[str]:
        return sorted({e.condition for e in self.entries if e.status != "pass"})

    def to_json(self) -> list:
        return [e.to_json() for e in self.entries]


def _pow(x: Interval, T: Fraction, prec: int) -> Interval:
    T = Fraction(T)
    if T.denominator == 1:
        return (x ** int(T)).rounded(prec) if T >= 0 else (x ** int(-T)).reciprocal().rounded(prec)
    return x.power(T, prec)


def _widen(iv: Interval, err: Fraction, v: Place) -> Interval:
    if err == 0:
        return iv
    if v.is_real:
        return Interval(max(Fraction(0), iv.lo - err), min(Fraction(1), iv.hi + err))
    if iv.lo > err:
        return iv
    return Interval(0, max(iv.hi, err))


def _form_err(r: Fraction, v: Place) -> Fraction:
    """Effect on point-hyperplane distances of moving a normal vector by r."""
    return 2 * r if v.is_real else r


# --- workspace -------------------------------------------------------------------------

@dataclass
class Workspace:
    """Input letters, the chosen place and frame, and the working norm scale."""

    inputs: tuple                    # the input matrices, letter i <-> inputs[i - 1]
    place: Place
    frame: la.Matrix
    prec: int
    consts: PingPongConstants
    lift: int = 1                    # k0: the working set is F^k0
    norm: Optional[Interval] = None  # ||F^k0||_v in the frame
    letters: tuple = ()              # non-identity letters of the symmetric closure, in closure order
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return len(self.inputs[0])

    def letter_matrix(self, letter: int) -> la.Matrix:
        key = ("letter", letter)
        if key not in self._cache:
            i = abs(letter)
            if letter == 0 or i > len(self.inputs):
                raise MalformedCertificate(f"letter {letter} out of range")
            g = self.frame
            m = la.mul(la.mul(g, self.inputs[i - 1]), la.inverse(g))
            self._cache[key] = m if letter > 0 else la.inverse(m)
        return self._cache[key]

    def word_matrix(self, word: Sequence[int]) -> la.Matrix:
        word = tuple(word)
        key = ("word", word)
        if key not in self._cache:
            if not word:
                out = la.identity(self.dim)
            elif len(word) == 1:
                out = self.letter_matrix(word[0])
            else:
                h = len(word) // 2
                out = la.mul(self.word_matrix(word[:h]), self.word_matrix(word[h:]))
            self._cache[key] = out
        return self._cache[key]

    def closure_set(self) -> tuple[MatrixSet, list]:
        """Framed symmetric closure with the identity, and the letter of each member (0 = identity)."""
        mats, letters = [], []
        seen = set()
        ident = la.identity(self.dim)
        for i in range(1, len(self.inputs) + 1):
            m = self.letter_matrix(i)
            if m not in seen:
                seen.add(m)
                mats.append(m)
                letters.append(0 if m == ident else i)
        for i in range(1, len(self.inputs) + 1):
            m = self.letter_matrix(-i)
            if m not in seen:
                seen.add(m)
                mats.append(m)
                letters.append(-i)
        if ident not in seen:
            mats.append(ident)
            letters.append(0)
        return MatrixSet(tuple(mats)), letters


def _input_mats(F) -> tuple:
    mats = F.matrices if isinstance(F, MatrixSet) else tuple(la.mat(m) for m in F)
    if not mats:
        raise ValueError("empty matrix set")
    return tuple(mats)


def make_workspace(F, v: Place, consts: PingPongConstants, prec: int = DEFAULT_PREC,
                   frame: Optional[la.Matrix] = None, lift: Optional[int] = None,
                   budget: int = 20_000) -> Workspace:
    """Choose a frame (real place: energy balancing) and the lift k0 with ||F^k0|| > C_{k,1}^{2d}."""
    inputs = _input_mats(F)
    d = len(inputs[0])
    if frame is None:
        if v.is_real:
            closed = MatrixSet(inputs).closure()
            frame, _ = balance_set([m for m in closed.matrices if not la.is_identity(m)] or [la.identity(d)])
        else:
            frame = la.identity(d)
    ws = Workspace(inputs, v, la.mat(frame), prec, consts)
    if la.det(ws.frame) == 0:
        raise MalformedCertificate("singular frame")
    S, letters = ws.closure_set()
    ws.letters = tuple(x for x in letters if x != 0)
    ladder = _NormLadder(S, v, prec, budget)
    threshold = Interval(place_constants(v, d)["C1"]) ** (2 * d)
    if lift is not None:
        ws.lift = int(lift)
        ws.norm = ladder.norm(ws.lift)
        return ws
    k = 1
    while True:
        nrm = ladder.norm(k)
        if nrm.lo > threshold.hi or k >= 64 * d * d:
            ws.lift, ws.norm = k, nrm
            return ws
        k += 1


class _NormLadder:
    """Enclosures of ||F^k||_v: exact while F^k fits the budget, bracketed beyond.

    Past the last enumerated level j, submultiplicativity gives
    ||F^k|| <= ||F^j||^(k div j) ||F||^(k mod j), and since 1 is in F,
    ||F^k|| >= ||w^s|| for any word w with s |w| <= k.
    """

    def __init__(self, S: MatrixSet, v: Place, prec: int, budget: int):
        self.v, self.prec = v, prec
        self.levels = []           # norm enclosures of F^q, q = 1..j
        self._first = {}           # matrix -> level where it first appears
        self._gen = product_levels(S, 1 << 30, min(budget, 5000))
        self._done = False
        self._cache = {}
        self._words = None

    def _advance(self, k: int):
        while not self._done and len(self.levels) < k:
            try:
                q, level = next(self._gen)
            except (BudgetExceeded, StopIteration):
                self._done = True
                return
            self.levels.append(as_interval(max_operator_norm(list(level), self.v, self.prec), self.prec))
            for m in level:
                self._first.setdefault(m, q)

    def _best_words(self) -> list:
        if self._words is None:
            rated = []
            for i, (m, q) in enumerate(self._first.items()):
                top = _float_spectral_radius(m) if self.v.is_real else _float_moduli(m, self.v)[0]
                if 1 < top < math.inf:
                    rated.append((-round(math.log(top) / q, 10), q, i, m))
            rated.sort(key=lambda t: t[:3])
            self._words = [(m, q) for _, q, _, m in rated[:6]]
        return self._words

    def norm(self, k: int) -> Interval:
        self._advance(k)
        if k <= len(self.levels):
            return self.levels[k - 1]
        if k not in self._cache:
            j = len(self.levels)
            hi = self.levels[j - 1].hi ** (k // j) * self.levels[0].hi ** (k % j)
            lo = self.levels[j - 1].lo
            for m, q in self._best_words():
                lo = max(lo, as_interval(matrix_norm(la.matpow(m, k // q), self.v, self.prec), self.prec).lo)
            self._cache[k] = Interval(lo, max(lo, hi))
        return self._cache[k]


# --- place selection -------------------------------------------------------------------

def _candidate_primes(mats) -> list[int]:
    """Primes of entry denominators.

    A prime dividing only numerators leaves every entry p-integral, so
    ||F||_p <= 1 and no eigenvalue modulus exceeds 1 there.
    """
    import sympy
    primes = set()
    for m in mats:
        for r in m:
            for x in r:
                primes |= {int(p) for p in sympy.factorint(Fraction(x).denominator)}
    return sorted(primes)


def select_place(F, prec: int = DEFAULT_PREC, budget: int = 50_000) -> list[tuple[Place, Interval]]:
    """Places with an eigenvalue gap, scored by log max_q Lambda_v(F^q)^(1/q), q <= d^2."""
    S = F if isinstance(F, MatrixSet) else MatrixSet(_input_mats(F))
    if not (S.symmetric and S.contains_identity):
        raise ValueError("select_place requires a symmetric set containing the identity")
    scored = []
    for v in [REAL] + [Place(p) for p in _candidate_primes(S.matrices)]:
        est = minimal_norm_estimate(S, v, prec, budget)
        score = as_interval(est.value, prec).log(prec)
        if score.lo > 0:
            scored.append((v, score))
    scored.sort(key=lambda t: (-float(t[1].mid), 0 if t[0].is_real else t[0].prime))
    return scored


# --- proximal word -----------------------------------------------------------------------

def _float_moduli(m: la.Matrix, v: Place) -> list[float]:
    """Eigenvalue moduli at v, descending, from the exact characteristic polynomial."""
    cp = la.charpoly(m)
    if v.is_real:
        # charpoly coefficients are in ascending degree; numpy wants descending
        return sorted((float(abs(r)) for r in np.roots([float(c) for c in reversed(cp)])), reverse=True)
    from .places import newton_root_valuations
    vals = newton_root_valuations(cp, v.prime).as_multiset()
    return sorted((float(v.prime) ** float(-val) for val, k in vals.items() for _ in range(k)), reverse=True)


def _enumerate_words(ws: Workspace, max_len: int, budget: int):
    """Distinct framed matrices with their shortest words, breadth first, identity skipped."""
    S, letters = ws.closure_set()
    seen = {la.identity(ws.dim)}
    try:
        for q, level in product_levels(S, max_len, budget):
            for m, w in level.items():
                if m in seen:
                    continue
                seen.add(m)
                word = tuple(letters[i] for i in w if letters[i] != 0)
                yield word, m
    except BudgetExceeded:
        return


@dataclass(frozen=True)
class ProximalWord:
    base: tuple               # word w with the best growth rate
    power: int                # m
    word: tuple               # w^m
    matrix: la.Matrix
    profile: Optional[ProximalProfile]
    almost: object = None     # AlmostProximalProfile when a is not proximal


def _rank_candidates(ws: Workspace, max_len: int, budget: int, eps0: Fraction) -> list:
    """Words with a modulus above 1, best growth rate first; the flag marks the (iii) gap."""
    key = ("ranking", max_len, budget, eps0)
    if key in ws._cache:
        return ws._cache[key]
    cands = []
    for word, m in _enumerate_words(ws, max_len, budget):
        if not word:
            continue
        mods = _float_moduli(m, ws.place)
        top, second = mods[0], mods[1]
        if top <= 1 + 1e-12:
            continue
        rate = math.log(top) / len(word)
        gap = second < top * (1 - 1e-9) and \
            (math.log(top) - math.log(second)) / float(eps0) > math.log(top) * (1 + 1e-9)
        cands.append((-round(rate, 10), len(word), word, m, gap))
    cands.sort(key=lambda t: t[:3])
    ws._cache[key] = cands
    return cands


def find_proximal_word(F, v: Place, max_len: Optional[int] = None,
                       consts: Optional[PingPongConstants] = None, prec: int = DEFAULT_PREC,
                       workspace: Optional[Workspace] = None, skip: int = 0,
                       budget: int = 20_000) -> ProximalWord:
    """Best growth-rate word (proximal ones first), raised to m with Lambda(a) > ||F||^T1."""
    consts = consts or PingPongConstants()
    ws = workspace or make_workspace(F, v, consts, prec)
    d = ws.dim
    max_len = max_len or min(d * d, consts.k1)
    cands = _rank_candidates(ws, max_len, budget, consts.eps0)
    if not cands:
        raise NotFound("find_proximal_word", f"no word with an eigenvalue gap up to length {max_len}",
                       {"searched_depth": max_len})
    # proximal words with the (iii) gap first, then any proximal word, then the best word
    preferred = []
    for want_gap in (True, False):
        for c in cands:
            if c[4] == want_gap and proximal_profile(c[3], v, ws.prec) is not None:
                preferred.append(c)
                if len(preferred) > skip:
                    break
        if len(preferred) > skip:
            break
    if len(preferred) > skip:
        _, _, base, m0, _ = preferred[skip]
    elif skip == 0:
        _, _, base, m0, _ = cands[0]
    else:
        raise NotFound("find_proximal_word", "no further proximal candidates", {"skip": skip})
    top = as_interval(modulus_classes(m0, v, ws.prec)[0].modulus, ws.prec)
    target = _pow(ws.norm, consts.T1, ws.prec)
    power = 1
    # strict, with a relative margin so that boundary cases do not depend on rounding
    while not _pow(top, Fraction(power), ws.prec).lo > target.hi * Fraction(1000001, 1000000):
        power += 1
        if power > 10_000:
            raise NotFound("find_proximal_word", "power search exhausted")
    word = _pow_word(base, power)
    a = ws.word_matrix(word)
    prof = proximal_profile(a, v, ws.prec)
    almost = None
    if prof is None:
        almost = select_omega(a, v, consts.epsilon(d), ws.prec)
    return ProximalWord(base, power, word, a, prof, almost)


# --- escape search -----------------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    word: tuple
    matrix: la.Matrix
    depth: int


def escape_search(F, predicate: Callable[[tuple, la.Matrix], bool], max_len: int,
                  workspace: Optional[Workspace] = None, v: Place = REAL,
                  budget: int = 20_000, threads: int = 1) -> Witness:
    """Shortest word (breadth first, closure order) whose matrix satisfies predicate."""
    ws = workspace or make_workspace(F, v, PingPongConstants(), frame=la.identity(len(_input_mats(F)[0])),
                                     lift=1)
    batch = []

    def flush():
        if not batch:
            return None
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                results = list(ex.map(lambda wm: predicate(*wm), batch))
        else:
            results = [predicate(*wm) for wm in batch]
        for (w, m), ok in zip(batch, results):
            if ok:
                return Witness(w, m, len(w))
        batch.clear()
        return None

    for word, m in _enumerate_words(ws, max_len, budget):
        batch.append((word, m))
        if len(batch) >= max(1, 4 * threads):
            hit = flush()
            if hit:
                return hit
    hit = flush()
    if hit:
        return hit
    raise NotFound("escape_search", f"no witness up to length {max_len}", {"searched_depth": max_len})


# --- conditions --------------------------------------------------------------------------

@dataclass(frozen=True)
class _Sub:
    """Approximate admissible subspace: basis, annihilator and certified error (None: uncertified)."""
    name: str
    basis: tuple
    comp: tuple
    perp: tuple
    perp_err: Optional[Fraction]
    exact: bool                # W and W^c both exact


def _annihilator(basis, d) -> tuple:
    return tuple(la.annihilator([la.vec(b) for b in basis], d))


def _admissible(a: la.Matrix, v: Place, prec: int, pa: ProximalProfile,
                pai: Optional[ProximalProfile]) -> list[_Sub]:
    d = len(a)
    es = eigenstructure(a, v, prec)
    groups = es.groups
    k = len(groups)
    out = []
    for mask in range(1, (1 << k) - 1):
        idx = [i for i in range(k) if mask >> i & 1]
        rest = [i for i in range(k) if not mask >> i & 1]
        basis = [b for i in idx for b in groups[i].basis]
        comp = [b for i in rest for b in groups[i].basis]
        err: Optional[Fraction] = None
        perp = None
        if all(groups[i].exact for i in idx):
            err = Fraction(0)
        elif idx == [0]:
            basis = [pa.attracting]
            err = _form_err(pa.attracting_radius, v)
        elif rest == [0]:
            perp, err = (pa.repelling,), pa.repelling_radius
        elif pai is not None and idx == [k - 1]:
            basis = [pai.attracting]
            err = _form_err(pai.attracting_radius, v)
        elif pai is not None and rest == [k - 1]:
            perp, err = (pai.repelling,), pai.repelling_radius
        if perp is None:
            perp = _annihilator(basis, d)
        name = "+".join(f"E{i}" for i in idx)
        out.append(_Sub(name, tuple(map(la.vec, basis)), tuple(map(la.vec, comp)), tuple(perp), err,
                        all(g.exact for g in groups)))
    return out


def _dual_act(b: la.Matrix, f) -> tuple:
    return la.apply(la.transpose(b), la.vec(f))


def _project_form(g, sub: _Sub) -> tuple:
    """Form pi_W^T g: vanishes on W^c and agrees with g on W."""
    basis = list(sub.basis) + list(sub.comp)
    m = la.transpose(tuple(basis))
    minv = la.inverse(m)
    # coordinates c = minv u; pi_W u = sum_{i < dim W} c_i basis_i
    k = len(sub.basis)
    gW = [sum(g[j] * sub.basis[i][j] for j in range(len(g))) for i in range(k)]
    return tuple(sum(gW[i] * minv[i][j] for i in range(k)) for j in range(len(g)))


def _lip(m: la.Matrix, v: Place, prec: int) -> Fraction:
    return lipschitz_bound(m, v, prec).hi


def check_conditions(a: la.Matrix, b: la.Matrix, t: la.Matrix, v: Place, consts: PingPongConstants,
                     norm: Interval, prec: int = DEFAULT_PREC, which: str = "i-v") -> ConditionReport:
    """Certified enclosures for conditions (i)-(v) on framed matrices a, b, t.

    ``norm`` is the working norm scale ||F||_v.  ``which`` restricts to
    "i-iii", "iv" or "v" for the escape searches.
    """
    d = len(a)
    entries = []
    classes = modulus_classes(a, v, prec)
    top = as_interval(classes[0].modulus, prec)
    second = as_interval(classes[1].modulus, prec) if len(classes) > 1 else top
    pa = proximal_profile(a, v, prec)
    if which in ("i-v", "i-iii"):
        entries.append(Inequality("(i)", "Lambda(a) > lambda(a), top class simple",
                                  top if classes[0].multiplicity == 1 else Interval(0), second, ">"))
        C1 = Interval(place_constants(v, d)["C1"])
        entries.append(Inequality("(ii)", "||F|| > C1^(2d)", norm, C1 ** (2 * d), ">"))
        entries.append(Inequality("(iii)", "(Lambda/lambda)^(1/eps0) >= Lambda",
                                  _pow(top / second, 1 / consts.eps0, prec), top, ">="))
        entries.append(Inequality("(iii)", "Lambda >= ||F||^T1", top, _pow(norm, consts.T1, prec), ">="))
    if pa is None or which == "i-iii":
        return ConditionReport(tuple(entries))
    pai = proximal_profile(la.inverse(a), v, prec)
    subs = _admissible(a, v, prec, pa, pai)
    rhs0 = _pow(norm, -consts.T0, prec)
    f_a, s_a = pa.repelling, pa.repelling_radius
    binv = la.inverse(b)
    if which in ("i-v", "iv"):
        for sign, bb in ((1, b), (-1, binv)):
            g = _dual_act(bb, f_a)
            lipb = _lip(la.transpose(bb), v, prec)
            for sub in subs:
                raw = subspace_distance([g], list(sub.perp), v, prec)
                cert = sub.perp_err is not None
                err = lipb * s_a + (sub.perp_err or 0)
                entries.append(Inequality("(iv)", f"d(b^{sign:+d}^T f_a, W^perp), W={sub.name}",
                                          _widen(raw, err, v), rhs0, ">", cert))
    if which in ("i-v", "v"):
        tinv = la.inverse(t)
        for sign, tt, bb in ((1, t, b), (-1, tinv, binv)):
            # hyperplane W^c + (W ∩ bb^-1 H_a), with bb^-1 H_a = ker(bb^T f_a)
            g = _dual_act(bb, f_a)
            point = la.apply(tt, pa.attracting)
            lipt = _lip(tt, v, prec)
            for sub in subs:
                h, herr = _hyperplane_for(sub, g, pa, pai, v, len(subs))
                raw = dist_point_hyperplane(point, h, v, prec) if any(h) else Interval(0)
                err = lipt * pa.attracting_radius + (herr if herr is not None else 0)
                label = "t" if sign == 1 else "t^-1"
                entries.append(Inequality("(v)", f"d({label} V_a, W^c + W∩ker), W={sub.name}",
                                          _widen(raw, err, v), rhs0, ">=", herr is not None))
    return ConditionReport(tuple(entries))


def _hyperplane_for(sub: _Sub, g, pa: ProximalProfile, pai, v: Place, nsubs: int):
    """Normal form of W^c + (W ∩ ker g) and its certified error (None when uncertified)."""
    d = len(g)
    if d == 2 and not sub.exact:
        # W is a line: the hyperplane is W^c, i.e. H_a when W = V_a and V_a when W = H_a
        if sub.name == "E0":
            return pa.repelling, pa.repelling_radius
        return _annihilator([pa.attracting], 2)[0], _form_err(pa.attracting_radius, v)
    h = _project_form(g, sub)
    return h, (Fraction(0) if sub.exact else None)


def _condition_vi(c: la.Matrix, px: ProximalProfile, pxi: ProximalProfile, v: Place,
                  norm: Interval, consts: PingPongConstants, prec: int) -> list[Inequality]:
    rhs = _pow(norm, -consts.T2, prec)
    out = []
    cinv = la.inverse(c)
    points = (("V_x", px.attracting, px.attracting_radius), ("V_x^-1", pxi.attracting, pxi.attracting_radius))
    planes = (("H_x", px.repelling, px.repelling_radius), ("H_x^-1", pxi.repelling, pxi.repelling_radius))
    for sname, s in (("c", c), ("c^-1", cinv)):
        lip = _lip(s, v, prec)
        for pname, pt, r in points:
            img = la.apply(s, pt)
            for hname, form, sr in planes:
                raw = dist_point_hyperplane(img, form, v, prec)
                err = lip * r + _form_err(sr, v)
                out.append(Inequality("(vi)", f"d({sname} {pname}, {hname})", _widen(raw, err, v), rhs, ">="))
    return out


# --- very proximal element ---------------------------------------------------------------

@dataclass(frozen=True)
class VeryProximal:
    l0: int
    l1: int
    word: tuple
    matrix: la.Matrix
    profile: ProximalProfile
    inverse_profile: ProximalProfile
    entries: tuple


def _very_proximal_entries(x: la.Matrix, top_a: Interval, v: Place, consts: PingPongConstants, prec: int):
    px = proximal_profile(x, v, prec)
    pxi = proximal_profile(la.inverse(x), v, prec)
    if px is None or pxi is None:
        return px, pxi, None
    gain = _pow(top_a, consts.T3, prec)
    floor = _pow(top_a, -2 * consts.T3, prec)
    entries = []
    for name, p in (("x", px), ("x^-1", pxi)):
        ratio = as_interval(p.top, prec) / as_interval(p.second, prec)
        entries.append(Inequality("very-proximal", f"Lambda({name})/lambda({name}) >= Lambda(a)^T3",
                                  ratio.rounded(prec), gain, ">="))
        entries.append(Inequality("very-proximal", f"d(V_{name}, H_{name}) >= Lambda(a)^(-2 T3)",
                                  p.sep, floor, ">="))
    return px, pxi, tuple(entries)


def build_very_proximal(a: la.Matrix, b: la.Matrix, t: la.Matrix, v: Place, consts: PingPongConstants,
                        norm: Interval, prec: int = DEFAULT_PREC,
                        words: Optional[tuple] = None, threads: int = 1,
                        precheck: bool = True) -> VeryProximal:
    """Scan (l0, l1) in [0, l]^2 for x = a^l0 b a^-l1 t with x and x^-1 very proximal.

    With ``precheck`` the conditions (i), (iv) and (v) must hold first.
    """
    report = check_conditions(a, b, t, v, consts, norm, prec) if precheck else None
    if report is not None and not report.passed("(i)", "(iv)", "(v)"):
        raise ConditionError("build_very_proximal", "conditions do not hold",
                             {"failing": report.failing()})
    top_a = as_interval(modulus_classes(a, v, prec)[0].modulus, prec)
    ainv = la.inverse(a)
    pairs = sorted(((l0, l1) for l0 in range(consts.l + 1) for l1 in range(consts.l + 1)),
                   key=lambda p: (p[0] + p[1], -p[0]))

    def attempt(pair):
        l0, l1 = pair
        x = la.mul(la.mul(la.matpow(a, l0), b), la.mul(la.matpow(ainv, l1), t))
        if la.is_identity(x):
            return None, "identity"
        try:
            px, pxi, entries = _very_proximal_entries(x, top_a, v, consts, prec)
        except PrecisionEscalation:
            return None, "precision"
        if entries is None:
            return None, "not proximal"
        if all(e.holds for e in entries):
            return (x, px, pxi, entries), None
        return None, "; ".join(e.label for e in entries if not e.holds)

    diagnostics = {}
    step = max(1, threads)
    for k in range(0, len(pairs), step):
        chunk = pairs[k:k + step]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                results = list(ex.map(attempt, chunk))
        else:
            results = [attempt(p) for p in chunk]
        for (l0, l1), (res, why) in zip(chunk, results):
            if res is not None:
                x, px, pxi, entries = res
                word = None
                if words is not None:
                    wa, wb, wt = words
                    word = reduce_word(_pow_word(wa, l0) + tuple(wb) + _pow_word(wa, -l1) + tuple(wt))
                return VeryProximal(l0, l1, word, x, px, pxi, entries)
            diagnostics[f"{l0},{l1}"] = why
    raise PipelineError("build_very_proximal", "no (l0, l1) certified", diagnostics)


# --- the pair ----------------------------------------------------------------------------

BALL_NAMES = ("X+", "X-", "Y+", "Y-")


def _primitive(u) -> tuple:
    return tuple(Fraction(x) for x in la.primitive_integer(la.vec(u)))


def _choose_radius(centers, v: Place, prec: int) -> Fraction:
    dmin = min(fs_distance(centers[i], centers[j], v, prec).lo
               for i in range(4) for j in range(i + 1, 4))
    if dmin <= 0:
        raise PipelineError("build_pair", "ball centers coincide")
    if v.is_real:
        k = math.floor(math.log2(float(dmin) / 3))
        return Fraction(2) ** k if k < 0 else Fraction(1, 4)
    return dmin / v.prime


def pingpong_entries(X: la.Matrix, Y: la.Matrix, balls: dict, v: Place, prec: int) -> list[Inequality]:
    """The twelve containments and six disjointness margins of the four-ball ping-pong."""
    Xi, Yi = la.inverse(X), la.inverse(Y)
    plan = (("x^n", X, "X+", ("X+", "Y+", "Y-")), ("x^-n", Xi, "X-", ("X-", "Y+", "Y-")),
            ("y", Y, "Y+", ("Y+", "X+", "X-")), ("y^-1", Yi, "Y-", ("Y-", "X+", "X-")))
    out = []
    for name, g, tgt, sources in plan:
        for src in sources:
            ok, reach = maps_into(g, balls[src], balls[tgt], v, prec)
            lhs = reach if reach is not None else Interval(1)
            out.append(Inequality("ping-pong", f"{name}({src}) within {tgt}", lhs,
                                  Interval(balls[tgt].radius), "<"))
    for i in range(4):
        for j in range(i + 1, 4):
            b1, b2 = balls[BALL_NAMES[i]], balls[BALL_NAMES[j]]
            _, dist = balls_disjoint(b1, b2, v, prec)
            need = b1.radius + b2.radius if v.is_real else max(b1.radius, b2.radius)
            out.append(Inequality("ball-disjointness", f"{BALL_NAMES[i]} vs {BALL_NAMES[j]}",
                                  dist, Interval(need), ">"))
    return out


@dataclass(frozen=True)
class Pair:
    n: int
    X: la.Matrix
    Y: la.Matrix
    balls: dict
    entries: tuple
    condition_vi: tuple


def build_pair(x: la.Matrix, c: la.Matrix, v: Place, consts: PingPongConstants,
               norm: Optional[Interval] = None, prec: int = DEFAULT_PREC,
               profiles: Optional[tuple] = None) -> Pair:
    """Least n >= l2 such that x^n and c x^n c^-1 play ping-pong on four certified balls."""
    px, pxi = profiles or (proximal_profile(x, v, prec), proximal_profile(la.inverse(x), v, prec))
    if px is None or pxi is None:
        raise PipelineError("build_pair", "x is not very proximal")
    if norm is None:
        norm = as_interval(matrix_norm(x, v, prec), prec)
    vi = _condition_vi(c, px, pxi, v, norm, consts, prec)
    if not all(e.holds for e in vi):
        raise ConditionError("build_pair", "condition (vi) fails",
                             {"failing": [e.label for e in vi if not e.holds]})
    centers = [_primitive(px.attracting), _primitive(pxi.attracting),
               _primitive(la.apply(c, px.attracting)), _primitive(la.apply(c, pxi.attracting))]
    radius = _choose_radius(centers, v, prec)
    cinv = la.inverse(c)
    best = None
    for shrink in (1, 16, 256):
        r = radius / shrink
        balls = {name: Ball(cen, r) for name, cen in zip(BALL_NAMES, centers)}
        X = la.matpow(x, consts.l2)
        for n in range(consts.l2, consts.l2 + consts.n_budget):
            if n > consts.l2:
                X = la.mul(X, x)
            Y = la.mul(la.mul(c, X), cinv)
            entries = pingpong_entries(X, Y, balls, v, prec)
            if all(e.holds for e in entries):
                return Pair(n, X, Y, balls, tuple(entries), tuple(vi))
            worst = [e for e in entries if not e.holds]
            if best is None or len(worst) < len(best[1]):
                best = (n, worst)
    raise PipelineError("build_pair", "no exponent certified",
                        {"n": best[0], "failing": [e.label for e in best[1]]})


# --- certificates ------------------------------------------------------------------------

def _vec_json(u) -> list:
    return [fraction_str(Fraction(x)) for x in u]


def _mat_json(m) -> list:
    return [_vec_json(r) for r in m]


@dataclass(frozen=True)
class FreeGroupCertificate:
    place: Place
    precision: int
    dimension: int
    frame: la.Matrix
    lift: int
    constants: PingPongConstants
    words: dict                 # a, b, t, c, x, y as letter tuples
    powers: dict                # m, l0, l1, n
    enclosures: dict            # name -> Interval
    balls: dict                 # name -> Ball
    transcript: tuple           # Inequality entries
    notes: dict = field(default_factory=dict)

    @property
    def x_word(self) -> tuple:
        return self.words["x"]

    @property
    def y_word(self) -> tuple:
        return self.words["y"]

    @property
    def generator_words(self) -> tuple:
        """Words of the certified free pair x^n and y = c x^n c^-1."""
        return _pow_word(self.words["x"], self.powers["n"]), self.words["y"]

    def word_lengths(self) -> dict:
        xn, y = self.generator_words
        return {"x": len(self.words["x"]), "x^n": len(xn), "y": len(y)}

    def to_json(self) -> dict:
        return {
            "version": CERT_VERSION,
            "field": "Q",
            "dimension": self.dimension,
            "place": str(self.place),
            "precision": self.precision,
            "frame": _mat_json(self.frame),
            "lift": self.lift,
            "constants": self.constants.to_json(),
            "words": {k: list(v) for k, v in self.words.items()},
            "powers": dict(self.powers),
            "enclosures": {k: iv.to_json() for k, iv in self.enclosures.items()},
            "balls": {k: {"center": _vec_json(b.center), "radius": fraction_str(b.radius)}
                      for k, b in self.balls.items()},
            "transcript": [e.to_json() for e in self.transcript],
            "notes": dict(self.notes),
        }

    @classmethod
    def from_json(cls, data: dict) -> "FreeGroupCertificate":
        try:
            if data.get("version") != CERT_VERSION:
                raise MalformedCertificate(f"unsupported certificate version {data.get('version')!r}")
            if data.get("field") != "Q":
                raise MalformedCertificate("only the rational field is supported")
            d = int(data["dimension"])
            frame = la.mat([[parse_fraction(x) for x in r] for r in data["frame"]])
            if len(frame) != d or any(len(r) != d for r in frame):
                raise MalformedCertificate("frame has the wrong shape")
            words = {}
            for k in ("a", "b", "t", "c", "x", "y"):
                w = data["words"][k]
                if not all(isinstance(x, int) and not isinstance(x, bool) and x != 0 for x in w):
                    raise MalformedCertificate(f"word {k} has invalid letters")
                words[k] = tuple(w)
            powers = {k: int(data["powers"][k]) for k in ("m", "l0", "l1", "n")}
            balls = {}
            for k in BALL_NAMES:
                b = data["balls"][k]
                center = tuple(parse_fraction(x) for x in b["center"])
                if len(center) != d or not any(center):
                    raise MalformedCertificate(f"ball {k} has an invalid center")
                balls[k] = Ball(center, parse_fraction(b["radius"]))
            encl = {k: Interval.from_json(v) for k, v in data["enclosures"].items()}
            transcript = tuple(
                Inequality(e["condition"], e["label"], Interval.from_json(e["lhs"]),
                           Interval.from_json(e["rhs"]), e["relation"], bool(e.get("certified", True)))
                for e in data["transcript"])
            return cls(Place.parse(data["place"]), int(data["precision"]), d, frame, int(data["lift"]),
                       PingPongConstants.from_json(data["constants"]), words, powers, encl, balls,
                       transcript, dict(data.get("notes", {})))
        except MalformedCertificate:
            raise
        except (KeyError, TypeError, ValueError, ZeroDivisionError, AttributeError) as exc:
            raise MalformedCertificate(f"malformed certificate: {exc}") from exc


def _enclosures(x: la.Matrix, px: ProximalProfile, pxi: ProximalProfile, norm: Interval,
                v: Place, prec: int) -> dict:
    return {
        "Lambda_x": as_interval(px.top, prec), "lambda_x": as_interval(px.second, prec),
        "Lambda_x_inv": as_interval(pxi.top, prec), "lambda_x_inv": as_interval(pxi.second, prec),
        "norm_x": as_interval(matrix_norm(x, v, prec), prec),
        "sep_x": px.sep, "sep_x_inv": pxi.sep, "norm_F": norm,
    }


def _evaluate(ws: Workspace, words: dict, powers: dict, balls: dict):
    """Recompute every transcript entry and enclosure for the given words and balls.

    Order: ping-pong, very-proximal, (vi), then (i)-(v).  Shared by the
    emitter and the verifier, so a round trip reproduces the data exactly.
    """
    v, prec, consts = ws.place, ws.prec, ws.consts
    x = ws.word_matrix(words["x"])
    c = ws.word_matrix(words["c"])
    X = la.matpow(x, powers["n"])
    Y = ws.word_matrix(words["y"])
    entries = list(pingpong_entries(X, Y, balls, v, prec))
    a = ws.word_matrix(words["a"])
    top_a = as_interval(modulus_classes(a, v, prec)[0].modulus, prec)
    px, pxi, vp = _very_proximal_entries(x, top_a, v, consts, prec)
    if vp is None:
        raise PipelineError("verify", "x or x^-1 is not proximal")
    entries.extend(vp)
    entries.extend(_condition_vi(c, px, pxi, v, ws.norm, consts, prec))
    b, t = ws.word_matrix(words["b"]), ws.word_matrix(words["t"])
    entries.extend(check_conditions(a, b, t, v, consts, ws.norm, prec).entries)
    return tuple(entries), _enclosures(x, px, pxi, ws.norm, v, prec)


def _structural_problems(words: dict, powers: dict) -> list[str]:
    problems = []
    if powers["n"] < 1 or powers["m"] < 1 or powers["l0"] < 0 or powers["l1"] < 0:
        problems.append("exponents out of range")
        return problems
    x = reduce_word(_pow_word(words["a"], powers["l0"]) + words["b"]
                    + _pow_word(words["a"], -powers["l1"]) + words["t"])
    if x != reduce_word(words["x"]):
        problems.append("x is not a^l0 b a^-l1 t")
    y = reduce_word(words["c"] + _pow_word(words["x"], powers["n"]) + inverse_word(words["c"]))
    if y != reduce_word(words["y"]):
        problems.append("y is not c x^n c^-1")
    return problems


# --- the pipeline ------------------------------------------------------------------------

@dataclass(frozen=True)
class CertifyOptions:
    constants: PingPongConstants = field(default_factory=PingPongConstants)
    place: Optional[Place] = None            # None: automatic selection
    precision: int = DEFAULT_PREC
    max_word_len: Optional[int] = None       # proximal word search depth
    budget_words: int = 20_000
    threads: int = 1
    solvability_budget: int = 64


@dataclass(frozen=True)
class CertifyResult:
    status: str                               # "certified" | "solvable" | "failed"
    certificate: Optional[FreeGroupCertificate] = None
    verdict: object = None
    failures: tuple = ()                      # (place, stage, message, diagnostics)

    @property
    def ok(self) -> bool:
        return self.status == "certified"


def _certify_at(F, v: Place, opts: CertifyOptions) -> FreeGroupCertificate:
    consts = opts.constants
    ws = make_workspace(F, v, consts, opts.precision, budget=opts.budget_words)
    prec = ws.prec
    last_error = None
    for skip in range(consts.k4):
        try:
            pw = find_proximal_word(F, v, opts.max_word_len, consts, prec, workspace=ws, skip=skip,
                                    budget=opts.budget_words)
        except NotFound as exc:
            last_error = exc
            break
        a = pw.matrix
        if pw.profile is None:
            last_error = ConditionError("find_proximal_word", "a is not proximal", {"word": pw.word})
            continue
        head = check_conditions(a, a, a, v, consts, ws.norm, prec, which="i-iii")
        if not head.passed("(i)", "(ii)", "(iii)"):
            last_error = ConditionError("check_conditions", "conditions (i)-(iii) fail",
                                        {"failing": head.failing(), "word": pw.word})
            continue
        try:
            return _finish(ws, pw, opts)
        except PipelineError as exc:
            last_error = exc
            continue
    raise last_error or PipelineError("certify", "no candidate succeeded")


def _finish(ws: Workspace, pw: ProximalWord, opts: CertifyOptions) -> FreeGroupCertificate:
    consts, v, prec, d = ws.consts, ws.place, ws.prec, ws.dim
    a = pw.matrix
    ident = la.identity(d)

    def pred_b(word, b):
        rep = check_conditions(a, b, ident, v, consts, ws.norm, prec, which="iv")
        return rep.passed("(iv)")

    b = escape_search(None, pred_b, consts.k2, workspace=ws, budget=opts.budget_words, threads=opts.threads)

    def pred_t(word, t):
        rep = check_conditions(a, b.matrix, t, v, consts, ws.norm, prec, which="v")
        return rep.passed("(v)")

    t = escape_search(None, pred_t, consts.k3, workspace=ws, budget=opts.budget_words, threads=opts.threads)
    vp = build_very_proximal(a, b.matrix, t.matrix, v, consts, ws.norm, prec,
                             words=(pw.word, b.word, t.word), threads=opts.threads)
    profiles = (vp.profile, vp.inverse_profile)

    def pred_c(word, c):
        vi = _condition_vi(c, vp.profile, vp.inverse_profile, v, ws.norm, consts, prec)
        return all(e.holds for e in vi)

    c = escape_search(None, pred_c, consts.k5, workspace=ws, budget=opts.budget_words, threads=opts.threads)
    pair = build_pair(vp.matrix, c.matrix, v, consts, ws.norm, prec, profiles)
    words = {"a": pw.word, "b": b.word, "t": t.word, "c": c.word, "x": vp.word,
             "y": reduce_word(c.word + _pow_word(vp.word, pair.n) + inverse_word(c.word))}
    powers = {"m": pw.power, "l0": vp.l0, "l1": vp.l1, "n": pair.n}
    transcript, encl = _evaluate(ws, words, powers, pair.balls)
    notes = {"omega_branch": _omega_note(a, v, consts, prec)}
    cert = FreeGroupCertificate(v, prec, d, ws.frame, ws.lift, consts, words, powers, encl,
                                pair.balls, transcript, notes)
    bad = [e for e in transcript if e.condition in ("ping-pong", "ball-disjointness", "very-proximal", "(vi)")
           and not e.holds]
    if bad:
        raise PipelineError("build_pair", "assembled certificate does not verify",
                            {"failing": [e.label for e in bad]})
    return cert


def _omega_note(a: la.Matrix, v: Place, consts: PingPongConstants, prec: int) -> str:
    """The a^-1 side: the cursor degenerates when a^-1 is proximal."""
    ainv = la.inverse(a)
    try:
        prof = select_omega(ainv, v, consts.epsilon(len(a)), prec)
    except NoCursor:
        return "no cursor"
    except ValueError as exc:
        return f"cursor not resolved: {exc}"
    if prof.is_proximal:
        return "a^-1 proximal: cursor branch skipped"
    return f"a^-1 almost proximal: cursor block dimension {prof.dim}"


def certify_free(F, options: Optional[CertifyOptions] = None) -> CertifyResult:
    """Solvability precheck, then place selection and the ping-pong construction."""
    opts = options or CertifyOptions()
    S = F if isinstance(F, MatrixSet) else MatrixSet(_input_mats(F))
    closed = S.closure()
    verdict = solvability_verdict(closed, budget=opts.solvability_budget)
    if verdict.status == CERT_SOLVABLE:
        return CertifyResult("solvable", verdict=verdict)
    if opts.place is not None:
        places = [opts.place]
    else:
        places = [v for v, _ in select_place(closed, opts.precision, opts.budget_words)]
    if not places:
        return CertifyResult("failed", verdict=verdict,
                             failures=((None, "select_place", "no place with an eigenvalue gap", {}),))
    failures = []
    for v in places:
        prec = opts.precision
        for _ in range(3):
            try:
                cert = _certify_at(S, v, replace(opts, precision=prec))
                return CertifyResult("certified", certificate=cert, verdict=verdict)
            except PrecisionEscalation as exc:
                failures.append((str(v), "precision", str(exc), {"precision": prec}))
                prec *= 2
            except PipelineError as exc:
                failures.append((str(v), exc.stage, str(exc), exc.diagnostics))
                break
    return CertifyResult("failed", verdict=verdict, failures=tuple(failures))


# --- verification ------------------------------------------------------------------------

def verify_certificate(cert: FreeGroupCertificate | dict, F, precision: Optional[int] = None) -> bool:
    """Recompute every transcript entry and enclosure from F and the certificate fields.

    At the certificate's own precision the recomputed data must coincide with
    the recorded data.  At another precision each recorded enclosure must
    overlap its recomputation.  In both cases the ping-pong containments,
    disjointness margins, very-proximality bounds and condition (vi) must hold.
    Raises MalformedCertificate for structurally invalid input.
    """
    if isinstance(cert, dict):
        cert = FreeGroupCertificate.from_json(cert)
    inputs = _input_mats(F)
    d = len(inputs[0])
    if cert.dimension != d:
        raise MalformedCertificate("dimension mismatch")
    for w in cert.words.values():
        if any(abs(x) > len(inputs) for x in w):
            raise MalformedCertificate("letter out of range")
    if _structural_problems(cert.words, cert.powers):
        return False
    prec = precision or cert.precision
    same = prec == cert.precision
    try:
        ws = make_workspace(inputs, cert.place, cert.constants, prec, frame=cert.frame, lift=cert.lift)
    except (la.SingularMatrixError, ZeroDivisionError) as exc:
        raise MalformedCertificate(str(exc)) from exc
    if any(la.is_identity(ws.word_matrix(w)) for w in cert.generator_words):
        return False
    try:
        transcript, encl = _evaluate(ws, cert.words, cert.powers, cert.balls)
    except (PipelineError, PrecisionEscalation):
        return False
    if len(transcript) != len(cert.transcript) or set(encl) != set(cert.enclosures):
        return False
    for new, old in zip(transcript, cert.transcript):
        if (new.condition, new.label, new.relation) != (old.condition, old.label, old.relation):
            return False
        if same:
            if new.to_json() != old.to_json():
                return False
        elif new.certified and not (new.lhs.overlaps(old.lhs) and new.rhs.overlaps(old.rhs)):
            return False
        if new.condition in ("ping-pong", "ball-disjointness", "very-proximal", "(vi)") and not new.holds:
            return False
    for k, iv in encl.items():
        old = cert.enclosures[k]
        if same and (iv.lo, iv.hi) != (old.lo, old.hi):
            return False
        if not same and not iv.overlaps(old):
            return False
    return True


def word_in_inputs(F, word: Sequence[int]) -> la.Matrix:
    """Evaluate a word of signed 1-based letters over the input matrices (no frame)."""
    inputs = _input_mats(F)
    out = la.identity(len(inputs[0]))
    for x in word:
        if x == 0 or abs(x) > len(inputs):
            raise MalformedCertificate(f"letter {x} out of range")
        g = inputs[abs(x) - 1]
        out = la.mul(out, g if x > 0 else la.inverse(g))
    return out


def certified_pair(cert: FreeGroupCertificate | dict, F) -> tuple:
    """The certified free generators x^n and y as matrices in the input coordinates."""
    if isinstance(cert, dict):
        cert = FreeGroupCertificate.from_json(cert)
    return tuple(word_in_inputs(F, w) for w in cert.generator_words)
