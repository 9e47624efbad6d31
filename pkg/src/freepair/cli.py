"""Command-line front end: certify, verify and the exploratory reports.

Exit codes: 0 success or PASS, 1 verified negative (solvable verdict, FAIL),
2 inconclusive (budget or precision ran out), 3 input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import platform
import sys
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import kernels
from . import linalg as la
from .heights import (minimal_height_estimate, normalized_height_estimate, set_height,
                      _primes_of)
from .intervals import DEFAULT_PREC, Interval, fraction_str, parse_fraction
from .modp import (BadPrime, ball_growth, count_relations, girth, reduce_mod_p)
from .pingpong import (CertifyOptions, FreeGroupCertificate, MalformedCertificate,
                       PingPongConstants, certified_pair, certify_free, verify_certificate)
from .places import REAL, PadicScalar, Place, PlaceError
from .spectral import (BudgetExceeded, MatrixSet, PrecisionEscalation, lambda_max,
                       minimal_norm_estimate, modulus_classes, proximal_profile, set_norm)

log = logging.getLogger("freepair")

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INCONCLUSIVE = 2
EXIT_INPUT = 3

COMMANDS = ("certify", "verify", "heights", "spectral", "girth", "growth", "cogrowth")


class InputError(ValueError):
    """Unusable input file or option."""


class AutoSymmetrizedWarning(UserWarning):
    """A symmetric set was requested but inverses were missing and got adjoined."""


# --- input ---------------------------------------------------------------------------

def _entry(x):
    if isinstance(x, bool) or not isinstance(x, (int, str)):
        raise InputError(f"matrix entries must be integers or 'num/den' strings, got {x!r}")
    try:
        return parse_fraction(x)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad rational {x!r}: {exc}") from exc


def parse_document(data) -> MatrixSet:
    if not isinstance(data, dict) or "matrices" not in data:
        raise InputError("expected a JSON object with a 'matrices' field")
    mats = data["matrices"]
    if not isinstance(mats, list) or not mats:
        raise InputError("'matrices' must be a nonempty list")
    d = data.get("dimension", None)
    if d is None:
        d = len(mats[0]) if isinstance(mats[0], list) else 0
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise InputError(f"bad dimension {d!r}")
    parsed = []
    for k, m in enumerate(mats):
        if not isinstance(m, list) or len(m) != d or any(not isinstance(r, list) or len(r) != d for r in m):
            raise InputError(f"matrix {k} is not {d}x{d}")
        parsed.append(tuple(tuple(_entry(x) for x in r) for r in m))
    symmetric = data.get("symmetric", False)
    if not isinstance(symmetric, bool):
        raise InputError("'symmetric' must be true or false")
    try:
        S = MatrixSet(tuple(parsed))
    except la.SingularMatrixError as exc:
        raise InputError(str(exc)) from exc
    if symmetric:
        if not S.symmetric:
            warnings.warn("inverses missing from a symmetric set; adjoining them",
                          AutoSymmetrizedWarning, stacklevel=3)
        S = S.closure()
    return S


def parse_input(source) -> MatrixSet:
    """Read {dimension, matrices, symmetric} from a path or an open file."""
    try:
        if hasattr(source, "read"):
            data = json.load(source)
        else:
            with open(source, encoding="utf-8") as fh:
                data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {source}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc
    return parse_document(data)


def load_constants(text: Optional[str]) -> PingPongConstants:
    """Overrides given inline as JSON or as a path to a JSON file."""
    if not text:
        return PingPongConstants()
    try:
        if text.lstrip().startswith("{"):
            data = json.loads(text)
        else:
            data = json.loads(Path(text).read_text(encoding="utf-8"))
        return PingPongConstants.from_json(data)
    except (OSError, json.JSONDecodeError, ValueError, TypeError, ZeroDivisionError) as exc:
        raise InputError(f"bad constants: {exc}") from exc


def parse_place(text: Optional[str]) -> Optional[Place]:
    if text is None or text.strip().lower() == "auto":
        return None
    try:
        return Place.parse(text)
    except (PlaceError, ValueError) as exc:
        raise InputError(str(exc)) from exc


# --- jobs ----------------------------------------------------------------------------

@dataclass
class JobSpec:
    command: str
    input: str
    place: Optional[str] = None
    precision: Optional[int] = None       # None: library default (verify: the certificate's)
    max_word_len: Optional[int] = None
    constants: Optional[str] = None
    budget_words: int = 20_000
    threads: int = 1
    output: Optional[str] = None
    certificate: Optional[str] = None     # verify, cogrowth
    primes: tuple = ()                    # girth
    n: Optional[int] = None               # heights, growth, cogrowth
    p: Optional[int] = None               # growth over F_p
    argv: list = field(default_factory=list)

    @property
    def prec(self) -> int:
        return self.precision or DEFAULT_PREC

    def validate(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        for name in ("precision", "budget_words", "threads"):
            if getattr(self, name) is not None and getattr(self, name) < 1:
                raise InputError(f"--{name.replace('_', '-')} must be positive")
        if self.max_word_len is not None and self.max_word_len < 1:
            raise InputError("--max-word-len must be positive")
        if self.command == "certify" and not self.output:
            raise InputError("certify needs --output")
        if self.command == "verify" and not self.certificate:
            raise InputError("verify needs a certificate file")
        if self.command == "girth" and not self.primes:
            raise InputError("girth needs --primes")
        if self.command in ("growth", "cogrowth") and self.n is None:
            raise InputError(f"{self.command} needs --n")
        if self.n is not None and self.n < 1:
            raise InputError("--n must be positive")


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _emit(job: JobSpec, text: str):
    if job.output:
        Path(job.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _scalar(x):
    if isinstance(x, PadicScalar):
        val = None if x.valuation is None else fraction_str(x.valuation)
        return {"p": x.p, "valuation": val}
    if isinstance(x, Interval):
        return {"enclosure": x.to_json(), "approx": float(x)}
    return {"exact": fraction_str(x)}


def _vec(u):
    return [fraction_str(x) for x in u]


def transcript_text(cert: FreeGroupCertificate) -> str:
    lengths = cert.word_lengths()
    lines = [
        f"place {cert.place}  precision {cert.precision} bits  dimension {cert.dimension}",
        f"lift k0 = {cert.lift}",
        "powers " + ", ".join(f"{k}={v}" for k, v in cert.powers.items()),
        "word lengths " + ", ".join(f"{k}={v}" for k, v in lengths.items()),
    ]
    for name in ("a", "b", "t", "c", "x", "y"):
        lines.append(f"{name} = {' '.join(str(x) for x in cert.words[name])}")
    lines.append("")
    width = max(len(e.label) for e in cert.transcript)
    for e in cert.transcript:
        tag = "" if e.certified else "  (advisory)"
        lines.append(f"{e.condition:<18} {e.label:<{width}}  {e.status:<9} "
                     f"{float(e.lhs):.6g} {e.relation} {float(e.rhs):.6g}{tag}")
    for k, v in cert.notes.items():
        lines.append(f"note {k}: {v}")
    return "\n".join(lines) + "\n"


def _pair_from_input(S: MatrixSet) -> tuple:
    """First two non-identity inputs, skipping inverses of earlier ones."""
    ident = la.identity(S.dim)
    picked = []
    for m in S.matrices:
        if m == ident or any(m == q or m == la.inverse(q) for q in picked):
            continue
        picked.append(m)
        if len(picked) == 2:
            return tuple(picked)
    raise InputError("need two distinct non-identity generators")


def _cmd_certify(job: JobSpec, S: MatrixSet) -> int:
    opts = CertifyOptions(constants=load_constants(job.constants), place=parse_place(job.place),
                          precision=job.prec, max_word_len=job.max_word_len,
                          budget_words=job.budget_words, threads=job.threads)
    res = certify_free(S, opts)
    out = Path(job.output)
    if res.ok:
        cert = res.certificate
        out.write_text(_dump_json(cert.to_json()), encoding="utf-8")
        out.with_suffix(".transcript.txt").write_text(transcript_text(cert), encoding="utf-8")
        print(f"CERTIFIED free pair at {cert.place}; lengths {cert.word_lengths()}")
        return EXIT_OK
    if res.status == "solvable":
        out.write_text(_dump_json(res.verdict.to_json()), encoding="utf-8")
        print(f"SOLVABLE: {res.verdict.status}")
        return EXIT_NEGATIVE
    report = {"status": "failed",
              "failures": [{"place": p, "stage": s, "message": m, "diagnostics": d}
                           for p, s, m, d in res.failures]}
    out.write_text(json.dumps(report, indent=1, sort_keys=True, default=str) + "\n", encoding="utf-8")
    print("INCONCLUSIVE: no certificate found")
    return EXIT_INCONCLUSIVE


def _cmd_verify(job: JobSpec, S: MatrixSet) -> int:
    try:
        data = json.loads(Path(job.certificate).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read certificate: {exc}") from exc
    try:
        ok = verify_certificate(data, S, job.precision)
    except MalformedCertificate as exc:
        print(f"FAIL (malformed certificate: {exc})")
        return EXIT_NEGATIVE
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_NEGATIVE


def _with_identity(S: MatrixSet) -> MatrixSet:
    return S if S.contains_identity else S.closure()


def _cmd_heights(job: JobSpec, S: MatrixSet) -> int:
    T = _with_identity(S)
    out = {
        "set_height": set_height(S, job.prec).to_json(),
        "minimal_height": minimal_height_estimate(T, job.prec, job.budget_words).to_json(),
        "normalized": [{"n": s.n, "sequence": s.sequence.to_json(), "placewise": s.placewise.to_json()}
                       for s in normalized_height_estimate(T, job.n or 2, job.prec,
                                                           10 * job.budget_words)],
        "closure_used": T is not S,
    }
    _emit(job, _dump_json(out))
    return EXIT_OK


def _profile_json(a, v: Place, prec: int):
    prof = proximal_profile(a, v, prec)
    if prof is None:
        return None
    return {"top": _scalar(prof.top), "second": _scalar(prof.second),
            "attracting": _vec(prof.attracting), "attracting_radius": fraction_str(prof.attracting_radius),
            "repelling": _vec(prof.repelling), "repelling_radius": fraction_str(prof.repelling_radius),
            "separation": prof.sep.to_json(), "exact": prof.exact}


def _cmd_spectral(job: JobSpec, S: MatrixSet) -> int:
    v = parse_place(job.place)
    if v is not None:
        places = [v]
    else:
        places = [REAL] + [Place(p) for p in _primes_of([x for m in S for r in m for x in r], numerators=True)]
    prec = job.prec
    T = _with_identity(S)
    out = {"places": []}
    for v in places:
        members = []
        for k, a in enumerate(S.matrices):
            classes = modulus_classes(a, v, prec)
            members.append({
                "index": k,
                "moduli": [{"modulus": _scalar(c.modulus), "multiplicity": c.multiplicity} for c in classes],
                "proximal": classes[0].multiplicity == 1,
                "profile": _profile_json(a, v, prec) if classes[0].multiplicity == 1 else None,
            })
        est = minimal_norm_estimate(T, v, prec, job.budget_words)
        out["places"].append({
            "place": str(v),
            "set_norm": _scalar(set_norm(S, v, prec)),
            "lambda_max": _scalar(lambda_max(S, v, prec)),
            "minimal_norm": {"value": _scalar(est.value), "tag": est.tag, "q": est.q},
            "members": members,
        })
    _emit(job, _dump_json(out))
    return EXIT_OK


def _cmd_girth(job: JobSpec, S: MatrixSet) -> int:
    x, y = _pair_from_input(S)
    rows = []
    for p in job.primes:
        try:
            a, b = reduce_mod_p([x, y], p)
        except BadPrime as exc:
            raise InputError(f"p = {p}: {exc}") from exc
        g = girth(a, b, job.max_word_len or 64, 100 * job.budget_words)
        rows.append([p, "" if g.girth is None else g.girth, g.lower_bound,
                     " ".join(str(t) for t in g.relation)])
    _emit(job, _csv(["p", "girth", "lower_bound", "relation"], rows))
    return EXIT_OK


def _cmd_growth(job: JobSpec, S: MatrixSet) -> int:
    sizes = ball_growth(S, job.n, job.p, 100 * job.budget_words)
    _emit(job, _csv(["n", "size"], [[k + 1, s] for k, s in enumerate(sizes)]))
    return EXIT_OK


def _cmd_cogrowth(job: JobSpec, S: MatrixSet) -> int:
    if job.certificate:
        try:
            data = json.loads(Path(job.certificate).read_text(encoding="utf-8"))
            x, y = certified_pair(data, S)
        except (OSError, json.JSONDecodeError, MalformedCertificate) as exc:
            raise InputError(f"cannot use certificate: {exc}") from exc
    else:
        x, y = _pair_from_input(S)
    rc = count_relations(x, y, job.n, 100 * job.budget_words)
    rows, rel, words = [], 0, 0
    for k in range(1, job.n + 1):
        rel += rc.by_length[k - 1]
        words += 4 * 3 ** (k - 1)
        rows.append([k, rel, words, str(Fraction(rel, words))])
    _emit(job, _csv(["n", "relations", "words", "proportion"], rows))
    return EXIT_OK


HANDLERS = {"certify": _cmd_certify, "verify": _cmd_verify, "heights": _cmd_heights,
            "spectral": _cmd_spectral, "girth": _cmd_girth, "growth": _cmd_growth,
            "cogrowth": _cmd_cogrowth}


def _write_sidecar(job: JobSpec, code: int, elapsed: float):
    if not job.output:
        return
    meta = {"command": job.command, "argv": job.argv, "exit_code": code,
            "elapsed_seconds": round(elapsed, 3), "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "python": platform.python_version(), "kernels": kernels.BACKEND}
    Path(job.output + ".meta.json").write_text(_dump_json(meta), encoding="utf-8")


def run(job: JobSpec) -> int:
    """Execute one job; artifacts go to job.output (stdout when unset), run metadata to a sidecar."""
    start = time.monotonic()
    try:
        job.validate()
        S = parse_input(job.input)
        code = HANDLERS[job.command](job, S)
    except (InputError, BadPrime, PlaceError, MalformedCertificate) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    except (BudgetExceeded, PrecisionEscalation) as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        code = EXIT_INCONCLUSIVE
    _write_sidecar(job, code, time.monotonic() - start)
    return code


# --- argument parsing ----------------------------------------------------------------

def _primes(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad prime list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="freepair", description="Free subgroup certificates for rational matrix sets.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("input", help="matrix set JSON: {dimension, matrices, symmetric}")
        p.add_argument("--place", default=None, help="real | p:<prime> | auto")
        p.add_argument("--precision", type=int, default=None, help="working precision in bits")
        p.add_argument("--max-word-len", type=int, default=None)
        p.add_argument("--constants", default=None, help="constant overrides as JSON text or file")
        p.add_argument("--budget-words", type=int, default=20_000)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--output", default=None)
        return p

    common(sub.add_parser("certify", help="search for a certified free pair"))
    p = common(sub.add_parser("verify", help="recheck a certificate against a matrix set"))
    p.add_argument("certificate")
    p = common(sub.add_parser("heights", help="set, minimal and normalized heights (JSON)"))
    p.add_argument("--n", type=int, default=None, help="largest power for the normalized samples")
    common(sub.add_parser("spectral", help="eigenvalue moduli and proximal data (JSON)"))
    p = common(sub.add_parser("girth", help="girth of the first two generators mod p (CSV)"))
    p.add_argument("--primes", type=_primes, required=True, help="comma separated primes")
    p = common(sub.add_parser("growth", help="|F^n| for n <= N (CSV)"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, default=None, help="count over F_p instead of Q")
    p = common(sub.add_parser("cogrowth", help="relation counts of a pair (CSV)"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--certificate", default=None, help="use the certified pair instead of the inputs")
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    warnings.formatwarning = lambda msg, cat, *rest, **kw: f"warning: {msg}\n"
    job = JobSpec(command=args.command, input=args.input, place=args.place, precision=args.precision,
                  max_word_len=args.max_word_len, constants=args.constants,
                  budget_words=args.budget_words, threads=args.threads, output=args.output,
                  certificate=getattr(args, "certificate", None), primes=getattr(args, "primes", ()),
                  n=getattr(args, "n", None), p=getattr(args, "p", None), argv=argv)
    return run(job)


if __name__ == "__main__":
    sys.exit(main())
