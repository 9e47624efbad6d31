"""Time the compiled kernels against the pure-Python fallback on Sanov data.

    python3 benchmarks/bench_kernels.py [--n 8] [--repeat 3]

Both backends are run on identical inputs; their outputs must agree.
"""
from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from freepair import _kernels_py
from freepair.modp import INVERSE_LETTER, _letters, reduce_mod_p

try:
    from freepair import _ckernels
except ImportError:
    _ckernels = None

SANOV = [((1, 2), (0, 1)), ((1, 0), (2, 1))]
PRIMES = (2147483647, 2147483629)


def _cases(n: int, p: int):
    """(name, callable taking a backend module) pairs."""
    per_prime = []
    for q in PRIMES:
        a, b = reduce_mod_p(SANOV, q)
        per_prime.append(_letters(a, b))
    scan_gens = np.array(per_prime, dtype=np.int64)
    scan_primes = np.array(PRIMES, dtype=np.int64)

    a, b = reduce_mod_p(SANOV, p)
    gens = _letters(a, b)
    # a BFS frontier: all reduced words of length n - 3 mod p
    frontier = np.eye(2, dtype=np.int64)[None]
    last = np.array([-1], dtype=np.int64)
    for _ in range(max(1, n - 3)):
        frontier, _, last = _kernels_py.expand_layer(frontier, last, gens, INVERSE_LETTER, p)
    g = gens[0]

    return [
        (f"word_identity_scan n={n}", lambda m: m.word_identity_scan(scan_gens, INVERSE_LETTER, scan_primes, n, 100)),
        (f"expand_layer |frontier|={len(frontier)}", lambda m: m.expand_layer(frontier, last, gens, INVERSE_LETTER, p)),
        (f"left_multiply_all |mats|={len(frontier)}", lambda m: m.left_multiply_all(g, frontier, p)),
    ]


def _same(x, y) -> bool:
    if isinstance(x, tuple):
        return len(x) == len(y) and all(_same(s, t) for s, t in zip(x, y))
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        return np.array_equal(np.asarray(x), np.asarray(y))
    return x == y


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=8, help="word length / BFS depth")
    ap.add_argument("--p", type=int, default=101, help="prime for the BFS kernels")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; only the fallback can be timed", file=sys.stderr)
    print(f"{'kernel':<40} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    ok = True
    for name, fn in _cases(args.n, args.p):
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat))
        if _ckernels is None:
            print(f"{name:<40} {t_py:>10.4f} {'-':>10} {'-':>8}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat))
        agree = _same(fn(_kernels_py), fn(_ckernels))
        ok &= agree
        flag = "" if agree else "  OUTPUT MISMATCH"
        print(f"{name:<40} {t_py:>10.4f} {t_c:>10.4f} {t_py / t_c:>7.1f}x{flag}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
