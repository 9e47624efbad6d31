"""Independent girth oracle for the Sanov pair mod p; writes tests/golden/sanov_girth.json.

Plain integer tuples, no package code.  A reduced relation of length L splits as
u * w^-1 with |u| = ceil(L/2), |w| = floor(L/2), u = w in SL2(F_p) and
last(u) != last(w), so the girth is the least L admitting such a pair.
"""
import json
import sys
from pathlib import Path

A = ((1, 2), (0, 1))
B = ((1, 0), (2, 1))


def mul(x, y, p):
    return tuple(tuple(sum(x[i][t] * y[t][j] for t in range(2)) % p for j in range(2)) for i in range(2))


def inv(x, p):
    (a, b), (c, d) = x
    return ((d % p, -b % p), (-c % p, a % p))  # det 1


def girth(p, max_len=40):
    gens = [A, inv(A, p), B, inv(B, p)]
    gens = [tuple(tuple(v % p for v in r) for r in g) for g in gens]
    opposite = {0: 1, 1: 0, 2: 3, 3: 2}
    ident = ((1, 0), (0, 1))
    levels = [{ident: {None}}]
    frontier = [(ident, None)]
    for L in range(1, max_len + 1):
        h1, h2 = (L + 1) // 2, L // 2
        while len(levels) <= h1:
            nxt, table = [], {}
            for m, last in frontier:
                for g in range(4):
                    if last is not None and opposite[last] == g:
                        continue
                    mm = mul(m, gens[g], p)
                    nxt.append((mm, g))
                    table.setdefault(mm, set()).add(g)
            levels.append(table)
            frontier = nxt
        big, small = levels[h1], levels[h2]
        for m, lasts in big.items():
            other = small.get(m)
            if other and any(a != b for a in lasts for b in other):
                return L
    return None


if __name__ == "__main__":
    primes = [5, 11, 23, 47, 101]
    out = {str(p): girth(p) for p in primes}
    print(out)
    if "--write" in sys.argv:
        path = Path(__file__).resolve().parent.parent / "golden" / "sanov_girth.json"
        path.write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")
