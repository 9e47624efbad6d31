"""Pure-Python implementations of the hot loops (reference and fallback).

Matrices are int64 numpy arrays of residues.  ``gens`` has shape
(r, k, d, d): k letters reduced modulo each of r primes.  ``inv[i]`` is the
index of the inverse letter of i.
"""
from __future__ import annotations

import numpy as np


def _mulmod(x, y, p):
    d = len(x)
    return [[sum(x[i][t] * y[t][j] for t in range(d)) % p for j in range(d)] for i in range(d)]


def word_identity_scan(gens, inv, primes, n: int, cap: int):
    """Count reduced words of each length 1..n equal to the identity modulo every prime.

    Returns (counts, hits) where counts[L] is the number of such words of
    length L and hits lists up to ``cap`` of them as letter tuples.
    """
    gens = [[g.tolist() for g in per_prime] for per_prime in np.asarray(gens)]
    inv = [int(i) for i in inv]
    primes = [int(p) for p in primes]
    r, k = len(gens), len(gens[0])
    d = len(gens[0][0])
    ident = [[int(i == j) for j in range(d)] for i in range(d)]
    counts = [0] * (n + 1)
    hits = []
    word = []
    # stack entries: (matrices per prime, next letter to try)
    stack = [([ident] * r, 0)]
    while stack:
        mats, nxt = stack[-1]
        depth = len(stack) - 1
        if depth == n or nxt >= k:
            stack.pop()
            if word:
                word.pop()
            continue
        stack[-1] = (mats, nxt + 1)
        if depth > 0 and inv[word[-1]] == nxt:
            continue
        new = [_mulmod(mats[s], gens[s][nxt], primes[s]) for s in range(r)]
        word.append(nxt)
        if all(m == ident for m in new):
            counts[depth + 1] += 1
            if len(hits) < cap:
                hits.append(tuple(word))
        stack.append((new, 0))
    return counts, hits


def _matmul_mod(x, y, p: int):
    """x @ y mod p with every product reduced before summing, so int64 never overflows for p < 2^31."""
    return ((x[..., :, :, None] * y[..., None, :, :]) % p).sum(axis=-2) % p


def expand_layer(frontier, last, gens, inv, p: int):
    """Children x*g of each frontier matrix along non-backtracking letters.

    Returns (children, parent_index, letter) as arrays.
    """
    frontier = np.asarray(frontier, dtype=np.int64)
    gens = np.asarray(gens, dtype=np.int64)
    k = gens.shape[0]
    kids, parents, letters = [], [], []
    for idx in range(frontier.shape[0]):
        x = frontier[idx]
        for g in range(k):
            if last[idx] >= 0 and inv[last[idx]] == g:
                continue
            kids.append(_matmul_mod(x, gens[g], p))
            parents.append(idx)
            letters.append(g)
    d = gens.shape[1]
    if not kids:
        return np.zeros((0, d, d), dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.array(kids, dtype=np.int64), np.array(parents, dtype=np.int64), np.array(letters, dtype=np.int64)


def left_multiply_all(g, mats, p: int):
    """g * m mod p for every m in mats."""
    mats = np.asarray(mats, dtype=np.int64)
    return _matmul_mod(np.asarray(g, dtype=np.int64)[None], mats, p)
