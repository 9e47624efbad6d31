# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops; same contracts as _kernels_py."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()


cdef inline void _mulmod(int64_t[:, :] x, int64_t[:, :] y, int64_t[:, :] out, int d, int64_t p) noexcept nogil:
    cdef int i, j, t
    cdef int64_t acc
    for i in range(d):
        for j in range(d):
            acc = 0
            for t in range(d):
                acc += (x[i, t] * y[t, j]) % p
            out[i, j] = acc % p


cdef inline bint _is_identity(int64_t[:, :] x, int d) noexcept nogil:
    cdef int i, j
    for i in range(d):
        for j in range(d):
            if x[i, j] != (1 if i == j else 0):
                return False
    return True


def word_identity_scan(gens, inv, primes, int n, int cap):
    cdef cnp.ndarray[int64_t, ndim=4] G = np.ascontiguousarray(gens, dtype=np.int64)
    cdef int64_t[:, :, :, :] g = G
    cdef int64_t[:] iv = np.ascontiguousarray(inv, dtype=np.int64)
    cdef int64_t[:] ps = np.ascontiguousarray(primes, dtype=np.int64)
    cdef int r = G.shape[0], k = G.shape[1], d = G.shape[2]
    # stack[depth, prime] holds the prefix product of length depth
    cdef int64_t[:, :, :, :] stack = np.zeros((n + 1, r, d, d), dtype=np.int64)
    cdef int64_t[:] nxt = np.zeros(n + 1, dtype=np.int64)
    cdef int64_t[:] word = np.zeros(n + 1, dtype=np.int64)
    cdef int64_t[:] counts = np.zeros(n + 1, dtype=np.int64)
    cdef int depth = 0, s, i, letter
    cdef bint ident
    hits = []
    for s in range(r):
        for i in range(d):
            stack[0, s, i, i] = 1
    nxt[0] = 0
    while depth >= 0:
        if depth == n or nxt[depth] >= k:
            depth -= 1
            continue
        letter = nxt[depth]
        nxt[depth] += 1
        if depth > 0 and iv[word[depth - 1]] == letter:
            continue
        ident = True
        for s in range(r):
            _mulmod(stack[depth, s], g[s, letter], stack[depth + 1, s], d, ps[s])
            if ident and not _is_identity(stack[depth + 1, s], d):
                ident = False
        word[depth] = letter
        if ident:
            counts[depth + 1] += 1
            if len(hits) < cap:
                hits.append(tuple(int(word[i]) for i in range(depth + 1)))
        depth += 1
        nxt[depth] = 0
    return [int(c) for c in counts], hits


def expand_layer(frontier, last, gens, inv, int64_t p):
    cdef cnp.ndarray[int64_t, ndim=3] F = np.ascontiguousarray(frontier, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=3] G = np.ascontiguousarray(gens, dtype=np.int64)
    cdef int64_t[:] lst = np.ascontiguousarray(last, dtype=np.int64)
    cdef int64_t[:] iv = np.ascontiguousarray(inv, dtype=np.int64)
    cdef int m = F.shape[0], k = G.shape[0], d = G.shape[1]
    cdef cnp.ndarray[int64_t, ndim=3] K = np.zeros((m * k, d, d), dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] par = np.zeros(m * k, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] let = np.zeros(m * k, dtype=np.int64)
    cdef int64_t[:, :, :] f = F, gg = G, kk = K
    cdef int idx, l, c = 0
    for idx in range(m):
        for l in range(k):
            if lst[idx] >= 0 and iv[lst[idx]] == l:
                continue
            _mulmod(f[idx], gg[l], kk[c], d, p)
            par[c] = idx
            let[c] = l
            c += 1
    return K[:c], par[:c], let[:c]


def left_multiply_all(g, mats, int64_t p):
    cdef cnp.ndarray[int64_t, ndim=2] Gm = np.ascontiguousarray(g, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=3] M = np.ascontiguousarray(mats, dtype=np.int64)
    cdef int n = M.shape[0], d = M.shape[1], i
    cdef cnp.ndarray[int64_t, ndim=3] out = np.zeros((n, d, d), dtype=np.int64)
    cdef int64_t[:, :] gv = Gm
    cdef int64_t[:, :, :] mv = M, ov = out
    for i in range(n):
        _mulmod(gv, mv[i], ov[i], d, p)
    return out
