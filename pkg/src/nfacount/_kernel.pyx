# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled hot loops. Same contract and same random draws as ``_pykernel``.

Requires words of at most 63 symbols and layers of at most 64 states, so
words and state sets fit in one uint64 each.
"""

import numpy as np

from libc.stdint cimport int64_t, uint64_t

from .probability import TABLE_DIGITS, RandomStream, bernoulli_tail, stream_key

NAME = "compiled"

cdef extern from *:
    """
    #include <stdint.h>
    static inline void nfc_philox(uint64_t c0, uint64_t c1, uint64_t c2, uint64_t c3,
                                  uint64_t k0, uint64_t k1, uint64_t *out) {
        for (int r = 0; r < 10; r++) {
            unsigned __int128 p0 = (unsigned __int128)c0 * 0xD2E7470EE14C6C93ULL;
            unsigned __int128 p1 = (unsigned __int128)c2 * 0xCA5A826395121157ULL;
            c0 = (uint64_t)(p1 >> 64) ^ c1 ^ k0;
            c1 = (uint64_t)p1;
            c2 = (uint64_t)(p0 >> 64) ^ c3 ^ k1;
            c3 = (uint64_t)p0;
            k0 += 0x9E3779B97F4A7C15ULL;
            k1 += 0xBB67AE8584CAA73BULL;
        }
        out[0] = c0; out[1] = c1; out[2] = c2; out[3] = c3;
    }
    static inline int nfc_bitlen(uint64_t x) { return x ? 64 - __builtin_clzll(x) : 0; }
    static inline int nfc_ctz(uint64_t x) { return __builtin_ctzll(x); }
    """
    void nfc_philox(uint64_t c0, uint64_t c1, uint64_t c2, uint64_t c3,
                    uint64_t k0, uint64_t k1, uint64_t *out) nogil
    int nfc_bitlen(uint64_t x) nogil
    int nfc_ctz(uint64_t x) nogil


cdef enum:
    MAX_PREDS = 64
    REF = 0
    CACHE1 = 1
    CACHE2 = 2


cdef struct Table:
    int kind
    int stop
    uint64_t d0, d1, d2, d3


cdef Table _table(object t):
    cdef Table out
    out.kind = t.kind
    out.stop = t.stop
    out.d0, out.d1, out.d2, out.d3 = t.digits
    return out


cdef inline int _draw(Table* t, uint64_t k0, uint64_t k1, uint64_t item,
                      uint64_t replica, uint64_t phase) nogil:
    # 1 keep, 0 drop, -1 tie beyond the table (settled in Python)
    cdef uint64_t out[4]
    cdef uint64_t d
    cdef int c
    if t.kind == 0:
        return 0
    if t.kind == 1:
        return 1
    nfc_philox(item, replica, phase << 32, 0, k0, k1, out)
    for c in range(4):
        d = t.d0 if c == 0 else (t.d1 if c == 1 else (t.d2 if c == 2 else t.d3))
        if out[c] < d:
            return 1
        if out[c] > d:
            return 0
        if t.stop == c:
            return 0
    return -1


cdef bint _resolve(int res, object table, object seed, object trial, object layer,
                   object state, uint64_t replica, uint64_t phase, uint64_t item):
    if res >= 0:
        return res
    stream = RandomStream(seed, trial, layer, state, replica, phase)
    return bernoulli_tail(table.p, stream, item, TABLE_DIGITS)


def reduce_sets(words, offsets, table, seed, trial, layer, state, phase):
    cdef int64_t gamma = len(offsets) - 1
    if table.kind == 1:
        return words.copy(), offsets.copy()
    if table.kind == 0:
        return np.zeros(0, np.int64), np.zeros(gamma + 1, np.int64)
    cdef const int64_t[:] ws = words
    cdef const int64_t[:] offs = offsets
    out_arr = np.empty(len(words), np.int64)
    out_offs_arr = np.empty(gamma + 1, np.int64)
    cdef int64_t[:] out = out_arr
    cdef int64_t[:] out_offs = out_offs_arr
    cdef Table t = _table(table)
    k0, k1 = stream_key(seed, trial, layer, state)
    cdef uint64_t key0 = k0, key1 = k1
    cdef uint64_t ph = phase
    cdef int64_t r, i, start, n = 0
    cdef int res
    out_offs[0] = 0
    for r in range(gamma):
        start = offs[r]
        for i in range(start, offs[r + 1]):
            res = _draw(&t, key0, key1, i - start, r, ph)
            if res < 0:
                res = _resolve(res, table, seed, trial, layer, state, r, ph, i - start)
            if res:
                out[n] = ws[i]
                n += 1
        out_offs[r + 1] = n
    return out_arr[:n].copy(), out_offs_arr


cdef inline uint64_t _step(uint64_t mask, const uint64_t[:] succ) nogil:
    cdef uint64_t out = 0
    while mask:
        out |= succ[nfc_ctz(mask)]
        mask &= mask - 1
    return out


def compute_cache(ctx):
    cdef const uint64_t[:] prev = ctx.prev_rows
    cdef Py_ssize_t P = prev.shape[0]
    cdef Py_ssize_t w, q, width
    cdef int b, s
    cdef uint64_t mask
    cdef const uint64_t[:, :] succ
    cdef const uint64_t[:, :, :] trans
    cdef uint64_t[:] rows
    cdef uint64_t[:, :] cols
    if ctx.scheme == CACHE1:
        succ = ctx.succ
        rows_arr = np.empty(2 * P, np.uint64)
        rows = rows_arr
        for b in range(2):
            for w in range(P):
                rows[b * P + w] = _step(prev[w], succ[b])
        return rows_arr
    trans = ctx.trans2
    width = ctx.width
    cols_arr = np.zeros((width, 2 * P), np.uint64)
    cols = cols_arr
    for b in range(2):
        for w in range(P):
            mask = prev[w]
            while mask:
                s = nfc_ctz(mask)
                mask &= mask - 1
                for q in range(width):
                    cols[q, b * P + w] |= trans[b, s, q]
    return cols_arr


def update_cache(ctx, prime, selected):
    if ctx.scheme == CACHE1:
        return np.ascontiguousarray(prime[selected])
    cdef const uint64_t[:, :] cols = prime
    cdef const int64_t[:] sel = selected
    cdef Py_ssize_t width = cols.shape[0], n = sel.shape[0], i, q
    out_arr = np.zeros(n, np.uint64)
    cdef uint64_t[:] out = out_arr
    cdef uint64_t mask
    for i in range(n):
        mask = 0
        for q in range(width):
            if cols[q, sel[i]]:
                mask |= (<uint64_t>1) << q
        out[i] = mask
    return out_arr


cdef inline uint64_t _reach(uint64_t word, int length, const uint64_t[:, :, :] succ_all) nogil:
    cdef uint64_t mask = 1, nxt, m
    cdef int t, bit
    for t in range(1, length + 1):
        bit = (word >> (length - t)) & 1
        nxt = 0
        m = mask
        while m:
            nxt |= succ_all[t, bit, nfc_ctz(m)]
            m &= m - 1
        mask = nxt
    return mask


def expand_state(ctx, int q, list pred_sets, list tables, bpos, earlier, kb, seed, trial):
    cdef int layer = ctx.layer
    cdef int64_t P = ctx.P
    cdef int scheme = ctx.scheme
    cdef int k = len(pred_sets)
    if k > MAX_PREDS:
        raise ValueError("too many predecessors for the compiled kernel")
    cdef int64_t gamma = len(pred_sets[0][1]) - 1

    cdef const int64_t* wp[MAX_PREDS]
    cdef const int64_t* op[MAX_PREDS]
    cdef Table tab[MAX_PREDS]
    cdef int64_t total_in = 0
    cdef const int64_t[:] mv
    cdef int j
    keep_alive = []
    dummy = np.zeros(1, np.int64)
    for j in range(k):
        words, offs = pred_sets[j]
        total_in += len(words)
        if len(words) == 0:
            words = dummy
        keep_alive.append(words)
        keep_alive.append(offs)
        mv = words
        wp[j] = &mv[0]
        mv = offs
        op[j] = &mv[0]
        tab[j] = _table(tables[j])

    cdef const int64_t[:, :] bp = bpos
    cdef const uint64_t[:, :] early = earlier
    cdef int kb0 = kb[0], kb1 = kb[1]
    cdef const uint64_t[:] prev
    cdef const uint64_t[:] column
    cdef const uint64_t[:] pool
    cdef const uint64_t[:, :, :] succ_all
    if scheme == CACHE1:
        prev = ctx.prev_rows
    elif scheme == CACHE2:
        column = ctx.prime[q]
    else:
        pool = ctx.pool
        succ_all = ctx.succ_all

    k0, k1 = stream_key(seed, trial, layer, q)
    cdef uint64_t key0 = k0, key1 = k1

    kept_arr = np.empty(max(total_in, 1), np.int64)
    cdef int64_t[:] kept = kept_arr
    cdef int64_t kstart[MAX_PREDS]
    cdef int64_t kend[MAX_PREDS]
    out_arr = np.empty(max(2 * total_in, 1), np.int64)
    offs_arr = np.empty(gamma + 1, np.int64)
    cdef int64_t[:] out = out_arr
    cdef int64_t[:] out_offs = offs_arr

    cdef int64_t r, i, start, nk, n = 0, w
    cdef int b, res, pos, kbb
    cdef uint64_t entry
    cdef bint accept
    out_offs[0] = 0
    for r in range(gamma):
        nk = 0
        for j in range(k):
            kstart[j] = nk
            start = op[j][r]
            for i in range(start, op[j][r + 1]):
                res = _draw(&tab[j], key0, key1, i - start, r, j + 1)
                if res < 0:
                    res = _resolve(res, tables[j], seed, trial, layer, q, r, j + 1, i - start)
                if res:
                    kept[nk] = wp[j][i]
                    nk += 1
            kend[j] = nk
        for b in range(2):
            kbb = kb0 if b == 0 else kb1
            for j in range(k):
                pos = bp[b, j]
                if pos == 0:
                    continue
                for i in range(kstart[j], kend[j]):
                    w = kept[i]
                    if scheme == CACHE2:
                        entry = column[b * P + w]
                        accept = entry != 0 and kbb - (nfc_bitlen(entry) - 1) == pos
                    elif scheme == CACHE1:
                        accept = (prev[w] & early[b, j]) == 0
                    else:
                        accept = (_reach(pool[w], layer - 1, succ_all) & early[b, j]) == 0
                    if accept:
                        out[n] = b * P + w
                        n += 1
        out_offs[r + 1] = n
    return out_arr[:n].copy(), offs_arr


def first_occurrences(ids, Py_ssize_t size):
    cdef const int64_t[:] xs = ids
    lookup_arr = np.full(max(size, 1), -1, np.int64)
    sel_arr = np.empty(len(ids), np.int64)
    cdef int64_t[:] lookup = lookup_arr
    cdef int64_t[:] sel = sel_arr
    cdef Py_ssize_t i, n = 0
    cdef int64_t x
    for i in range(xs.shape[0]):
        x = xs[i]
        if lookup[x] < 0:
            lookup[x] = n
            sel[n] = x
            n += 1
    return sel_arr[:n].copy(), lookup_arr
