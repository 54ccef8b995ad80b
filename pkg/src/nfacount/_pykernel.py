"""Pure-Python hot loops; the reference behaviour for ``_kernel.pyx``.

Sample sets travel as flat ``int64`` arrays of row ids plus an offsets array
of length gamma + 1 (replica r owns ``words[offsets[r]:offsets[r + 1]]``).
At layer i a row id indexes the word pool of layer i - 1; an id produced by
``expand_state`` is ``b * P + w``, the row of word ``pool[w] . b`` in the
stacked cache'.
"""

from __future__ import annotations

import numpy as np

from .exact import Word, reach_masks
from .probability import TABLE_DIGITS, RandomStream, bernoulli_tail

NAME = "python"

SCHEME_REFERENCE, SCHEME_CACHE1, SCHEME_CACHE2 = 0, 1, 2


def _draw(table, stream: RandomStream, item: int) -> bool:
    if table.kind == 0:
        return False
    if table.kind == 1:
        return True
    block = stream.block(item, 0)
    for c in range(TABLE_DIGITS):
        u, d = block[c], table.digits[c]
        if u != d:
            return u < d
        if table.stop == c:
            return False
    return bernoulli_tail(table.p, stream, item, TABLE_DIGITS)


def _step(mask: int, succ) -> int:
    out = 0
    while mask:
        low = mask & -mask
        out |= succ[low.bit_length() - 1]
        mask ^= low
    return out


def reduce_sets(words, offsets, table, seed, trial, layer, state, phase):
    gamma = len(offsets) - 1
    if table.kind == 1:
        return words.copy(), offsets.copy()
    if table.kind == 0:
        return np.zeros(0, np.int64), np.zeros(gamma + 1, np.int64)
    ws = words.tolist()
    offs = offsets.tolist()
    out: list[int] = []
    out_offs = [0]
    for r in range(gamma):
        stream = RandomStream(seed, trial, layer, state, r, phase)
        start = offs[r]
        for t in range(start, offs[r + 1]):
            if _draw(table, stream, t - start):
                out.append(ws[t])
        out_offs.append(len(out))
    return np.array(out, np.int64), np.array(out_offs, np.int64)


def compute_cache(ctx):
    """cache'_i from cache_{i-1}: the two transition products, stacked (0-rows first)."""
    prev = ctx.prev_rows.tolist()
    P = len(prev)
    if ctx.scheme == SCHEME_CACHE1:
        succ = [ctx.succ[0].tolist(), ctx.succ[1].tolist()]
        rows = [_step(prev[w], succ[b]) for b in (0, 1) for w in range(P)]
        return np.array(rows, dtype=ctx.dtype)
    trans = ctx.trans2.tolist()
    width = ctx.width
    cols = [[0] * (2 * P) for _ in range(width)]
    for b in (0, 1):
        for w in range(P):
            mask = prev[w]
            acc = [0] * width
            while mask:
                low = mask & -mask
                s = low.bit_length() - 1
                mask ^= low
                for q, power in enumerate(trans[b][s]):
                    acc[q] |= power
            for q in range(width):
                cols[q][b * P + w] = acc[q]
    return np.array(cols, dtype=ctx.dtype).reshape(width, 2 * P)


def update_cache(ctx, prime, selected):
    """Keep the rows of cache'_i listed in ``selected``; binarize scheme-2 entries."""
    sel = selected.tolist()
    if ctx.scheme == SCHEME_CACHE1:
        rows = prime.tolist()
        return np.array([rows[x] for x in sel], dtype=ctx.dtype)
    cols = prime.tolist()
    out = []
    for x in sel:
        mask = 0
        for q, col in enumerate(cols):
            if col[x]:
                mask |= 1 << q
        out.append(mask)
    return np.array(out, dtype=ctx.dtype)


def expand_state(ctx, q, pred_sets, tables, bpos, earlier, kb, seed, trial):
    """Reduce every predecessor set, then keep w.b only when the predecessor
    that supplied w is the first b-predecessor of q accepting w."""
    layer, P, scheme = ctx.layer, ctx.P, ctx.scheme
    k = len(pred_sets)
    gamma = len(pred_sets[0][1]) - 1
    ws = [s[0].tolist() for s in pred_sets]
    offs = [s[1].tolist() for s in pred_sets]
    bpos = [list(bpos[0]), list(bpos[1])]
    earlier = [[int(x) for x in earlier[0]], [int(x) for x in earlier[1]]]
    if scheme == SCHEME_CACHE1:
        prev = ctx.prev_rows.tolist()
    elif scheme == SCHEME_CACHE2:
        column = ctx.prime[q].tolist()
    else:
        pool = ctx.pool.tolist()

    out: list[int] = []
    out_offs = [0]
    for r in range(gamma):
        kept = []
        for j in range(k):
            stream = RandomStream(seed, trial, layer, q, r, j + 1)
            start = offs[j][r]
            kept.append([ws[j][t] for t in range(start, offs[j][r + 1]) if _draw(tables[j], stream, t - start)])
        for b in (0, 1):
            for j in range(k):
                pos = bpos[b][j]
                if not pos:
                    continue
                for w in kept[j]:
                    if scheme == SCHEME_CACHE2:
                        entry = column[b * P + w]
                        accept = entry != 0 and kb[b] - (entry.bit_length() - 1) == pos
                    elif scheme == SCHEME_CACHE1:
                        accept = not (prev[w] & earlier[b][j])
                    else:
                        reach = reach_masks(ctx.u, Word(layer - 1, pool[w]))[-1]
                        accept = not (reach & earlier[b][j])
                    if accept:
                        out.append(b * P + w)
        out_offs.append(len(out))
    return np.array(out, np.int64), np.array(out_offs, np.int64)


def first_occurrences(ids, size):
    """Distinct ids in order of first appearance, and the inverse map (-1 if absent)."""
    lookup = np.full(max(size, 1), -1, np.int64)
    selected = []
    for x in ids.tolist():
        if lookup[x] < 0:
            lookup[x] = len(selected)
            selected.append(x)
    return np.array(selected, np.int64), lookup
