"""Membership caches over the pooled sample words, written as plain matrices.

A cache for layer i has one row per pooled word and one column per state of
that layer.  Scheme 1 stores bits.  Scheme 2 stores, before finalization, a
bitmask over the b-predecessors of the column state: bit (k - j) is set when
the j-th of k predecessors accepts the row's prefix.  Finalized entries of
both schemes are 0/1 membership bits.

These are the readable definitions.  The kernels compute the same matrices
packed into bitmask rows (scheme 1) or bitmask columns (scheme 2); the
``from_*`` constructors convert kernel output for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

from .exact import EMPTY, Word, membership
from .unrolling import LayerState, UnrolledNfa

SCHEME1, SCHEME2 = "cache1", "cache2"


class CacheError(LookupError):
    code = "cache_bookkeeping"


@dataclass(frozen=True)
class CacheMatrix:
    layer: int
    rows: tuple[Word, ...]
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.entries) != len(self.rows):
            raise ValueError("one entry row per word expected")

    @property
    def width(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    @cached_property
    def row_index(self) -> dict[Word, int]:
        return {w: r for r, w in enumerate(self.rows)}

    def entry(self, w: Word, col: int) -> int:
        try:
            r = self.row_index[w]
        except KeyError:
            raise CacheError(f"no cache row for word {w}") from None
        return self.entries[r][col]

    @classmethod
    def from_masks(cls, layer: int, words: Sequence[int], masks: Sequence[int], width: int) -> "CacheMatrix":
        """Rows given as state bitmasks (scheme 1, or any finalized cache)."""
        rows = tuple(Word(layer, int(x)) for x in words)
        entries = tuple(tuple(int(m) >> c & 1 for c in range(width)) for m in masks)
        return cls(layer, rows, entries)

    @classmethod
    def from_columns(cls, layer: int, words: Sequence[int], columns) -> "CacheMatrix":
        """Scheme-2 cache' given as one array of predecessor masks per state."""
        rows = tuple(Word(layer, int(x)) for x in words)
        entries = tuple(tuple(int(col[r]) for col in columns) for r in range(len(rows)))
        return cls(layer, rows, entries)


def unit_cache() -> CacheMatrix:
    """cache_0: the empty word in the initial state."""
    return CacheMatrix(0, (EMPTY,), ((1,),))


@dataclass(frozen=True)
class TransitionMatrix:
    layer: int
    symbol: int
    entries: tuple[tuple[int, ...], ...]  # [previous-layer state][layer state]


def transition_matrix(u: UnrolledNfa, i: int, b: int, scheme: str) -> TransitionMatrix:
    entries = [[0] * u.width(i) for _ in range(u.width(i - 1))]
    for q, pair in enumerate(u.preds[i]):
        k = len(pair[b])
        for j, s in enumerate(pair[b], start=1):
            entries[s][q] = 1 if scheme == SCHEME1 else 1 << (k - j)
    return TransitionMatrix(i, b, tuple(tuple(r) for r in entries))


def _product(prev: CacheMatrix, t: TransitionMatrix) -> list[tuple[int, ...]]:
    out = []
    for row in prev.entries:
        acc = [0] * len(t.entries[0]) if t.entries else []
        for s, bit in enumerate(row):
            if bit:
                for q, v in enumerate(t.entries[s]):
                    acc[q] |= v
        out.append(tuple(acc))
    return out


def compute_cache(i: int, prev: CacheMatrix, u: UnrolledNfa, scheme: str) -> CacheMatrix:
    """cache'_i: prev times each transition matrix, rows for symbol 0 stacked first."""
    if i < 1 or prev.layer != i - 1:
        raise ValueError(f"cache of layer {prev.layer} cannot produce layer {i}")
    if prev.rows and prev.width != u.width(i - 1):
        raise ValueError(f"cache has {prev.width} columns, layer {i - 1} has {u.width(i - 1)} states")
    rows: list[Word] = []
    entries: list[tuple[int, ...]] = []
    for b in (0, 1):
        rows += [w.extend(b) for w in prev.rows]
        entries += _product(prev, transition_matrix(u, i, b, scheme))
    return CacheMatrix(i, tuple(rows), tuple(entries))


def decode_first_pred(entry: int, k: int) -> int | None:
    """1-based index of the first accepting predecessor, None for 0."""
    if entry == 0:
        return None
    return k - (entry.bit_length() - 1)


def update_cache(i: int, cache_prime: CacheMatrix, sampled: Sequence[Word]) -> CacheMatrix:
    """Restrict cache'_i to the sampled words and make every entry a bit."""
    if cache_prime.layer != i:
        raise ValueError("layer mismatch")
    index = cache_prime.row_index
    entries = []
    for w in sampled:
        if w not in index:
            raise CacheError(f"sampled word {w} has no row in cache'_{i}")
        entries.append(tuple(int(v != 0) for v in cache_prime.entries[index[w]]))
    return CacheMatrix(i, tuple(sampled), tuple(entries))


def union_cached(u: UnrolledNfa, q: LayerState, sets: Sequence[Sequence[Word]], cache: CacheMatrix,
                 scheme: str) -> list[Word]:
    """Same output as ``estimator.union_reference``, deciding membership from a cache.

    Scheme 1 reads cache_{i-1}; scheme 2 reads one entry of cache'_i per word.
    """
    preds = u.pred_all(q)
    pair = u.preds[q.layer][q.index]
    if len(sets) != len(preds):
        raise ValueError("one sample set per predecessor expected")
    out = []
    for b in (0, 1):
        for j, s in enumerate(preds):
            if s.index not in pair[b]:
                continue
            pos = pair[b].index(s.index) + 1
            for w in sets[j]:
                if scheme == SCHEME1:
                    ok = all(cache.entry(w, e) == 0 for e in pair[b][: pos - 1])
                else:
                    ok = decode_first_pred(cache.entry(w.extend(b), q.index), len(pair[b])) == pos
                if ok:
                    out.append(w.extend(b))
    return out


def cache_mismatches(u: UnrolledNfa, cache: CacheMatrix) -> list[tuple[Word, int]]:
    """(word, column) pairs where a finalized cache disagrees with membership."""
    bad = []
    for w, row in zip(cache.rows, cache.entries):
        for c, v in enumerate(row):
            if bool(v) != membership(u, w, LayerState(cache.layer, c)):
                bad.append((w, c))
    return bad


def prime_mismatches(u: UnrolledNfa, prime: CacheMatrix, scheme: str) -> list[tuple[Word, int]]:
    """Check cache'_i entry by entry: scheme 1 against membership, scheme 2
    against the direct scan of which b-predecessors accept the prefix."""
    bad = []
    i = prime.layer
    for w, row in zip(prime.rows, prime.entries):
        b = w.symbol(w.length - 1)
        head = w.prefix(w.length - 1)
        for c, v in enumerate(row):
            if scheme == SCHEME1:
                ok = bool(v) == membership(u, w, LayerState(i, c))
            else:
                p_b = u.preds[i][c][b]
                k = len(p_b)
                want = sum(1 << (k - j) for j, s in enumerate(p_b, start=1) if membership(u, head, LayerState(i - 1, s)))
                ok = v == want
            if not ok:
                bad.append((w, c))
    return bad
