"""Exact oracles over unrolled automata.

Membership, two independent exact counters (word enumeration and a
subset-construction DP), derivation runs and the divergence classes built
on them.  These are ground truth for the estimator and its tests, so every
size guard raises instead of truncating.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .unrolling import LayerState, UnrolledNfa

ENUM_MAX_N = 24
DP_MAX_SUBSETS = 1 << 20


class OracleLimitError(RuntimeError):
    code = "oracle_guard"


@dataclass(frozen=True, order=True)
class Word:
    """A binary word packed into an int; the first symbol is the most significant bit."""

    length: int
    bits: int = 0

    @classmethod
    def from_str(cls, s: str) -> "Word":
        return cls(len(s), int(s, 2) if s else 0)

    @classmethod
    def from_symbols(cls, symbols) -> "Word":
        w = cls(0, 0)
        for b in symbols:
            w = w.extend(b)
        return w

    def extend(self, b: int) -> "Word":
        return Word(self.length + 1, (self.bits << 1) | b)

    def symbol(self, i: int) -> int:
        """The i-th symbol, 0-based."""
        return (self.bits >> (self.length - 1 - i)) & 1

    def prefix(self, k: int) -> "Word":
        return Word(k, self.bits >> (self.length - k))

    def __iter__(self) -> Iterator[int]:
        return (self.symbol(i) for i in range(self.length))

    def __len__(self) -> int:
        return self.length

    def __str__(self) -> str:
        return format(self.bits, f"0{self.length}b") if self.length else ""


EMPTY = Word(0, 0)


def _step(u: UnrolledNfa, layer: int, mask: int, b: int) -> int:
    succ = u.succ[layer][b]
    out = 0
    while mask:
        low = mask & -mask
        out |= succ[low.bit_length() - 1]
        mask ^= low
    return out


def reach_masks(u: UnrolledNfa, w: Word) -> list[int]:
    """Reachable layer-state sets (as bitmasks) after each prefix of w."""
    if w.length > u.n:
        raise ValueError("word longer than the unrolling")
    masks = [1]
    for i, b in enumerate(w, start=1):
        masks.append(_step(u, i, masks[-1], b))
    return masks


def membership(u: UnrolledNfa, w: Word, q: LayerState) -> bool:
    if w.length != q.layer:
        raise ValueError(f"word of length {w.length} tested against a layer-{q.layer} state")
    return bool(reach_masks(u, w)[-1] >> q.index & 1)


def count_exact_enum(u: UnrolledNfa) -> int:
    """Count accepted length-n words by walking all 2^n words."""
    if u.n > ENUM_MAX_N:
        raise OracleLimitError(f"enumeration refused for n={u.n} > {ENUM_MAX_N}")
    if u.n == 0:
        return int(u.nfa.accepts_empty)
    if u.final_index is None:
        return 0
    target = 1 << u.final_index
    count = 0
    # explicit stack of (layer, mask); prefixes share their simulation work
    stack = [(0, 1)]
    while stack:
        layer, mask = stack.pop()
        if layer == u.n:
            count += bool(mask & target)
            continue
        for b in (0, 1):
            nxt = _step(u, layer + 1, mask, b)
            if nxt:
                stack.append((layer + 1, nxt))
    return count


def _subset_layers(u: UnrolledNfa) -> list[dict[int, int]]:
    layers = [{1: 1}]
    for layer in range(1, u.n + 1):
        nxt: dict[int, int] = {}
        for mask, c in layers[-1].items():
            for b in (0, 1):
                m2 = _step(u, layer, mask, b)
                if m2:
                    nxt[m2] = nxt.get(m2, 0) + c
        if len(nxt) > DP_MAX_SUBSETS:
            raise OracleLimitError(f"subset DP exceeded {DP_MAX_SUBSETS} subsets at layer {layer}")
        layers.append(nxt)
    return layers


def count_exact_dp(u: UnrolledNfa) -> int:
    """Count accepted length-n words by determinizing layer by layer.

    Each layer keeps a map from reachable-state subset to the number of
    prefixes whose reachable set is exactly that subset.
    """
    if u.n == 0:
        return int(u.nfa.accepts_empty)
    if u.final_index is None:
        return 0
    last = _subset_layers(u)[-1]
    return sum(c for mask, c in last.items() if mask >> u.final_index & 1)


def language_sizes(u: UnrolledNfa) -> list[list[int]]:
    """|L(q)| for every layer-state, via the subset DP."""
    out = []
    for layer, subsets in enumerate(_subset_layers(u)):
        sizes = [0] * u.width(layer)
        for mask, c in subsets.items():
            while mask:
                low = mask & -mask
                sizes[low.bit_length() - 1] += c
                mask ^= low
        out.append(sizes)
    return out


def language(u: UnrolledNfa, q: LayerState) -> list[Word]:
    """All words of L(q), in increasing numeric order."""
    if q.layer > ENUM_MAX_N:
        raise OracleLimitError(f"enumeration refused for length {q.layer}")
    return [w for w in (Word(q.layer, x) for x in range(1 << q.layer)) if membership(u, w, q)]


@dataclass(frozen=True)
class DerivationRun:
    states: tuple[LayerState, ...]
    word: Word

    def __len__(self) -> int:
        return self.word.length


def derivation_run(u: UnrolledNfa, w: Word, q: LayerState) -> DerivationRun:
    """The run that always steps back through the first accepting b-predecessor."""
    masks = reach_masks(u, w)
    if w.length != q.layer or not masks[-1] >> q.index & 1:
        raise ValueError(f"{w} is not in the language of {q}")
    states = [q]
    current = q
    for i in range(w.length, 0, -1):
        b = w.symbol(i - 1)
        prev = next(s for s in u.preds[i][current.index][b] if masks[i - 1] >> s & 1)
        current = LayerState(i - 1, prev)
        states.append(current)
    return DerivationRun(tuple(reversed(states)), w)


def lcps(r1: DerivationRun, r2: DerivationRun) -> LayerState:
    """Deepest state up to which both runs (states and symbols) coincide."""
    if r1.states[0] != r2.states[0]:
        raise ValueError("runs must share their starting state")
    k = 0
    limit = min(len(r1.states), len(r2.states))
    while k + 1 < limit and r1.states[k + 1] == r2.states[k + 1] and r1.word.symbol(k) == r2.word.symbol(k):
        k += 1
    return r1.states[k]


def divergence_class(u: UnrolledNfa, w: Word, q: LayerState, ell: int) -> set[Word]:
    """Words of L(q) whose derivation run leaves run(w, q) right after its ell-th state."""
    if not 0 <= ell <= q.layer:
        raise ValueError("prefix depth out of range")
    run = derivation_run(u, w, q)
    target = run.states[ell]
    return {v for v in language(u, q) if lcps(run, derivation_run(u, v, q)) == target}
