"""Layered (acyclic) unrolling of a normalized NFA for a fixed word length."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

from .automaton import NormalizedNfa


class LayerState(NamedTuple):
    layer: int
    index: int  # dense position inside its layer; respects the state order


@dataclass(frozen=True)
class UnrolledNfa:
    """The (n+1)-layer automaton whose layer-l state q accepts exactly the
    length-l words reaching q in the source automaton.

    ``layers[l]`` lists original state indices in state order, so dense
    indices compare the same way as the original states.  ``preds[l][i][b]``
    holds the dense indices (layer l-1) of the b-predecessors of state i, and
    ``succ[l][b][s]`` is the bitmask of layer-l states having s as b-predecessor.
    """

    nfa: NormalizedNfa
    n: int
    layers: tuple[tuple[int, ...], ...]
    preds: tuple[tuple[tuple[tuple[int, ...], tuple[int, ...]], ...], ...]
    succ: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    final_index: int | None

    @property
    def m(self) -> int:
        return self.nfa.m

    @property
    def initial_state(self) -> LayerState:
        return LayerState(0, 0)

    @property
    def final_state(self) -> LayerState | None:
        if self.final_index is None:
            return None
        return LayerState(self.n, self.final_index)

    def width(self, layer: int) -> int:
        return len(self.layers[layer])

    @property
    def max_width(self) -> int:
        return max(len(layer) for layer in self.layers)

    def states(self, layer: int) -> list[LayerState]:
        return [LayerState(layer, i) for i in range(len(self.layers[layer]))]

    def all_states(self) -> list[LayerState]:
        return [q for layer in range(self.n + 1) for q in self.states(layer)]

    def name(self, q: LayerState) -> str:
        return self.nfa.states[self.layers[q.layer][q.index]]

    def locate(self, name: str, layer: int) -> LayerState | None:
        orig = self.nfa.states.index(name)
        try:
            return LayerState(layer, self.layers[layer].index(orig))
        except ValueError:
            return None

    def pred(self, q: LayerState, b: int) -> tuple[LayerState, ...]:
        if q.layer == 0:
            return ()
        return tuple(LayerState(q.layer - 1, s) for s in self.preds[q.layer][q.index][b])

    def pred_all(self, q: LayerState) -> tuple[LayerState, ...]:
        """All predecessors (either symbol), deduplicated, in state order."""
        if q.layer == 0:
            return ()
        p0, p1 = self.preds[q.layer][q.index]
        return tuple(LayerState(q.layer - 1, s) for s in sorted(set(p0) | set(p1)))

    def to_json(self) -> str:
        out = {
            "n": self.n,
            "layers": [[self.nfa.states[s] for s in layer] for layer in self.layers],
            "final": None if self.final_index is None else self.nfa.final,
            "transitions": [
                [
                    [self.nfa.states[self.layers[layer - 1][s]], b, self.nfa.states[self.layers[layer][i]]]
                    for i in range(self.width(layer))
                    for b in (0, 1)
                    for s in self.preds[layer][i][b]
                ]
                for layer in range(1, self.n + 1)
            ],
        }
        return json.dumps(out)


def unroll(nfa: NormalizedNfa, n: int) -> UnrolledNfa:
    if n < 0:
        raise ValueError("word length must be non-negative")
    index = nfa.index()
    edges = [(index[p], b, index[q]) for p, b, q in nfa.transitions]
    start = index[nfa.initial]
    layers: list[tuple[int, ...]] = [(start,)]
    preds: list[tuple] = [(((), ()),)]
    succ: list[tuple] = [((), ())]
    for layer in range(1, n + 1):
        prev = layers[-1]
        prev_pos = {s: i for i, s in enumerate(prev)}
        reached: dict[int, tuple[list[int], list[int]]] = {}
        # each transition visited once per layer
        for p, b, q in edges:
            if p in prev_pos:
                reached.setdefault(q, ([], []))[b].append(prev_pos[p])
        current = tuple(sorted(reached))
        layers.append(current)
        layer_preds = tuple((tuple(sorted(reached[q][0])), tuple(sorted(reached[q][1]))) for q in current)
        preds.append(layer_preds)
        masks: tuple[list[int], list[int]] = ([0] * len(prev), [0] * len(prev))
        for i, (p0, p1) in enumerate(layer_preds):
            for s in p0:
                masks[0][s] |= 1 << i
            for s in p1:
                masks[1][s] |= 1 << i
        succ.append((tuple(masks[0]), tuple(masks[1])))
    final = index[nfa.final]
    final_index = layers[n].index(final) if final in layers[n] else None
    return UnrolledNfa(nfa, n, tuple(layers), tuple(preds), tuple(succ), final_index)


def slice_nonempty(u: UnrolledNfa) -> bool:
    """True iff some length-n word is accepted (for n = 0, defer to the normalization flag)."""
    if u.n == 0:
        return u.nfa.accepts_empty
    return u.final_index is not None
