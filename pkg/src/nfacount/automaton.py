"""Binary-alphabet NFAs: JSON parsing, validation and single-initial/single-final normalization.

The order of ``Nfa.states`` is the total order used everywhere downstream to
break ties between predecessors, so it is preserved verbatim from the input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

SYMBOLS = (0, 1)

FRESH_INITIAL = "__init__"
FRESH_FINAL = "__final__"


class NfaError(ValueError):
    """Invalid automaton input. ``code`` is a stable machine-readable tag."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Nfa:
    states: tuple[str, ...]
    initials: tuple[str, ...]
    finals: tuple[str, ...]
    transitions: tuple[tuple[str, int, str], ...]

    def __post_init__(self):
        _validate(self)

    @property
    def m(self) -> int:
        return len(self.states)

    def index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.states)}

    def accepts(self, word: Iterable[int]) -> bool:
        """Direct state-set simulation on the original automaton."""
        current = set(self.initials)
        delta: dict[tuple[str, int], list[str]] = {}
        for p, b, q in self.transitions:
            delta.setdefault((p, b), []).append(q)
        for b in word:
            current = {q for p in current for q in delta.get((p, b), ())}
            if not current:
                return False
        return bool(current & set(self.finals))


@dataclass(frozen=True)
class NormalizedNfa(Nfa):
    """An Nfa with exactly one initial and one final state.

    ``accepts_empty`` carries the length-0 answer of the source automaton,
    which the fresh-state construction does not preserve.
    """

    accepts_empty: bool = False

    def __post_init__(self):
        super().__post_init__()
        if len(self.initials) != 1 or len(self.finals) != 1:
            raise NfaError("not_normalized", "normalized automaton needs one initial and one final state")

    @property
    def initial(self) -> str:
        return self.initials[0]

    @property
    def final(self) -> str:
        return self.finals[0]


def _validate(nfa: Nfa) -> None:
    declared = set(nfa.states)
    if len(declared) != len(nfa.states):
        raise NfaError("duplicate_state", "duplicate state declaration")
    if not nfa.initials:
        raise NfaError("empty_initials", "at least one initial state is required")
    if not nfa.finals:
        raise NfaError("empty_finals", "at least one final state is required")
    for s in (*nfa.initials, *nfa.finals):
        if s not in declared:
            raise NfaError("undeclared_state", f"undeclared state {s!r}")
    seen = set()
    for t in nfa.transitions:
        p, b, q = t
        if p not in declared or q not in declared:
            bad = p if p not in declared else q
            raise NfaError("undeclared_state", f"undeclared state {bad!r} in transition {list(t)}")
        if b not in SYMBOLS or isinstance(b, bool):
            raise NfaError("bad_symbol", f"symbol must be 0 or 1, got {b!r}")
        if t in seen:
            raise NfaError("duplicate_transition", f"duplicate transition {list(t)}")
        seen.add(t)


def parse_nfa(text: str) -> Nfa:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NfaError("malformed", f"malformed JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise NfaError("malformed", "top-level value must be an object")
    try:
        states = tuple(data["states"])
        initials = tuple(data["initial"])
        finals = tuple(data["final"])
        transitions = tuple((t[0], t[1], t[2]) for t in data["transitions"])
    except (KeyError, TypeError, IndexError) as exc:
        raise NfaError("malformed", f"missing or malformed field: {exc}") from exc
    for t in data["transitions"]:
        if not isinstance(t, list) or len(t) != 3:
            raise NfaError("malformed", f"transition must be a 3-element list, got {t!r}")
    if not all(isinstance(s, str) for s in (*states, *initials, *finals)):
        raise NfaError("malformed", "state names must be strings")
    return Nfa(states, initials, finals, transitions)


def load_nfa(path) -> Nfa:
    with open(path) as fh:
        return parse_nfa(fh.read())


def serialize_nfa(nfa: Nfa) -> str:
    return json.dumps(
        {
            "states": list(nfa.states),
            "initial": list(nfa.initials),
            "final": list(nfa.finals),
            "transitions": [list(t) for t in nfa.transitions],
        }
    )


def _fresh(name: str, taken: set[str]) -> str:
    while name in taken:
        name = "_" + name
    return name


def normalize(nfa: Nfa) -> NormalizedNfa:
    """Reduce to one initial and one final state without epsilon moves.

    A fresh final receives a copy of every transition entering an old final;
    a fresh initial gets a copy of every transition leaving an old initial.
    Fresh states are appended, so they come last in the state order.
    """
    accepts_empty = any(i in nfa.finals for i in nfa.initials)
    if isinstance(nfa, NormalizedNfa):
        return nfa
    if len(nfa.initials) == 1 and len(nfa.finals) == 1:
        return NormalizedNfa(nfa.states, nfa.initials, nfa.finals, nfa.transitions, accepts_empty)

    states = list(nfa.states)
    transitions = list(nfa.transitions)
    taken = set(states)
    finals = nfa.finals
    initials = nfa.initials

    new_initial = None
    if len(initials) > 1:
        new_initial = _fresh(FRESH_INITIAL, taken)
        taken.add(new_initial)
    if len(finals) > 1:
        new_final = _fresh(FRESH_FINAL, taken)
        taken.add(new_final)
        old = set(finals)
        present = set(transitions)
        for p, b, q in nfa.transitions:
            if q in old and (p, b, new_final) not in present:
                transitions.append((p, b, new_final))
                present.add((p, b, new_final))
        finals = (new_final,)
    if new_initial is not None:
        old = set(initials)
        present = set(transitions)
        for p, b, q in list(transitions):
            if p in old and (new_initial, b, q) not in present:
                transitions.append((new_initial, b, q))
                present.add((new_initial, b, q))
        initials = (new_initial,)
        states.append(new_initial)
    if finals[0] not in nfa.states:
        states.append(finals[0])
    return NormalizedNfa(tuple(states), initials, finals, tuple(transitions), accepts_empty)
