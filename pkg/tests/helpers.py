"""Small automata and strategies shared by the test modules."""

from fractions import Fraction

from hypothesis import strategies as st

from nfacount.automaton import Nfa
from nfacount.estimator import StateEstimate, estimate_and_sample
from nfacount.exact import EMPTY, Word
from nfacount.unrolling import LayerState


def total_nfa():
    return Nfa(("a",), ("a",), ("a",), (("a", 0, "a"), ("a", 1, "a")))


def single_word_nfa(word):
    states = tuple(f"w{i}" for i in range(len(word) + 1))
    transitions = tuple((states[i], int(b), states[i + 1]) for i, b in enumerate(word))
    return Nfa(states, (states[0],), (states[-1],), transitions)


def words(n):
    return [tuple((x >> (n - 1 - i)) & 1 for i in range(n)) for x in range(1 << n)]


def brute_count(nfa, n):
    return sum(nfa.accepts(w) for w in words(n))


@st.composite
def nfas(draw, max_m=6, min_m=1, multi=True):
    m = draw(st.integers(min_m, max_m))
    states = tuple(f"s{i}" for i in range(m))
    triples = [(p, b, q) for p in states for b in (0, 1) for q in states]
    present = draw(st.lists(st.booleans(), min_size=len(triples), max_size=len(triples)))
    transitions = tuple(t for t, keep in zip(triples, present) if keep)
    k = m if multi else 1
    initials = draw(st.lists(st.sampled_from(states), min_size=1, max_size=k, unique=True))
    finals = draw(st.lists(st.sampled_from(states), min_size=1, max_size=k, unique=True))
    return Nfa(states, tuple(initials), tuple(finals), transitions)


def as_words(layer, values, offsets):
    return [[Word(layer, int(v)) for v in values[offsets[r] : offsets[r + 1]]] for r in range(len(offsets) - 1)]


def word_core(u, params, seed, trial=0):
    """The core loop written with the word-level operations only."""
    q0 = LayerState(0, 0)
    estimates = {q0: StateEstimate(Fraction(1), Fraction(1), Fraction(1), Fraction(1), ())}
    samples = {q0: [[EMPTY] for _ in range(params.gamma)]}
    hats = {}
    for layer in range(1, u.n + 1):
        for q in u.states(layer):
            estimates[q], samples[q], hats[q] = estimate_and_sample(u, q, estimates, samples, params, seed, trial)
    return estimates, samples, hats
