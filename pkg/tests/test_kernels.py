"""Compiled kernel, pure-Python kernel and word-level loop must agree bit for bit."""

from fractions import Fraction

import numpy as np
import pytest

from helpers import as_words, single_word_nfa, total_nfa, word_core
from nfacount import _pykernel, backend
from nfacount.automaton import Nfa, normalize
from nfacount.estimator import CoreTrace, compute_params, count_nfa, count_nfa_core, count_nfa_detailed
from nfacount.exact import language_sizes
from nfacount.harness import random_nfa
from nfacount.unrolling import unroll

needs_compiled = pytest.mark.skipif(not backend.compiled_available(), reason="extension not built")


def small(u, n_s=4, n_t=3):
    return compute_params(1, Fraction(1, 5), u.n, u.m, n_s=n_s, n_t=n_t)


def traced(u, params, seed, scheme, which):
    trace = CoreTrace(record_sets=True)
    out = count_nfa_core(u, params, seed, trial=1, scheme=scheme, trace=trace, backend=which)
    return out, trace


def fan_out(k, n):
    # the initial state branches to k states at layer 1, all of which rejoin
    states = ("i", "f") + tuple(f"x{j}" for j in range(k))
    transitions = [("i", 0, f"x{j}") for j in range(k)] + [(f"x{j}", j % 2, "f") for j in range(k)]
    transitions += [("f", 0, "f"), ("f", 1, "f")]
    return unroll(normalize(Nfa(states, ("i",), ("f",), tuple(transitions))), n)


@needs_compiled
@pytest.mark.parametrize("scheme", ["reference", "cache1", "cache2"])
@pytest.mark.parametrize("seed", [0, 9])
def test_compiled_matches_python_random(scheme, seed):
    for k in range(3):
        nfa = random_nfa(4 + k, 0.4, seed=100 * seed + k, n=6)
        u = unroll(normalize(nfa), 6)
        params = small(u)
        a, ta = traced(u, params, seed, scheme, "compiled")
        b, tb = traced(u, params, seed, scheme, "python")
        assert a == b and ta.total == tb.total
        for q in u.all_states():
            assert ta.estimates[q] == tb.estimates[q]
            assert np.array_equal(ta.samples[q][0].astype(object), tb.samples[q][0].astype(object))
            assert np.array_equal(ta.samples[q][1], tb.samples[q][1])


@needs_compiled
def test_compiled_matches_python_sample(sample13_u):
    params = small(sample13_u, n_s=8, n_t=4)
    for scheme in ("cache1", "cache2"):
        a, _ = traced(sample13_u, params, 7, scheme, "compiled")
        b, _ = traced(sample13_u, params, 7, scheme, "python")
        assert a == b


@needs_compiled
def test_first_occurrences_agree():
    rng = np.random.default_rng(4)
    ids = rng.integers(0, 50, size=400).astype(np.int64)
    got_c = backend._ckernel.first_occurrences(ids, 50)
    got_p = _pykernel.first_occurrences(ids, 50)
    for x, y in zip(got_c, got_p):
        assert np.array_equal(x, y)
    selected, lookup = got_p
    assert list(selected) == list(dict.fromkeys(ids.tolist()))
    assert all(selected[lookup[v]] == v for v in ids)


def test_env_var_selects_python(monkeypatch, sample13_u):
    monkeypatch.setenv(backend.ENV_VAR, "python")
    assert backend.select(sample13_u) is _pykernel
    monkeypatch.setenv(backend.ENV_VAR, "nonsense")
    with pytest.raises(ValueError):
        backend.select(sample13_u)


def test_auto_prefers_compiled(monkeypatch, sample13_u):
    monkeypatch.delenv(backend.ENV_VAR, raising=False)
    expected = backend._ckernel if backend.compiled_available() else _pykernel
    assert backend.select(sample13_u) is expected


def test_wide_layer_falls_back():
    u = fan_out(70, 3)
    assert u.width(1) == 70 and not backend.fits_compiled(u)
    assert backend.select(u) is _pykernel
    assert backend.word_dtype(u, _pykernel) is object
    with pytest.raises(RuntimeError):
        backend.select(u, "compiled")


def test_wide_layer_matches_word_level_loop():
    u = fan_out(70, 3)
    params = small(u, n_s=3, n_t=2)
    estimates, samples, _ = word_core(u, params, seed=5, trial=1)
    out, trace = traced(u, params, 5, "cache2", None)
    assert out == estimates[u.final_state].N
    for q in u.all_states():
        assert trace.estimates[q].p == estimates[q].p
        assert as_words(q.layer, *trace.samples[q]) == samples[q]


def test_long_words_fall_back_and_count():
    u = unroll(normalize(total_nfa()), 70)
    assert not backend.fits_compiled(u)
    # enough samples that the run is not interrupted: the word-level loop has no ceiling
    params = small(u, n_s=20, n_t=3)
    estimates, samples, _ = word_core(u, params, seed=2, trial=1)
    out, trace = traced(u, params, 2, "cache2", None)
    assert trace.layers_done == 70
    assert out == estimates[u.final_state].N
    for q in u.all_states():
        assert as_words(q.layer, *trace.samples[q]) == samples[q]


def test_long_single_word_is_exact():
    word = "".join("01"[(i * 7) % 3 == 0] for i in range(80))
    nfa = single_word_nfa(word)
    params = compute_params(1, 0.5, 80, 82, n_s=10, n_t=3)
    for seed in range(3):
        assert count_nfa_detailed(nfa, 80, 1, 0.5, seed=seed, params=params).estimate == 1


def test_python_backend_estimate_reasonable():
    nfa = random_nfa(4, 0.4, seed=3, n=5)
    exact = language_sizes(unroll(normalize(nfa), 5))[-1][0]
    est = count_nfa(nfa, 5, 1, 1, seed=3, backend="python")
    assert exact / 2 <= est <= 2 * exact
