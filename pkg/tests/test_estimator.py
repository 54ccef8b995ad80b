import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import as_words, nfas, single_word_nfa, total_nfa, word_core
from nfacount import _pykernel
from nfacount.automaton import Nfa, normalize
from nfacount.estimator import (
    CoreTrace,
    EstimatorError,
    StateEstimate,
    compute_params,
    count_nfa,
    count_nfa_core,
    count_nfa_detailed,
    estimate_and_sample,
    reduce,
)
from nfacount.exact import Word, derivation_run, language_sizes, membership
from nfacount.harness import random_nfa
from nfacount.probability import RandomStream, draw_table
from nfacount.unrolling import unroll


def small(n, m, n_s=6, n_t=5):
    return compute_params(1, Fraction(1, 5), n, m, n_s=n_s, n_t=n_t)


def test_params_worked_example():
    p = compute_params(1, 0.2, 4, 5)
    assert (p.kappa, p.n_s, p.n_t, p.n_u, p.theta) == (Fraction(1, 2), 360, 47, 13, 8121600)


def test_params_smallest_instance():
    assert compute_params(1, 0.5, 1, 1).n_t == 23


@given(st.fractions(min_value=Fraction(1, 1000), max_value=1000))
def test_kappa_in_unit_interval(eps):
    k = compute_params(eps, Fraction(1, 2), 3, 3).kappa
    assert 0 < k < 1


@settings(max_examples=50)
@given(st.integers(1, 200), st.integers(1, 200), st.fractions(min_value=Fraction(1, 100), max_value=1))
def test_params_agree_with_floats(n, m, delta):
    p = compute_params(Fraction(1, 2), delta, n, m)
    assert p.n_t == math.ceil(8 * math.log(16 * n * m))
    assert p.n_u == max(1, math.ceil(8 * math.log(1 / delta)))
    assert p.n_s == math.ceil(4 * (n + 1) * 4 * 1.5 / 0.25)


def test_params_delta_one_runs_once():
    assert compute_params(1, 1, 3, 3).n_u == 1


@pytest.mark.parametrize("eps, delta", [(0, 0.5), (-1, 0.5), (1, 0), (1, 1.5), (float("nan"), 0.5)])
def test_params_reject_bad_input(eps, delta):
    with pytest.raises(EstimatorError):
        compute_params(eps, delta, 3, 3)


def test_reduce_certain_probabilities():
    s = [Word(3, x) for x in range(8)]
    stream = RandomStream(1, 0, 1, 0, 0, 0)
    assert reduce(s, 1, stream) == s
    assert reduce(s, 0, stream) == []


def test_reduce_half_keeps_fifty_on_average():
    # 10^4 replicas of a 100-word set, through the kernel's reduce
    reps = 10**4
    words = np.tile(np.arange(100, dtype=np.int64), reps)
    offsets = np.arange(0, 100 * reps + 1, 100, dtype=np.int64)
    from nfacount.backend import _ckernel

    kernel = _ckernel or _pykernel
    kept, offs = kernel.reduce_sets(words, offsets, draw_table(Fraction(1, 2)), 5, 0, 1, 0, 0)
    mean = len(kept) / reps
    assert 47 <= mean <= 53
    # the kernel keeps exactly the words the word-level reduce keeps
    for r in range(20):
        s = [Word(7, x) for x in range(100)]
        mine = reduce(s, Fraction(1, 2), RandomStream(5, 0, 1, 0, r, 0))
        assert [w.bits for w in mine] == kept[offs[r] : offs[r + 1]].tolist()


def test_layer_one_is_exact(sample13_u):
    sizes = language_sizes(sample13_u)
    for seed in range(5):
        trace = CoreTrace()
        count_nfa_core(sample13_u, small(4, 13), seed, trace=trace)
        for q in sample13_u.states(1):
            assert trace.estimates[q].p == Fraction(1, sizes[1][q.index])


def test_empty_predecessor_sets_give_rho(sample13_u):
    params = small(4, 13)
    q = sample13_u.locate("q5", 2)
    preds = sample13_u.pred_all(q)
    ests = {s: StateEstimate(Fraction(1, 3), Fraction(3), Fraction(1, 3), Fraction(1, 3), ()) for s in preds}
    samples = {s: [[] for _ in range(params.gamma)] for s in preds}
    est, final, hats = estimate_and_sample(sample13_u, q, ests, samples, params, seed=1)
    assert est.rho_hat == math.inf and est.p == est.rho == Fraction(1, 3)
    assert all(s == [] for s in final)


@pytest.mark.parametrize("scheme", ["reference", "cache1", "cache2"])
def test_word_level_loop_matches_core(sample13_u, scheme):
    params = small(4, 13)
    estimates, samples, hats = word_core(sample13_u, params, seed=21, trial=2)
    trace = CoreTrace(record_sets=True)
    out = count_nfa_core(sample13_u, params, 21, trial=2, scheme=scheme, trace=trace)
    assert out == estimates[sample13_u.final_state].N
    for q in sample13_u.all_states():
        assert trace.estimates[q].p == estimates[q].p
        assert as_words(q.layer, *trace.samples[q]) == samples[q]
        if q.layer:
            assert as_words(q.layer, *trace.hats[q]) == hats[q]


@settings(max_examples=15)
@given(nfas(max_m=5, multi=False), st.integers(1, 5), st.integers(0, 2**32))
def test_word_level_loop_matches_core_random(nfa, n, seed):
    u = unroll(normalize(nfa), n)
    if u.final_index is None:
        return
    params = small(n, u.m, n_s=3, n_t=3)
    estimates, samples, _ = word_core(u, params, seed)
    trace = CoreTrace(record_sets=True)
    count_nfa_core(u, params, seed, trace=trace)
    for q in u.all_states():
        assert trace.estimates[q].p == estimates[q].p
        assert as_words(q.layer, *trace.samples[q]) == samples[q]


def test_sample_soundness_and_run_filtering(sample13_u):
    trace = CoreTrace(record_sets=True)
    count_nfa_core(sample13_u, small(4, 13, n_s=20, n_t=5), 3, trace=trace)
    sets = {q: as_words(q.layer, *trace.samples[q]) for q in sample13_u.all_states()}
    for q in sample13_u.all_states():
        if not q.layer:
            continue
        hats = as_words(q.layer, *trace.hats[q])
        for r, hat in enumerate(hats):
            assert set(sets[q][r]) <= set(hat)
            assert len(set(hat)) == len(hat)
            for w in hat:
                assert membership(sample13_u, w, q)
                # the contributor is the run's second-to-last state, and it held the prefix
                via = derivation_run(sample13_u, w, q).states[-2]
                assert w.prefix(q.layer - 1) in sets[via][r]


def test_monotone_estimates(sample13_u):
    trace = CoreTrace()
    count_nfa_core(sample13_u, compute_params(1, 0.2, 4, 13), 8, trace=trace)
    for q in sample13_u.all_states():
        if q.layer:
            est = trace.estimates[q]
            assert est.p <= min(trace.estimates[s].p for s in sample13_u.pred_all(q))
            assert est.p <= est.rho <= 1
            assert est.N == 1 / est.p


def test_interrupt_returns_zero(sample13_u):
    params = small(4, 13)
    tiny = type(params)(**{**params.__dict__, "theta": Fraction(params.gamma + 5)})
    trace = CoreTrace()
    assert count_nfa_core(sample13_u, tiny, 1, trace=trace) == 0
    assert trace.early_zero and trace.total >= tiny.theta


def test_nonzero_output_means_total_below_theta(sample13_u):
    params = compute_params(1, 0.2, 4, 13)
    for seed in range(5):
        trace = CoreTrace()
        out = count_nfa_core(sample13_u, params, seed, trace=trace)
        assert out > 0 and not trace.early_zero
        assert trace.total < params.theta and trace.layers_done == 4


def test_single_word_is_exact():
    for seed in range(5):
        assert count_nfa(single_word_nfa("0110100"), 7, 1, 0.2, seed=seed) == 1


def test_empty_slice_is_zero():
    even = Nfa(("e", "o"), ("e",), ("e",), (("e", 0, "o"), ("o", 1, "e")))
    assert count_nfa(even, 5, 1, 0.2) == 0
    res = count_nfa_detailed(even, 5, 1, 0.2)
    assert res.n_cores_run == 0 and res.params is None


def test_length_zero():
    assert count_nfa(total_nfa(), 0, 1, 0.2) == 1
    assert count_nfa(single_word_nfa("1"), 0, 1, 0.2) == 0


def test_count_rejects_bad_arguments():
    with pytest.raises(EstimatorError):
        count_nfa(total_nfa(), 3, 0, 0.2)
    with pytest.raises(EstimatorError):
        count_nfa(total_nfa(), 3, 1, 0.2, scheme="cache3")


def test_core_requires_nonempty_slice():
    even = Nfa(("e", "o"), ("e",), ("e",), (("e", 0, "o"), ("o", 1, "e")))
    with pytest.raises(ValueError):
        count_nfa_core(unroll(normalize(even), 3), small(3, 2), 0)


def test_jobs_do_not_change_the_result(sample13):
    a = count_nfa_detailed(sample13, 4, 1, 0.5, seed=4, jobs=1)
    b = count_nfa_detailed(sample13, 4, 1, 0.5, seed=4, jobs=3)
    assert a.core_outputs == b.core_outputs and a.estimate == b.estimate


def test_trials_are_independent_and_reproducible(sample13):
    res = count_nfa_detailed(sample13, 4, 1, 0.2, seed=4)
    assert len(set(res.core_outputs)) > 1
    assert res.core_outputs == count_nfa_detailed(sample13, 4, 1, 0.2, seed=4).core_outputs


def test_float_mode_stays_close(sample13):
    exact = count_nfa(sample13, 4, 1, 0.2, seed=2)
    rounded = count_nfa(sample13, 4, 1, 0.2, seed=2, float_mode=True)
    assert abs(float(exact) - float(rounded)) <= 1e-9 * float(exact)


def test_random_instances_within_factor_two():
    ok = 0
    for seed in range(10):
        nfa = random_nfa(5, 0.35, seed=seed, n=8)
        exact = language_sizes(unroll(normalize(nfa), 8))[-1][0]
        ok += exact / 2 <= count_nfa(nfa, 8, 1, 0.2, seed=seed) <= 2 * exact
    assert ok >= 8
