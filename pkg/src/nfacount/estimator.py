"""The approximate counter: parameters, reduce, union, per-state estimation
and the repeated core run with its median.

Two layers of code live here.  ``reduce``, ``union_reference`` and
``estimate_and_sample`` work on plain lists of ``Word`` objects and are
meant for reading and testing.  ``count_nfa_core`` runs the same
computation layer by layer through a kernel (see ``backend``) on flat
integer arrays, drawing the very same random bits, so both agree exactly.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from . import backend as _backend
from .automaton import Nfa, normalize
from .exact import Word, membership, reach_masks
from .probability import (
    INF,
    PHASE_FINAL,
    RandomStream,
    bernoulli,
    divide,
    draw_table,
    invert,
    median,
)
from .unrolling import LayerState, UnrolledNfa, slice_nonempty, unroll

SCHEMES = tuple(_backend.SCHEMES)


class EstimatorError(ValueError):
    code = "invalid_parameter"


def as_fraction(x, name: str) -> Fraction:
    if isinstance(x, float):
        if not math.isfinite(x):
            raise EstimatorError(f"{name} must be finite")
        # the decimal the user typed, not the nearest binary double
        return Fraction(repr(x))
    try:
        return Fraction(x)
    except (TypeError, ValueError) as exc:
        raise EstimatorError(f"{name} is not a number: {x!r}") from exc


def _ceil_log(scale: int, arg: Fraction) -> int:
    """ceil(scale * ln(arg)) with enough working precision to decide the ceiling."""
    if arg == 1:
        return 0
    for dps in (50, 200, 1000):
        with mpmath.workdps(dps):
            v = scale * mpmath.log(mpmath.mpf(arg.numerator) / arg.denominator)
            c = int(mpmath.ceil(v))
            if abs(v - mpmath.nint(v)) > mpmath.mpf(10) ** (-(dps // 2)):
                return c
    raise ArithmeticError(f"cannot resolve ceil({scale} ln {arg})")


@dataclass(frozen=True)
class EstimatorParams:
    epsilon: Fraction
    delta: Fraction
    n: int
    m: int
    kappa: Fraction
    n_s: int
    n_t: int
    n_u: int
    theta: Fraction

    @property
    def gamma(self) -> int:
        """Replicas per state."""
        return self.n_s * self.n_t

    def to_json(self) -> dict:
        return {
            "epsilon": str(self.epsilon),
            "delta": str(self.delta),
            "n": self.n,
            "m": self.m,
            "kappa": str(self.kappa),
            "n_s": self.n_s,
            "n_t": self.n_t,
            "n_u": self.n_u,
            "theta": str(self.theta),
        }


def compute_params(epsilon, delta, n: int, m: int, n_s: int | None = None, n_t: int | None = None,
                   n_u: int | None = None) -> EstimatorParams:
    """Evaluate the closed forms exactly.

    ``n_s``, ``n_t`` and ``n_u`` may be overridden for experiments that need a
    smaller run; theta is always derived from the values actually used.
    """
    eps = as_fraction(epsilon, "epsilon")
    dlt = as_fraction(delta, "delta")
    if eps <= 0:
        raise EstimatorError("epsilon must be positive")
    if not 0 < dlt <= 1:
        raise EstimatorError("delta must lie in (0, 1]")
    if n < 1 or m < 1:
        raise EstimatorError("n and m must be at least 1")
    kappa = eps / (1 + eps)
    if n_s is None:
        n_s = math.ceil(4 * (n + 1) * (1 + 2 * eps) ** 2 * (1 + eps) / eps**2)
    if n_t is None:
        n_t = _ceil_log(8, Fraction(16 * n * m))
    if n_u is None:
        # delta = 1 makes the closed form 0; one core run is the least that means anything
        n_u = max(1, _ceil_log(8, 1 / dlt))
    theta = 16 * n_s * n_t * n * (1 + kappa) * m
    return EstimatorParams(eps, dlt, n, m, kappa, n_s, n_t, n_u, theta)


# ---------------------------------------------------------------------------
# word-level reference operations


def reduce(s: Sequence[Word], p, stream: RandomStream) -> list[Word]:
    """Keep each word independently with probability p; the item index of a
    word is its position in ``s``."""
    return [w for item, w in enumerate(s) if bernoulli(p, stream, item)]


def _pred_layout(u: UnrolledNfa, q: LayerState):
    """For pred_all(q): 1-based position among the b-predecessors (0 if none),
    the mask of b-predecessors ranked before it, and the b-predecessor counts."""
    preds = u.pred_all(q)
    pair = u.preds[q.layer][q.index]
    bpos = np.zeros((2, len(preds)), np.int64)
    earlier = [[0] * len(preds), [0] * len(preds)]
    for j, s in enumerate(preds):
        for b in (0, 1):
            if s.index in pair[b]:
                k = pair[b].index(s.index)
                bpos[b, j] = k + 1
                earlier[b][j] = sum(1 << t for t in pair[b][:k])
    return preds, bpos, earlier, (len(pair[0]), len(pair[1]))


def union_reference(u: UnrolledNfa, q: LayerState, sets: Sequence[Sequence[Word]]) -> list[Word]:
    """Union of the extended predecessor sets where w.b is only taken from the
    first b-predecessor (in state order) whose language contains w.

    ``sets`` has one entry per state of ``pred_all(q)``.  The output lists
    symbol 0 first, then predecessors in order, then each set in its order.
    """
    preds, bpos, earlier, _ = _pred_layout(u, q)
    if len(sets) != len(preds):
        raise ValueError("one sample set per predecessor expected")
    for s, words in zip(preds, sets):
        for w in words:
            if not membership(u, w, s):
                raise ValueError(f"word {w} is not in the language of {s}")
    out = []
    for b in (0, 1):
        for j, words in enumerate(sets):
            if not bpos[b, j]:
                continue
            for w in words:
                if not reach_masks(u, w)[-1] & earlier[b][j]:
                    out.append(w.extend(b))
    return out


@dataclass(frozen=True)
class StateEstimate:
    p: Fraction
    N: Fraction
    rho: Fraction
    rho_hat: Fraction | float
    means: tuple[Fraction, ...]


def _finish_estimate(rho: Fraction, sizes: np.ndarray, n_s: int, n_t: int, float_mode: bool) -> StateEstimate:
    batch = sizes.reshape(n_t, n_s).sum(axis=1)
    scale = n_s * rho
    means = tuple(Fraction(int(x)) / scale for x in batch)
    # every mean shares the positive factor 1/scale, so rank the integer sums
    rho_hat = invert(Fraction(median(batch.tolist())) / scale)
    if float_mode and rho_hat != INF:
        rho_hat = Fraction(float(rho_hat))
    p = rho if rho_hat == INF or rho <= rho_hat else rho_hat
    return StateEstimate(p, 1 / p, rho, rho_hat, means)


def estimate_and_sample(u: UnrolledNfa, q: LayerState, estimates: dict, samples: dict, params: EstimatorParams,
                        seed: int, trial: int = 0, float_mode: bool = False):
    """One state of the core loop, on word lists.

    ``estimates`` and ``samples`` map the predecessors of q to their
    StateEstimate and their list of replica sets.  Returns the estimate of q,
    its reduced replica sets and the unreduced ones.
    """
    preds = u.pred_all(q)
    rho = min(estimates[s].p for s in preds)
    hats = []
    for r in range(params.gamma):
        reduced = [
            reduce(samples[s][r], divide(rho, estimates[s].p), RandomStream(seed, trial, q.layer, q.index, r, j + 1))
            for j, s in enumerate(preds)
        ]
        hats.append(union_reference(u, q, reduced))
    sizes = np.array([len(h) for h in hats], np.int64)
    est = _finish_estimate(rho, sizes, params.n_s, params.n_t, float_mode)
    ratio = divide(est.p, rho)
    final = [reduce(h, ratio, RandomStream(seed, trial, q.layer, q.index, r, PHASE_FINAL)) for r, h in enumerate(hats)]
    return est, final, hats


# ---------------------------------------------------------------------------
# array-level core


@dataclass
class CoreTrace:
    """What a core run exposes for inspection.

    Sample sets are stored as (word values, offsets) pairs, caches as
    (word values, entries) pairs, both keyed by layer-state or layer.
    """

    record_sets: bool = False
    record_caches: bool = False
    estimates: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)
    hats: dict = field(default_factory=dict)
    primes: dict = field(default_factory=dict)
    caches: dict = field(default_factory=dict)
    early_zero: bool = False
    total: int = 0
    layers_done: int = 0


def _extended_pool(pool: np.ndarray, dtype) -> np.ndarray:
    """Words of cache'_i in row order: every pooled word with 0, then with 1."""
    shifted = pool << (np.uint64(1) if dtype is np.uint64 else 1)
    return np.concatenate([shifted, shifted | (np.uint64(1) if dtype is np.uint64 else 1)]).astype(dtype)


def _row_values(ext: np.ndarray, ids: np.ndarray) -> np.ndarray:
    return ext[ids]


def count_nfa_core(u: UnrolledNfa, params: EstimatorParams, seed: int, trial: int = 0, scheme: str = "cache2",
                   trace: CoreTrace | None = None, backend: str | None = None, float_mode: bool = False) -> Fraction:
    """One core run: N(q_F) for the final layer, or 0 if the sample total reached theta."""
    if u.final_index is None:
        raise ValueError("empty slice: the core run needs an accepting layer-n state")
    if scheme not in _backend.SCHEMES:
        raise EstimatorError(f"unknown scheme {scheme!r}")
    kernel = _backend.select(u, backend)
    dtype = _backend.word_dtype(u, kernel)
    sid = _backend.SCHEMES[scheme]
    gamma, n_s, n_t = params.gamma, params.n_s, params.n_t
    theta = params.theta
    seed = int(seed)
    succ_all = _backend.successor_table(u, dtype)

    pool = np.zeros(1, dtype)
    rows = np.ones(1, dtype)
    p_prev = [Fraction(1)]
    sets_prev = [(np.zeros(gamma, np.int64), np.arange(gamma + 1, dtype=np.int64))]
    total = gamma
    if trace is not None:
        trace.estimates[LayerState(0, 0)] = StateEstimate(Fraction(1), Fraction(1), Fraction(1), Fraction(1), ())
        if trace.record_sets:
            trace.samples[LayerState(0, 0)] = (pool[sets_prev[0][0]], sets_prev[0][1])
        if trace.record_caches:
            trace.caches[0] = (pool.copy(), rows.copy())

    for layer in range(1, u.n + 1):
        ctx = _backend.make_context(u, layer, sid, dtype, pool, rows, succ_all)
        prime = kernel.compute_cache(ctx) if sid else None
        ctx.prime = prime
        ext = _extended_pool(pool, dtype)
        if trace is not None and trace.record_caches and sid:
            trace.primes[layer] = (ext, prime.copy())

        p_cur: list[Fraction] = []
        sets_cur = []
        for qi in range(u.width(layer)):
            q = LayerState(layer, qi)
            preds, bpos, earlier, kb = _pred_layout(u, q)
            rho = min(p_prev[s.index] for s in preds)
            tables = [draw_table(divide(rho, p_prev[s.index])) for s in preds]
            earlier_arr = np.array(earlier, dtype=dtype).reshape(2, len(preds))
            words, offs = kernel.expand_state(ctx, qi, [sets_prev[s.index] for s in preds], tables, bpos,
                                              earlier_arr, kb, seed, trial)
            est = _finish_estimate(rho, np.diff(offs), n_s, n_t, float_mode)
            table = draw_table(divide(est.p, rho))
            kept, kept_offs = kernel.reduce_sets(words, offs, table, seed, trial, layer, qi, PHASE_FINAL)
            total += len(kept)
            if trace is not None:
                trace.estimates[q] = est
                trace.total = total
                if trace.record_sets:
                    trace.hats[q] = (_row_values(ext, words), offs)
            p_cur.append(est.p)
            sets_cur.append((kept, kept_offs))
            if total >= theta:
                if trace is not None:
                    trace.early_zero = True
                return Fraction(0)

        # pool the sampled words of this layer, first occurrence first
        all_ids = np.concatenate([s[0] for s in sets_cur]) if sets_cur else np.zeros(0, np.int64)
        selected, lookup = kernel.first_occurrences(all_ids, len(ext))
        sets_prev = [(lookup[w], o) for w, o in sets_cur]
        new_pool = ext[selected]
        rows = kernel.update_cache(ctx, prime, selected) if sid else np.zeros(0, dtype)
        pool = new_pool
        p_prev = p_cur
        if trace is not None:
            trace.layers_done = layer
            if trace.record_sets:
                for qi, (w, o) in enumerate(sets_prev):
                    trace.samples[LayerState(layer, qi)] = (pool[w], o)
            if trace.record_caches and sid:
                trace.caches[layer] = (pool.copy(), rows.copy())

    return 1 / p_prev[u.final_index]


# ---------------------------------------------------------------------------
# repeated runs


@dataclass(frozen=True)
class CountResult:
    estimate: Fraction
    params: EstimatorParams | None
    core_outputs: tuple[Fraction, ...]
    runtime_ms: float

    @property
    def n_cores_run(self) -> int:
        return len(self.core_outputs)


def _core_job(args) -> Fraction:
    u, params, seed, trial, scheme, backend, float_mode = args
    return count_nfa_core(u, params, seed, trial, scheme, None, backend, float_mode)


def count_nfa_detailed(nfa: Nfa, n: int, epsilon, delta, seed: int = 0, scheme: str = "cache2", jobs: int = 1,
                       float_mode: bool = False, backend: str | None = None, params: EstimatorParams | None = None
                       ) -> CountResult:
    start = time.perf_counter()
    eps = as_fraction(epsilon, "epsilon")
    dlt = as_fraction(delta, "delta")
    if eps <= 0 or not 0 < dlt <= 1:
        raise EstimatorError("need epsilon > 0 and 0 < delta <= 1")
    if scheme not in _backend.SCHEMES:
        raise EstimatorError(f"unknown scheme {scheme!r}")
    if n < 0:
        raise EstimatorError("n must be non-negative")
    norm = normalize(nfa)

    def done(value, prm, outs):
        return CountResult(Fraction(value), prm, tuple(outs), (time.perf_counter() - start) * 1000)

    if n == 0:
        return done(int(norm.accepts_empty), None, ())
    u = unroll(norm, n)
    if not slice_nonempty(u):
        return done(0, None, ())
    if params is None:
        params = compute_params(eps, dlt, n, norm.m)
    jobs_args = [(u, params, seed, t, scheme, backend, float_mode) for t in range(params.n_u)]
    if jobs > 1 and params.n_u > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, params.n_u)) as pool:
            outs = list(pool.map(_core_job, jobs_args))
    else:
        outs = [_core_job(a) for a in jobs_args]
    return done(median(outs), params, outs)


def count_nfa(nfa: Nfa, n: int, epsilon, delta, seed: int = 0, scheme: str = "cache2", jobs: int = 1,
              float_mode: bool = False, backend: str | None = None) -> Fraction:
    """Approximate number of accepted length-n words (the lower median of n_u core runs)."""
    return count_nfa_detailed(nfa, n, epsilon, delta, seed, scheme, jobs, float_mode, backend).estimate
