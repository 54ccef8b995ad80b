"""Approximate and exact counting of the length-n words accepted by a binary NFA."""

from .automaton import Nfa, NfaError, NormalizedNfa, load_nfa, normalize, parse_nfa, serialize_nfa
from .backend import compiled_available
from .estimator import CoreTrace, EstimatorParams, compute_params, count_nfa, count_nfa_core, count_nfa_detailed
from .exact import Word, count_exact_dp, count_exact_enum, derivation_run, divergence_class, lcps, membership
from .unrolling import LayerState, UnrolledNfa, slice_nonempty, unroll

__all__ = [
    "CoreTrace",
    "EstimatorParams",
    "LayerState",
    "Nfa",
    "NfaError",
    "NormalizedNfa",
    "UnrolledNfa",
    "Word",
    "compiled_available",
    "compute_params",
    "count_exact_dp",
    "count_exact_enum",
    "count_nfa",
    "count_nfa_core",
    "count_nfa_detailed",
    "derivation_run",
    "divergence_class",
    "lcps",
    "load_nfa",
    "membership",
    "normalize",
    "parse_nfa",
    "serialize_nfa",
    "slice_nonempty",
    "unroll",
]
