"""Kernel selection and the per-layer context handed to the kernels.

The compiled kernel is used when it was built and the instance fits in
64-bit lanes; ``NFACOUNT_BACKEND`` (auto, compiled, python) overrides the
choice.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from types import ModuleType

import numpy as np

from . import _pykernel
from .unrolling import UnrolledNfa

try:
    from . import _kernel as _ckernel
except ImportError:  # extension not built
    _ckernel = None

SCHEMES = {"reference": 0, "cache1": 1, "cache2": 2}
ENV_VAR = "NFACOUNT_BACKEND"


def compiled_available() -> bool:
    return _ckernel is not None


def fits_compiled(u: UnrolledNfa) -> bool:
    return u.n <= 63 and u.max_width <= 64


def select(u: UnrolledNfa, name: str | None = None) -> ModuleType:
    choice = (name or os.environ.get(ENV_VAR) or "auto").lower()
    if choice not in ("auto", "compiled", "python"):
        raise ValueError(f"unknown backend {choice!r}")
    if choice == "python":
        return _pykernel
    if _ckernel is not None and fits_compiled(u):
        return _ckernel
    if choice == "compiled":
        raise RuntimeError("compiled kernel unavailable for this instance")
    return _pykernel


def word_dtype(u: UnrolledNfa, kernel: ModuleType):
    """uint64 lanes when everything fits, Python ints otherwise."""
    if kernel is not _pykernel or fits_compiled(u):
        return np.uint64
    return object


@dataclass
class LayerContext:
    """Read-only view of one layer for the kernels.

    ``prev_rows`` holds cache_{i-1} as one state bitmask per pooled word,
    ``pool`` the pooled words themselves, ``succ`` the successor masks into
    layer i and ``trans2`` the scheme-2 predecessor bits indexed
    ``[b][s][q]``.  ``prime`` is cache'_i once computed.
    """

    u: UnrolledNfa
    layer: int
    scheme: int
    dtype: object
    pool: np.ndarray
    prev_rows: np.ndarray
    succ: np.ndarray
    trans2: np.ndarray
    succ_all: np.ndarray
    prime: np.ndarray | None = field(default=None)

    @property
    def P(self) -> int:
        return len(self.pool)

    @property
    def width(self) -> int:
        return self.u.width(self.layer)


def transition_bits(u: UnrolledNfa, layer: int, dtype) -> np.ndarray:
    """trans2[b][s][q] = 1 << (k - j) when s is the j-th of k b-predecessors of q."""
    out = np.zeros((2, u.width(layer - 1), u.width(layer)), dtype=dtype)
    for q, pair in enumerate(u.preds[layer]):
        for b in (0, 1):
            k = len(pair[b])
            for j, s in enumerate(pair[b], start=1):
                out[b, s, q] = 1 << (k - j)
    return out


def successor_table(u: UnrolledNfa, dtype) -> np.ndarray:
    """succ_all[l][b][s] padded to the widest layer (row 0 unused)."""
    out = np.zeros((u.n + 1, 2, max(u.max_width, 1)), dtype=dtype)
    for layer in range(1, u.n + 1):
        for b in (0, 1):
            for s, mask in enumerate(u.succ[layer][b]):
                out[layer, b, s] = mask
    return out


def make_context(u: UnrolledNfa, layer: int, scheme: int, dtype, pool, prev_rows, succ_all) -> LayerContext:
    succ = np.zeros((2, u.width(layer - 1)), dtype=dtype)
    for b in (0, 1):
        for s, mask in enumerate(u.succ[layer][b]):
            succ[b, s] = mask
    trans2 = transition_bits(u, layer, dtype) if scheme == SCHEMES["cache2"] else np.zeros((2, 0, 0), dtype=dtype)
    return LayerContext(u, layer, scheme, dtype, pool, prev_rows, succ, trans2, succ_all)
