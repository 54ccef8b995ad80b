"""Exact rational probabilities and keyed counter-based randomness.

Every random decision in a run is a pure function of the master seed and a
key ``(trial, layer, state, replica, phase, item)``, evaluated with the
Philox4x64-10 block cipher.  A Bernoulli(a/b) draw compares a uniform
U in [0, 1), revealed 64 bits at a time, against the binary expansion of
a/b and stops at the first differing chunk.  This is exact: the draw is
true with probability a/b, with no rounding anywhere.
"""

from __future__ import annotations

import decimal
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

MASK64 = (1 << 64) - 1

# Philox4x64 round multipliers and Weyl key increments (Salmon et al., SC'11).
PHILOX_M0 = 0xD2E7470EE14C6C93
PHILOX_M1 = 0xCA5A826395121157
PHILOX_W0 = 0x9E3779B97F4A7C15
PHILOX_W1 = 0xBB67AE8584CAA73B
PHILOX_ROUNDS = 10

# bit layout of the second key word
TRIAL_SHIFT = 40
LAYER_SHIFT = 20
FIELD_MASK = (1 << 20) - 1

PHASE_FINAL = 0  # the closing reduce of a state; predecessor j uses phase j + 1

INF = math.inf

Prob = Fraction  # values in [0, 1]; ``INF`` marks an infinite inverse-median


def philox4x64(ctr: Sequence[int], key: Sequence[int]) -> tuple[int, int, int, int]:
    c0, c1, c2, c3 = ctr
    k0, k1 = key
    for _ in range(PHILOX_ROUNDS):
        p0 = c0 * PHILOX_M0
        p1 = c2 * PHILOX_M1
        c0, c1, c2, c3 = (p1 >> 64) ^ c1 ^ k0, p1 & MASK64, (p0 >> 64) ^ c3 ^ k1, p0 & MASK64
        k0 = (k0 + PHILOX_W0) & MASK64
        k1 = (k1 + PHILOX_W1) & MASK64
    return c0, c1, c2, c3


def stream_key(seed: int, trial: int, layer: int, state: int) -> tuple[int, int]:
    if not (0 <= trial < 1 << 24 and 0 <= layer <= FIELD_MASK and 0 <= state <= FIELD_MASK):
        raise ValueError("stream key field out of range")
    return seed & MASK64, (trial << TRIAL_SHIFT) | (layer << LAYER_SHIFT) | state


@dataclass(frozen=True)
class RandomStream:
    """Uniform bits for one (seed, trial, layer, state, replica, phase) key.

    ``chunk(item, c)`` is the c-th 64-bit chunk of the uniform attached to
    ``item``; the four lanes of one Philox block serve chunks 4t..4t+3.
    """

    seed: int
    trial: int
    layer: int
    state: int
    replica: int
    phase: int

    @property
    def key(self) -> tuple[int, int]:
        return stream_key(self.seed, self.trial, self.layer, self.state)

    def block(self, item: int, block: int) -> tuple[int, int, int, int]:
        return philox4x64((item, self.replica, (self.phase << 32) | block, 0), self.key)

    def chunk(self, item: int, c: int) -> int:
        return self.block(item, c >> 2)[c & 3]


def _check_prob(p) -> Fraction:
    if p is INF or p == INF:
        raise ValueError("cannot draw with an infinite probability")
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise ValueError(f"probability {p} outside [0, 1]")
    return p


def expansion(p: Fraction, start: int = 0):
    """Yield (digit, exhausted) for the base-2^64 expansion of p in [0, 1),
    starting at digit ``start``; ``exhausted`` is true once the expansion ended."""
    num, den = p.numerator, p.denominator
    if start:
        num = (num << (64 * start)) % den
    while True:
        num <<= 64
        digit, num = divmod(num, den)
        yield digit, num == 0


def bernoulli_tail(p: Fraction, stream: RandomStream, item: int, start: int = 0) -> bool:
    """Resolve U < p from chunk ``start`` on, assuming chunks before it tied."""
    c = start
    for digit, exhausted in expansion(p, start):
        u = stream.chunk(item, c)
        if u != digit:
            return u < digit
        if exhausted:
            return False
        c += 1
    raise AssertionError("unreachable")


def bernoulli(p, stream: RandomStream, item: int = 0) -> bool:
    """True with probability exactly p (a rational in [0, 1])."""
    p = _check_prob(p)
    if p == 1:
        return True
    if p == 0:
        return False
    return bernoulli_tail(p, stream, item)


TABLE_DIGITS = 4


@dataclass(frozen=True)
class DrawTable:
    """Precomputed form of a Bernoulli parameter for the kernels.

    kind: 0 never, 1 always, 2 compare.  ``digits`` are the first
    TABLE_DIGITS base-2^64 digits of p; ``stop`` is the index of the last
    digit if the expansion ends within them, else TABLE_DIGITS.  Ties past
    the table are settled by ``bernoulli_tail``.
    """

    p: Fraction
    kind: int
    stop: int
    digits: tuple[int, ...]


def draw_table(p) -> DrawTable:
    p = _check_prob(p)
    if p == 0:
        return DrawTable(p, 0, 0, (0,) * TABLE_DIGITS)
    if p == 1:
        return DrawTable(p, 1, 0, (0,) * TABLE_DIGITS)
    digits = []
    stop = TABLE_DIGITS
    for i, (d, exhausted) in enumerate(expansion(p)):
        digits.append(d)
        if exhausted:
            stop = i
        if exhausted or len(digits) == TABLE_DIGITS:
            break
    digits += [0] * (TABLE_DIGITS - len(digits))
    return DrawTable(p, 2, stop, tuple(digits))


def divide(a, b):
    """a / b, where x/0 is INF for x != 0 and 0/0 is 0."""
    if b == 0:
        return Fraction(0) if a == 0 else INF
    if b == INF:
        return Fraction(0)
    if a == INF:
        return INF
    return Fraction(a) / Fraction(b)


def invert(p):
    return divide(1, p)


def decimal_string(x) -> str:
    """Shortest decimal that round-trips through a double; integers print bare."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    try:
        return repr(float(x))
    except OverflowError:
        with decimal.localcontext() as ctx:
            ctx.prec = 17
            return str(decimal.Decimal(x.numerator) / decimal.Decimal(x.denominator))


def median(values: Sequence):
    """Lower median: the element at sorted index (len - 1) // 2."""
    if not values:
        raise ValueError("median of an empty sequence")
    return sorted(values)[(len(values) - 1) // 2]
