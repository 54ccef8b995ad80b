"""Time one core run on the compiled kernel and on the pure-Python kernel.

    python3 benchmarks/bench_backends.py --repeat 3
    python3 benchmarks/bench_backends.py --sizes 4x6 6x8 --n-s 200 --n-t 10

Both backends consume the same random bits, so the script also checks that
they return the same value before reporting the speedup.
"""

from __future__ import annotations

import argparse
import statistics
import sys
import time

from nfacount import backend
from nfacount.automaton import normalize
from nfacount.estimator import compute_params, count_nfa_core
from nfacount.harness import random_nfa
from nfacount.unrolling import unroll


def parse_size(text: str) -> tuple[int, int]:
    m, n = text.lower().split("x")
    return int(m), int(n)


def time_core(u, params, seed, which, repeat):
    times, value = [], None
    for _ in range(repeat):
        start = time.perf_counter()
        value = count_nfa_core(u, params, seed, backend=which)
        times.append(time.perf_counter() - start)
    return value, statistics.median(times)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", nargs="+", type=parse_size, default=[(3, 5), (4, 6), (6, 8)],
                    help="instances as MxN (states x word length)")
    ap.add_argument("--density", type=float, default=0.35)
    ap.add_argument("--n-s", type=int, default=120, help="samples per batch (kept small for the Python kernel)")
    ap.add_argument("--n-t", type=int, default=8, help="number of batches")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    if not backend.compiled_available():
        print("compiled kernel not built; nothing to compare", file=sys.stderr)
        return 1

    print(f"{'m':>3} {'n':>3} {'compiled ms':>12} {'python ms':>12} {'speedup':>8}")
    for m, n in args.sizes:
        nfa = random_nfa(m, args.density, seed=args.seed + 97 * m + n, n=n)
        u = unroll(normalize(nfa), n)
        params = compute_params(1, 0.2, n, u.m, n_s=args.n_s, n_t=args.n_t)
        vc, tc = time_core(u, params, args.seed, "compiled", args.repeat)
        vp, tp = time_core(u, params, args.seed, "python", args.repeat)
        if vc != vp:
            print(f"backends disagree on {m}x{n}: {vc} vs {vp}", file=sys.stderr)
            return 1
        print(f"{m:>3} {n:>3} {tc * 1000:>12.1f} {tp * 1000:>12.1f} {tp / tc:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
