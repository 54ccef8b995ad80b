"""Command-line entry point.

    nfacount count AUTOMATON.json --n 8 --epsilon 1 --delta 0.2 --seed 7
    nfacount exact AUTOMATON.json --n 8 --oracle dp
    nfacount bench --grid grid.json --format csv
    nfacount dump-unrolled AUTOMATON.json --n 4

Input errors exit with status 2 and a JSON object ``{"error": code, ...}``
on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .automaton import NfaError, load_nfa, normalize
from .estimator import SCHEMES, EstimatorError, as_fraction, count_nfa_detailed
from .exact import OracleLimitError
from .harness import HarnessError, TrialConfig, _exact_count, run_trials, write_csv, write_jsonl
from .probability import decimal_string
from .unrolling import unroll

SEED_ENV = "NFACOUNT_SEED"
U64 = (1 << 64) - 1


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value <= U64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _nonneg(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nfacount", description="Count the length-n words accepted by a binary NFA.")
    sub = parser.add_subparsers(dest="command", required=True)

    count = sub.add_parser("count", help="approximate count with the (1 +- epsilon, 1 - delta) guarantee")
    count.add_argument("input")
    count.add_argument("--n", type=_nonneg, required=True)
    count.add_argument("--epsilon", type=str, required=True)
    count.add_argument("--delta", type=str, required=True)
    count.add_argument("--seed", type=_seed, default=None, help=f"master seed (default: ${SEED_ENV} or 0)")
    count.add_argument("--scheme", choices=SCHEMES, default="cache2")
    count.add_argument("--exact", choices=("enum", "dp", "off"), default="off",
                       help="also report an exact count from the chosen oracle")
    count.add_argument("--jobs", type=int, default=1)
    count.add_argument("--float-mode", action="store_true",
                       help="round the inverse medians to doubles (faster, not certified)")
    count.add_argument("--backend", choices=("auto", "compiled", "python"), default=None)
    count.add_argument("--no-timing", action="store_true", help="report runtime_ms as 0 for reproducible output")

    exact = sub.add_parser("exact", help="exact count")
    exact.add_argument("input")
    exact.add_argument("--n", type=_nonneg, required=True)
    exact.add_argument("--oracle", choices=("enum", "dp"), default="dp")

    bench = sub.add_parser("bench", help="run a grid of seeded trials")
    bench.add_argument("--grid", required=True, help="JSON grid configuration")
    bench.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    bench.add_argument("--jobs", type=int, default=None)
    bench.add_argument("--no-timing", action="store_true")

    dump = sub.add_parser("dump-unrolled", help="print the unrolled automaton as JSON")
    dump.add_argument("input")
    dump.add_argument("--n", type=_nonneg, required=True)
    return parser


def _load(path: str):
    try:
        return load_nfa(path)
    except OSError as exc:
        raise CliError("io_error", f"cannot read {path}: {exc.strerror}") from exc


def _count(args) -> dict:
    seed = args.seed
    if seed is None:
        env = os.environ.get(SEED_ENV)
        try:
            seed = _seed(env) if env else 0
        except argparse.ArgumentTypeError as exc:
            raise CliError("invalid_parameter", f"{SEED_ENV}: {exc}") from exc
    eps = as_fraction(args.epsilon, "epsilon")
    dlt = as_fraction(args.delta, "delta")
    nfa = _load(args.input)
    res = count_nfa_detailed(nfa, args.n, eps, dlt, seed=seed, scheme=args.scheme, jobs=max(1, args.jobs),
                             float_mode=args.float_mode, backend=args.backend)
    out = {
        "estimate": decimal_string(res.estimate),
        "estimate_rational": f"{res.estimate.numerator}/{res.estimate.denominator}",
        "params": res.params.to_json() if res.params else None,
        "n_cores_run": res.n_cores_run,
        "seed": seed,
        "scheme": args.scheme,
        "float_mode": args.float_mode,
        "runtime_ms": 0 if args.no_timing else round(res.runtime_ms, 3),
    }
    if args.exact != "off":
        out["exact"] = _exact_count(nfa, args.n, args.exact)
    return out


def _dump(args) -> str:
    nfa = normalize(_load(args.input))
    if args.n == 0:
        return json.dumps({"n": 0, "layers": [[nfa.initial]], "accepts_empty": nfa.accepts_empty})
    return unroll(nfa, args.n).to_json()


def _bench(args, stdout) -> None:
    try:
        with open(args.grid) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise CliError("io_error", f"cannot read {args.grid}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise CliError("bad_grid", f"grid is not valid JSON: {exc}") from exc
    config = TrialConfig.from_json(data)
    if args.jobs is not None:
        config.jobs = args.jobs
    config.timing = not args.no_timing
    reports = run_trials(config)
    (write_csv if args.format == "csv" else write_jsonl)(reports, stdout)


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        if args.command == "count":
            stdout.write(json.dumps(_count(args)) + "\n")
        elif args.command == "exact":
            stdout.write(f"{_exact_count(_load(args.input), args.n, args.oracle)}\n")
        elif args.command == "bench":
            _bench(args, stdout)
        else:
            stdout.write(_dump(args) + "\n")
    except (NfaError, EstimatorError, OracleLimitError, HarnessError, CliError) as exc:
        stderr.write(json.dumps({"error": exc.code, "message": str(exc)}) + "\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
