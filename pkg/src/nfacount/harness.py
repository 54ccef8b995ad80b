"""Random instances, seeded trial batches and their reports."""

from __future__ import annotations

import csv
import json
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import IO, Sequence

from .automaton import Nfa, normalize
from .estimator import as_fraction, count_nfa_detailed
from .exact import OracleLimitError, count_exact_dp, count_exact_enum
from .probability import decimal_string
from .unrolling import slice_nonempty, unroll


class HarnessError(RuntimeError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def random_nfa(m: int, density: float, seed: int, n: int | None = None, retries: int = 1000) -> Nfa:
    """Each of the 2 m^2 transitions independently present with probability ``density``.

    With ``n`` given, draws again (from the same generator) until some
    length-n word is accepted.
    """
    if m < 1:
        raise HarnessError("bad_instance", "m must be at least 1")
    if not 0 < density <= 1:
        raise HarnessError("bad_instance", "density must lie in (0, 1]")
    rng = random.Random(seed)
    states = tuple(f"s{i}" for i in range(m))
    for _ in range(retries):
        transitions = tuple(
            (p, b, q) for p in states for b in (0, 1) for q in states if rng.random() < density
        )
        nfa = Nfa(states, (rng.choice(states),), (rng.choice(states),), transitions)
        if n is None or _nonempty(nfa, n):
            return nfa
    raise HarnessError("retry_exhausted", f"no automaton with a non-empty length-{n} slice in {retries} draws")


def _nonempty(nfa: Nfa, n: int) -> bool:
    norm = normalize(nfa)
    if n == 0:
        return norm.accepts_empty
    return slice_nonempty(unroll(norm, n))


@dataclass(frozen=True)
class Instance:
    id: int
    m: int
    n: int
    density: float
    seed: int

    def build(self) -> Nfa:
        return random_nfa(self.m, self.density, self.seed, self.n)


def instance_grid(count: int, m_range: Sequence[int], n_range: Sequence[int], density: float, seed: int) -> list[Instance]:
    """``count`` instances with m and n drawn uniformly from the inclusive ranges."""
    rng = random.Random(seed)
    out = []
    for i in range(count):
        m = rng.randint(m_range[0], m_range[1])
        n = rng.randint(n_range[0], n_range[1])
        out.append(Instance(i, m, n, density, rng.getrandbits(63)))
    return out


@dataclass
class TrialConfig:
    instances: list[Instance] = field(default_factory=list)
    epsilon: Fraction | float = 1
    delta: Fraction | float = Fraction(1, 5)
    seeds: list[int] = field(default_factory=lambda: [0])
    schemes: list[str] = field(default_factory=lambda: ["cache2"])
    oracle: str = "dp"
    jobs: int = 1
    timing: bool = True

    @classmethod
    def from_json(cls, data: dict) -> "TrialConfig":
        try:
            if "random" in data:
                g = data["random"]
                instances = instance_grid(g["count"], g["m"], g["n"], g.get("density", 0.35), g.get("seed", 0))
            else:
                instances = [
                    Instance(i, d["m"], d["n"], d.get("density", 0.35), d["seed"])
                    for i, d in enumerate(data.get("instances", []))
                ]
            return cls(
                instances=instances,
                epsilon=Fraction(str(data.get("epsilon", 1))),
                delta=Fraction(str(data.get("delta", "0.2"))),
                seeds=list(data.get("seeds", [0])),
                schemes=list(data.get("schemes", ["cache2"])),
                oracle=data.get("oracle", "dp"),
                jobs=int(data.get("jobs", 1)),
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise HarnessError("bad_grid", f"malformed grid config: {exc}") from exc


@dataclass(frozen=True)
class TrialReport:
    instance_id: int
    m: int
    n: int
    epsilon: Fraction
    delta: Fraction
    seed: int
    scheme: str
    estimate: Fraction
    exact: int | None
    within_tolerance: bool | None
    early_zero: bool
    zero_cores: int
    wall_ms: float
    status: str

    def to_json(self) -> dict:
        d = asdict(self)
        d["epsilon"] = str(self.epsilon)
        d["delta"] = str(self.delta)
        d["estimate"] = decimal_string(self.estimate)
        d["estimate_rational"] = str(self.estimate)
        return d


def within(estimate: Fraction, exact: int, epsilon: Fraction) -> bool:
    return exact * (1 - epsilon) <= estimate <= exact * (1 + epsilon)


def _exact_count(nfa: Nfa, n: int, oracle: str) -> int | None:
    if oracle == "off":
        return None
    norm = normalize(nfa)
    if n == 0:
        return int(norm.accepts_empty)
    u = unroll(norm, n)
    return count_exact_enum(u) if oracle == "enum" else count_exact_dp(u)


def _run_one(args) -> TrialReport:
    inst, eps, dlt, seed, scheme, oracle, timing = args
    eps, dlt = as_fraction(eps, "epsilon"), as_fraction(dlt, "delta")
    nfa = inst.build()
    start = time.perf_counter()
    res = count_nfa_detailed(nfa, inst.n, eps, dlt, seed=seed, scheme=scheme)
    wall = (time.perf_counter() - start) * 1000 if timing else 0.0
    status = "ok"
    try:
        exact = _exact_count(nfa, inst.n, oracle)
    except OracleLimitError:
        exact, status = None, "no-exact"
    zero_cores = sum(1 for x in res.core_outputs if x == 0)
    return TrialReport(
        inst.id, inst.m, inst.n, eps, dlt, seed, scheme, res.estimate, exact,
        None if exact is None else within(res.estimate, exact, eps),
        res.estimate == 0 and zero_cores > 0, zero_cores, wall, status,
    )


def run_trials(config: TrialConfig) -> list[TrialReport]:
    """Every (instance, seed, scheme) combination, ordered by instance id, seed, scheme."""
    for s in config.schemes:
        if s not in ("reference", "cache1", "cache2"):
            raise HarnessError("bad_grid", f"unknown scheme {s!r}")
    if config.oracle not in ("enum", "dp", "off"):
        raise HarnessError("bad_grid", f"unknown oracle {config.oracle!r}")
    jobs = [
        (inst, config.epsilon, config.delta, seed, scheme, config.oracle, config.timing)
        for inst in sorted(config.instances, key=lambda i: i.id)
        for seed in config.seeds
        for scheme in config.schemes
    ]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]


def write_jsonl(reports: Sequence[TrialReport], fh: IO[str]) -> None:
    for r in reports:
        fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")


CSV_FIELDS = [
    "instance_id", "m", "n", "epsilon", "delta", "seed", "scheme", "estimate", "estimate_rational",
    "exact", "within_tolerance", "early_zero", "zero_cores", "wall_ms", "status",
]


def write_csv(reports: Sequence[TrialReport], fh: IO[str]) -> None:
    w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.to_json())
