"""Environment sampling, strategy execution and Glivenko-Cantelli checks.

Randomness comes from numpy's Philox-4x64 counter-based generator.  Stream
``s`` of seed ``seed`` is Philox keyed by ``(seed, s)``; the label of trial
``i``, sample ``j`` is output number ``i * D + j`` of stream 0 and the choice
uniform of trial ``i`` is output ``i`` of stream 1.  Any slice of trials can
therefore be regenerated on its own, and chunked or parallel runs reproduce
the sequential one exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ContractError, SizeError
from .lp import lp_distance
from .measures import AtomicMeasure, BinnedMeasure, RationalPmf, bin, total_variation
from .strategies import (
    MixtureStrategy,
    ScoredStrategy,
    Strategy,
    StrategyTable,
    sigma_discrete,
    sigma_scored_mc,
)

LABEL_STREAM = 0
CHOICE_STREAM = 1
MAX_LABELS = 10**9
REFERENCE_MC_SAMPLES = 10**6


def _key(seed: int, stream: int) -> list[int]:
    return [int(seed) % 2**64, stream]


def uniform_block(seed: int, stream: int, offset: int, count: int) -> np.ndarray:
    """Outputs ``offset .. offset+count-1`` of a stream as doubles in [0, 1)."""
    bitgen = np.random.Philox(key=_key(seed, stream))
    bitgen.advance(offset // 4)
    gen = np.random.Generator(bitgen)
    skip = offset % 4
    if skip:
        gen.random(skip)
    return gen.random(count)


@dataclass(frozen=True, eq=False)
class Environment:
    """``n`` trials of ``D`` i.i.d. labels; ``K`` is None for Unif[0,1] labels."""

    n: int
    D: int
    labels: np.ndarray = field(repr=False)
    seed: int
    K: int | None = None

    @property
    def model(self) -> str:
        return "continuous" if self.K is None else "discrete"

    def head(self, n: int) -> Environment:
        return Environment(n, self.D, self.labels[:n], self.seed, self.K)

    def unit_labels(self) -> np.ndarray:
        """Labels as points of [0, 1]; label k of K sits at (k - 1/2)/K."""
        if self.K is None:
            return self.labels
        return (self.labels - 0.5) / self.K


def _labels_from_uniforms(u: np.ndarray, K: int | None) -> np.ndarray:
    if K is None:
        return u
    return np.minimum(np.floor(u * K).astype(np.int64), K - 1) + 1


def iter_environment_rows(n: int, D: int, seed: int, K: int | None = None,
                          chunk: int = 1 << 18):
    """Yield ``(first_trial, rows)`` blocks of an environment without storing it."""
    for start in range(0, n, chunk):
        c = min(chunk, n - start)
        u = uniform_block(seed, LABEL_STREAM, start * D, c * D).reshape(c, D)
        yield start, _labels_from_uniforms(u, K)


def sample_environment(n: int, D: int, model: str = "continuous", seed: int = 0,
                       K: int | None = None) -> Environment:
    """i.i.d. labels from Unif[0,1] (``model="continuous"``) or Unif{1..K}."""
    if model not in ("continuous", "discrete"):
        raise ContractError(f"unknown model {model!r}")
    if model == "discrete" and (K is None or K < 1):
        raise ContractError("the discrete model needs K >= 1")
    if n < 0 or D < 1:
        raise ContractError("need n >= 0 and D >= 1")
    if n * D > MAX_LABELS:
        raise SizeError(f"n*D = {n * D} exceeds {MAX_LABELS}; use iter_environment_rows")
    K = K if model == "discrete" else None
    if n == 0:
        labels = np.empty((0, D), dtype=np.int64 if K else float)
    else:
        labels = np.concatenate([rows for _, rows in iter_environment_rows(n, D, seed, K)])
    return Environment(n, D, labels, seed, K)


@dataclass(frozen=True, eq=False)
class RunResult:
    choices: np.ndarray  # 1-based positions
    values: np.ndarray
    empirical: AtomicMeasure
    K: int | None = None

    def empirical_pmf(self) -> np.ndarray:
        if self.K is None:
            raise ContractError("empirical_pmf is only defined for the discrete model")
        return np.bincount(self.values - 1, minlength=self.K) / max(len(self.values), 1)


def _check_domain(strategy: Strategy, env: Environment) -> None:
    if isinstance(strategy, MixtureStrategy):
        for c in strategy.components:
            _check_domain(c, env)
        return
    if isinstance(strategy, StrategyTable):
        if env.K is None or strategy.K != env.K or strategy.D != env.D:
            raise ContractError("table strategy does not match the environment's K and D")
    elif isinstance(strategy, ScoredStrategy):
        if env.K is not None:
            raise ContractError("scored strategies act on the continuous model")
        if strategy.D is not None and strategy.D != env.D:
            raise ContractError("scored strategy D does not match the environment")
    else:
        raise ContractError(f"unsupported strategy {type(strategy).__name__}")


def run(env: Environment, strategy: Strategy | Sequence[Strategy], seed: int) -> RunResult:
    """Apply a strategy (or one strategy per trial) to every trial of ``env``."""
    n = env.n
    u = uniform_block(seed, CHOICE_STREAM, 0, n)
    pos = np.zeros(n, dtype=np.int64)
    if isinstance(strategy, (list, tuple)):
        if len(strategy) != n:
            raise ContractError(f"got {len(strategy)} per-trial strategies for {n} trials")
        groups: dict[int, list[int]] = {}
        lookup: dict[int, Strategy] = {}
        for i, s in enumerate(strategy):
            groups.setdefault(id(s), []).append(i)
            lookup[id(s)] = s
        for key, idx in groups.items():
            s = lookup[key]
            _check_domain(s, env)
            idx = np.asarray(idx)
            pos[idx] = s.select(env.labels[idx], u[idx])
    else:
        _check_domain(strategy, env)
        if n:
            pos = strategy.select(env.labels, u)
    values = env.labels[np.arange(n), pos] if n else env.labels[:0, 0]
    unit = values if env.K is None else (values - 0.5) / env.K
    return RunResult(pos + 1, values, AtomicMeasure.empirical(unit), env.K)


def exact_target(strategy: Strategy, D: int, m: int, seed: int = 0) -> BinnedMeasure:
    """Chosen-value law at resolution m (K bins for tables).

    Closed forms are used when known; otherwise a seeded 10^6-sample
    Monte Carlo reference.
    """
    if isinstance(strategy, (StrategyTable,)) or (
        isinstance(strategy, MixtureStrategy) and strategy.is_discrete
    ):
        return sigma_discrete(strategy).to_binned()
    if isinstance(strategy, ScoredStrategy):
        cdf = strategy.closed_form_cdf(D)
        if cdf is not None:
            return BinnedMeasure.from_cdf(cdf, m)
    return sigma_scored_mc(strategy, D, REFERENCE_MC_SAMPLES, m, seed + 0x5EED)


@dataclass
class GlivenkoRow:
    n: int
    lp: float
    tv: float | None = None


@dataclass
class GlivenkoReport:
    rows: list[GlivenkoRow]
    trend: float  # least-squares slope of log(distance) against log(n)


def _empirical_binned(result: RunResult, m: int) -> BinnedMeasure:
    if result.K is not None:
        return BinnedMeasure(result.empirical_pmf())
    return bin(result.empirical, m)


def glivenko_check(strategy: Strategy, D: int, n_list: Sequence[int], m: int, seed: int,
                   K: int | None = None) -> GlivenkoReport:
    """Distance between the binned empirical law of the first n trials and the target."""
    discrete = isinstance(strategy, StrategyTable) or (
        isinstance(strategy, MixtureStrategy) and strategy.is_discrete
    )
    if discrete:
        K = strategy.K if isinstance(strategy, StrategyTable) else strategy.components[0].K
    env = sample_environment(max(n_list), D, "discrete" if discrete else "continuous", seed, K)
    full = run(env, strategy, seed)
    target = exact_target(strategy, D, m, seed)
    rows = []
    Kd = K if discrete else None
    for n in n_list:
        vals = full.values[:n]
        part = RunResult(full.choices[:n], vals, AtomicMeasure.empirical(_unit(vals, Kd)), Kd)
        emp = _empirical_binned(part, m)
        lp = lp_distance(emp.to_atoms(), target.to_atoms())
        tv = total_variation(emp, target) if discrete else None
        rows.append(GlivenkoRow(n, lp, tv))
    return GlivenkoReport(rows, _trend([r.n for r in rows], [r.lp for r in rows]))


def _unit(values: np.ndarray, K: int | None) -> np.ndarray:
    return values if K is None else (values - 0.5) / K


def _trend(ns: Sequence[int], ds: Sequence[float]) -> float:
    pts = [(math.log(n), math.log(d)) for n, d in zip(ns, ds) if d > 0 and n > 0]
    if len(pts) < 2:
        return float("nan")
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def averaged_strategy_check(strategies: Sequence[StrategyTable], D: int, n: int,
                            m: int | None, seed: int) -> float:
    """LP distance between the averaged exact law and the run's empirical law.

    Discrete labels live on K bins; ``m`` must be None or equal to K.
    """
    if len(strategies) != n:
        raise ContractError("need one strategy per trial")
    K = strategies[0].K
    if m is not None and m != K:
        raise ContractError("discrete strategies are compared on K bins")
    counts: dict[int, int] = {}
    lookup = {}
    for s in strategies:
        counts[id(s)] = counts.get(id(s), 0) + 1
        lookup[id(s)] = s
    pmfs = [sigma_discrete(lookup[k]) for k in counts]
    avg = RationalPmf.mix(pmfs, [Fraction(c, n) for c in counts.values()])
    env = sample_environment(n, D, "discrete", seed, K)
    result = run(env, list(strategies), seed)
    emp = BinnedMeasure(result.empirical_pmf())
    return lp_distance(avg.to_binned().to_atoms(), emp.to_atoms())
