"""Statistics over all D^n paths, grouped by binned empirical histogram.

A path picks one of the D labels in each of n trials.  Two paths with the
same bin histogram have the same binned empirical measure, so the D^n paths
collapse onto at most ``C(n+m-1, m-1)`` histogram states.  The per-state path
counts satisfy ``count(c + e_b) += count(c) * d_i[b]`` where ``d_i[b]`` is the
number of labels of trial ``i`` falling in bin ``b``.

Histograms are stored as base-(n+1) integer keys; counts are exact int64 or
Python ints while ``D^n < 2^127`` and natural logs beyond that.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContractError, SizeError
from .lp import lp_distance, lp_distance_grid_batch
from .measures import AtomicMeasure, BinnedMeasure, bin_index
from .simulate import Environment

MAX_STATES = 10**7
EXACT_LIMIT_BITS = 127


@dataclass(frozen=True, eq=False)
class PathHistogram:
    n: int
    D: int
    m: int
    states: np.ndarray = field(repr=False)  # (S, m) bin counts, each row sums to n
    counts: np.ndarray = field(repr=False)  # exact path counts, or log counts in "log" mode
    mode: str  # "int64", "bigint" or "log"

    @property
    def exact(self) -> bool:
        return self.mode != "log"

    def total(self):
        if self.exact:
            return sum(int(c) for c in self.counts)
        return float(np.logaddexp.reduce(self.counts))

    def as_dict(self) -> dict[tuple[int, ...], int | float]:
        vals = self.counts.tolist()
        return {tuple(int(x) for x in s): v for s, v in zip(self.states, vals)}

    def measures(self) -> np.ndarray:
        """Binned empirical measure of each state (mass 1/n per trial)."""
        return self.states / self.n


def _bin_multiplicities(env: Environment, m: int) -> np.ndarray:
    bins = bin_index(env.unit_labels(), m)
    d = np.zeros((env.n, m), dtype=np.int64)
    for j in range(env.D):
        np.add.at(d, (np.arange(env.n), bins[:, j]), 1)
    return d


def _decode(keys: np.ndarray, base: int, m: int) -> np.ndarray:
    out = np.empty((keys.size, m), dtype=np.int64)
    k = keys.copy()
    for b in range(m):
        out[:, b] = k % base
        k //= base
    return out


def path_histogram_dp(env: Environment, m: int) -> PathHistogram:
    """Exact number of paths reaching each bin histogram."""
    n, D = env.n, env.D
    if math.comb(n + m - 1, m - 1) > MAX_STATES:
        raise SizeError(f"C(n+m-1, m-1) = {math.comb(n + m - 1, m - 1)} exceeds {MAX_STATES}")
    base = n + 1
    if base**m >= 2**63:
        raise SizeError("histogram keys do not fit in 64 bits; reduce n or m")
    bits = n * math.log2(D) if D > 1 else 0.0
    mode = "int64" if bits < 62 else ("bigint" if bits < EXACT_LIMIT_BITS else "log")
    d = _bin_multiplicities(env, m)
    powers = base ** np.arange(m, dtype=np.int64)
    keys = np.zeros(1, dtype=np.int64)
    if mode == "int64":
        counts = np.ones(1, dtype=np.int64)
    elif mode == "bigint":
        counts = np.array([1], dtype=object)
    else:
        counts = np.zeros(1)
    for i in range(n):
        new_keys, new_counts = [], []
        for b in np.nonzero(d[i])[0]:
            new_keys.append(keys + powers[b])
            if mode == "log":
                new_counts.append(counts + math.log(d[i, b]))
            else:
                new_counts.append(counts * int(d[i, b]))
        keys = np.concatenate(new_keys)
        counts = np.concatenate(new_counts)
        order = np.argsort(keys, kind="stable")
        keys, counts = keys[order], counts[order]
        starts = np.concatenate([[0], np.nonzero(np.diff(keys))[0] + 1])
        keys = keys[starts]
        if mode == "log":
            counts = np.logaddexp.reduceat(counts, starts)
        else:
            counts = np.add.reduceat(counts, starts)
    return PathHistogram(n, D, m, _decode(keys, base, m), counts, mode)


def state_distances(hist: PathHistogram, nu: BinnedMeasure) -> np.ndarray:
    """LP distance from each state's measure to ``nu``, atoms at bin centers."""
    if nu.m != hist.m:
        raise ContractError(f"nu has {nu.m} bins, histogram has {hist.m}")
    if hist.n == 0:
        return np.zeros(len(hist.states))
    return lp_distance_grid_batch(hist.measures(), nu.weights / nu.total)


@dataclass
class PathStatsReport:
    n: int
    D: int
    m: int
    mode: str
    eps_list: list[float]
    counts: list  # N_n(eps), exact ints or log counts in "log" mode
    slopes: list[float]
    order_stats: list[tuple[int, float]]


def _sorted_by_distance(hist: PathHistogram, nu: BinnedMeasure):
    dist = state_distances(hist, nu)
    order = np.argsort(dist, kind="stable")
    return dist[order], hist.counts[order]


def order_statistics(env: Environment, nu: BinnedMeasure, m: int, ranks: Sequence[int],
                     hist: PathHistogram | None = None) -> list[tuple[int, float]]:
    """The j-th smallest path distance to ``nu`` for each requested rank j.

    Ranks beyond ``D^n`` give ``inf``.
    """
    hist = path_histogram_dp(env, m) if hist is None else hist
    if not hist.exact:
        raise ContractError("order statistics need exact counts")
    dist, counts = _sorted_by_distance(hist, nu)
    cum = np.cumsum(counts)
    total = int(cum[-1])
    out = []
    for j in ranks:
        j = int(j)
        if j < 1:
            raise ContractError("ranks start at 1")
        if j > total:
            out.append((j, math.inf))
            continue
        idx = int(np.searchsorted(cum, j, side="left"))
        out.append((j, float(dist[idx])))
    return out


def count_within(hist: PathHistogram, nu: BinnedMeasure, eps: float):
    """N_n(eps): number of paths with distance <= eps (log count in "log" mode)."""
    dist = state_distances(hist, nu)
    sel = dist <= eps + 1e-12
    if not hist.exact:
        return float(np.logaddexp.reduce(hist.counts[sel])) if sel.any() else -math.inf
    return sum(int(c) for c in hist.counts[sel])


def _log_count(c, exact: bool) -> float:
    if not exact:
        return c
    return math.log(c) if c > 0 else -math.inf


def entropy_slope(envs: Sequence[Environment], nu: BinnedMeasure, eps: float | Sequence[float],
                  m: int) -> list[dict]:
    """``(1/n) log N_n(eps)`` for each environment and eps."""
    eps_list = [eps] if np.isscalar(eps) else list(eps)
    out = []
    for env in envs:
        hist = path_histogram_dp(env, m)
        dist = state_distances(hist, nu)
        for e in eps_list:
            sel = dist <= e + 1e-12
            if hist.exact:
                c = sum(int(x) for x in hist.counts[sel])
            else:
                c = float(np.logaddexp.reduce(hist.counts[sel])) if sel.any() else -math.inf
            lc = _log_count(c, hist.exact)
            out.append({"n": env.n, "eps": float(e), "count": c,
                        "slope": lc / env.n if env.n else 0.0})
    return out


def path_stats(env: Environment, nu: BinnedMeasure, m: int, eps_list: Sequence[float],
               ranks: Sequence[int] = (1,)) -> PathStatsReport:
    hist = path_histogram_dp(env, m)
    dist = state_distances(hist, nu)
    counts, slopes = [], []
    for e in eps_list:
        sel = dist <= e + 1e-12
        if hist.exact:
            c = sum(int(x) for x in hist.counts[sel])
        else:
            c = float(np.logaddexp.reduce(hist.counts[sel])) if sel.any() else -math.inf
        counts.append(c)
        slopes.append(_log_count(c, hist.exact) / env.n if env.n else 0.0)
    order = order_statistics(env, nu, m, ranks, hist) if hist.exact else []
    return PathStatsReport(env.n, env.D, m, hist.mode, [float(e) for e in eps_list],
                           counts, slopes, order)


# -- brute-force oracle ------------------------------------------------------


def enumerate_paths(env: Environment, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Histogram of every one of the D^n paths, by explicit enumeration."""
    n, D = env.n, env.D
    if D**n > 2**22:
        raise SizeError("brute-force path enumeration is limited to 2^22 paths")
    bins = bin_index(env.unit_labels(), m)
    hists = np.zeros((D**n, m), dtype=np.int64)
    for p, choice in enumerate(itertools.product(range(D), repeat=n)):
        for i, j in enumerate(choice):
            hists[p, bins[i, j]] += 1
    return hists, bins


def brute_force_distances(env: Environment, nu: BinnedMeasure, m: int) -> np.ndarray:
    """Sorted LP distance of every path, each computed with the general solver."""
    hists, _ = enumerate_paths(env, m)
    target = nu.to_atoms()
    centers = (np.arange(m) + 0.5) / m
    cache: dict[bytes, float] = {}
    out = np.empty(len(hists))
    for p, h in enumerate(hists):
        key = h.tobytes()
        if key not in cache:
            mu = AtomicMeasure(centers, h / env.n)
            cache[key] = lp_distance(mu, AtomicMeasure(target.values, target.masses / target.total))
        out[p] = cache[key]
    return np.sort(out)
