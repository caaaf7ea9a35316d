"""Levy-Prokhorov distance between finite measures on [0, 1].

For equal total mass, Strassen's theorem turns ``rho(mu, nu) <= eps`` into a
transport question: some coupling must move at least ``total - eps`` of the
mass along pairs ``(x, y)`` with ``|x - y| <= eps``.  On the line the
admissible pairs form a convex bipartite graph (each source atom sees a
contiguous run of target atoms, and the runs move right monotonically), so
the maximum flow is found exactly by filling targets leftmost-first.

``g(eps) = total - M(eps)`` is a nonincreasing step function that only jumps
at pairwise distances, so ``rho = inf {eps : g(eps) <= eps}`` is either such a
distance or one of the plateau values of ``g``.  :func:`lp_distance` brackets
the crossing by bisection and then snaps to the exact candidate.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import ContractError, SizeError
from .measures import MASS_TOL, AtomicMeasure, BinnedMeasure

MAX_ATOMS = 10_000
ORACLE_MAX_SUPPORT = 14
_ZERO = 1e-15


def _windows(x: np.ndarray, y: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """For each x_i the half-open index range of y_j with |x_i - y_j| <= eps.

    The boundary is decided on the rounded difference ``abs(x - y)`` so that
    pairwise distances used as thresholds are admitted exactly.
    """
    lo = np.searchsorted(y, x - eps, side="left")
    hi = np.searchsorted(y, x + eps, side="right")
    n = y.size
    for i in range(x.size):
        xi = x[i]
        a = lo[i]
        while a > 0 and abs(xi - y[a - 1]) <= eps:
            a -= 1
        while a < n and abs(xi - y[a]) > eps and y[a] < xi:
            a += 1
        b = hi[i]
        while b < n and abs(y[b] - xi) <= eps:
            b += 1
        while b > a and abs(y[b - 1] - xi) > eps and y[b - 1] > xi:
            b -= 1
        lo[i], hi[i] = a, b
    return lo, hi


def max_transport(mu: AtomicMeasure, nu: AtomicMeasure, eps: float) -> float:
    """Largest mass a coupling can move along pairs at distance <= eps."""
    x, a = mu.values, mu.masses
    y, b = nu.values, nu.masses
    if x.size == 0 or y.size == 0:
        return 0.0
    lo, hi = _windows(x, y, eps)
    rem = b.astype(float).tolist()
    moved = 0.0
    j = 0
    for i in range(x.size):
        need = float(a[i])
        if j < lo[i]:
            j = int(lo[i])
        k = j
        end = int(hi[i])
        while need > _ZERO and k < end:
            r = rem[k]
            if r > _ZERO:
                take = r if r < need else need
                rem[k] = r - take
                need -= take
                moved += take
            if rem[k] <= _ZERO:
                if k == j:
                    j += 1
                k += 1
            # remaining capacity at k is positive only when need is exhausted
    return moved


def _deficit(mu: AtomicMeasure, nu: AtomicMeasure, eps: float, total: float) -> float:
    g = total - max_transport(mu, nu, eps)
    return 0.0 if g < 1e-14 else g


def _largest_distance_at_most(mu: AtomicMeasure, nu: AtomicMeasure, t: float) -> float:
    """max{|x - y| : |x - y| <= t} over atom pairs (-inf if none)."""
    x, y = mu.values, nu.values
    lo, hi = _windows(x, y, t)
    best = -math.inf
    for i in range(x.size):
        if hi[i] > lo[i]:
            best = max(best, abs(x[i] - y[lo[i]]), abs(y[hi[i] - 1] - x[i]))
    return best


def _check_pair(mu: AtomicMeasure, nu: AtomicMeasure) -> float:
    if not isinstance(mu, AtomicMeasure) or not isinstance(nu, AtomicMeasure):
        raise ContractError("lp_distance expects AtomicMeasure inputs")
    if mu.size > MAX_ATOMS or nu.size > MAX_ATOMS:
        raise SizeError(f"lp_distance supports at most {MAX_ATOMS} atoms per measure")
    tm, tn = mu.total, nu.total
    if abs(tm - tn) > MASS_TOL * max(1.0, tm, tn):
        raise ContractError(f"lp_distance needs equal total masses, got {tm!r} and {tn!r}")
    return 0.5 * (tm + tn)


def lp_distance(mu: AtomicMeasure, nu: AtomicMeasure) -> float:
    """Levy-Prokhorov distance between two atomic measures of equal mass."""
    total = _check_pair(mu, nu)
    if total <= 0.0 or mu.size == 0 or nu.size == 0:
        return 0.0
    if _deficit(mu, nu, 0.0, total) <= 0.0:
        return 0.0
    lo, hi = 0.0, total
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _deficit(mu, nu, mid, total) <= mid:
            hi = mid
        else:
            lo = mid
    # rho lies in (lo, hi]: it is the last breakpoint before hi or a plateau value
    d_star = _largest_distance_at_most(mu, nu, hi)
    candidates = [hi, _deficit(mu, nu, lo, total)]
    if d_star >= 0.0:
        candidates += [d_star, _deficit(mu, nu, d_star, total)]
    rho = min(c for c in candidates if c >= 0.0 and _deficit(mu, nu, c, total) <= c)
    return float(min(rho, total))


def lp_distance_oracle(mu: AtomicMeasure, nu: AtomicMeasure) -> float:
    """Levy-Prokhorov distance straight from the set-quantified definition.

    Enumerates every subset ``A`` of each support and finds the least eps with
    ``mu(A) <= nu(A^eps) + eps``; works for unequal masses too.
    """
    if max(mu.size, nu.size) > ORACLE_MAX_SUPPORT:
        raise SizeError(f"oracle supports at most {ORACLE_MAX_SUPPORT} atoms per measure")
    return max(_one_sided(mu, nu), _one_sided(nu, mu), 0.0)


def _one_sided(mu: AtomicMeasure, nu: AtomicMeasure) -> float:
    n = mu.size
    if n == 0:
        return 0.0
    dist = np.abs(mu.values[:, None] - nu.values[None, :])
    worst = 0.0
    for r in range(1, n + 1):
        for subset in itertools.combinations(range(n), r):
            idx = list(subset)
            mass_a = float(mu.masses[idx].sum())
            if nu.size == 0:
                worst = max(worst, mass_a)
                continue
            d = dist[idx].min(axis=0)
            order = np.argsort(d, kind="stable")
            ds = d[order]
            covered = np.cumsum(nu.masses[order])
            # eps below the first breakpoint covers nothing
            best = mass_a if ds[0] > 0 else math.inf
            for k in range(ds.size):
                if k + 1 < ds.size and ds[k + 1] == ds[k]:
                    continue
                best = min(best, max(float(ds[k]), mass_a - float(covered[k])))
            worst = max(worst, best)
    return worst


def lp_distance_binned(a: BinnedMeasure, b: BinnedMeasure) -> float:
    """LP distance between two binned measures with atoms at bin centers."""
    if a.m != b.m:
        raise ContractError(f"resolution mismatch: {a.m} vs {b.m} bins")
    return lp_distance(a.to_atoms(), b.to_atoms())


def lp_distance_grid_batch(rows: np.ndarray, target: np.ndarray) -> np.ndarray:
    """LP distances from many m-bin mass vectors to one target, all at bin centers.

    On a shared grid of spacing ``1/m`` the breakpoints are ``k/m`` and the
    admissible graph for breakpoint ``k`` is the band ``|i - j| <= k``; the
    leftmost-first fill is run for all rows at once.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    target = np.asarray(target, dtype=float).reshape(-1)
    S, m = rows.shape
    if target.size != m:
        raise ContractError("target resolution does not match rows")
    total = rows.sum(axis=1)
    if np.any(np.abs(total - target.sum()) > MASS_TOL * np.maximum(1.0, total)):
        raise ContractError("all rows must carry the target's total mass")
    best = np.full(S, np.inf)
    for k in range(m):
        rem = np.broadcast_to(target, (S, m)).copy()
        moved = np.zeros(S)
        for i in range(m):
            need = rows[:, i].copy()
            for j in range(max(0, i - k), min(m, i + k + 1)):
                take = np.minimum(need, rem[:, j])
                need -= take
                rem[:, j] -= take
                moved += take
        g = total - moved
        g[g < 1e-14] = 0.0
        best = np.minimum(best, np.maximum(k / m, g))
        if np.all(g == 0.0):
            break
    return np.minimum(np.maximum(best, 0.0), total)
