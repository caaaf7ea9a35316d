"""Acceptance criteria 1-14.

Each criterion returns ``(ok, detail)`` and prints one ``PASS``/``FAIL`` line.
Run under pytest or directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import math
import sys
import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from gridlab.entropy import (
    TauFunction,
    dual_gradient,
    dual_objective,
    gibbs_exact,
    gibbs_mc,
    grid_entropy_dual,
)
from gridlab.lp import lp_distance, lp_distance_oracle
from gridlab.measures import AtomicMeasure, BinnedMeasure, kl_divergence, total_variation
from gridlab.paths import (
    brute_force_distances,
    entropy_slope,
    enumerate_paths,
    order_statistics,
    path_histogram_dp,
)
from gridlab.permutohedron import (
    extreme_points_of_sigma_polytope,
    extreme_sigma,
    scramble_mean_max,
    table_from_choices,
    verify_weight_tuples,
)
from gridlab.simulate import glivenko_check, sample_environment
from gridlab.strategies import (
    ScoredStrategy,
    StrategyTable,
    binned_sigma_max,
    density_value_distribution,
    extreme_density_law,
    is_consistent,
    make_consistent,
    scramble,
    sigma_discrete,
)

SEED = 20240607
PATH_SEED = 7


def criterion_1():
    t0 = time.perf_counter()
    ok = sigma_discrete(StrategyTable.maximum(4, 2)).fractions() == [Fraction(n, 16) for n in (1, 3, 5, 7)]
    for K in range(1, 7):
        for D in range(1, 5):
            got = sigma_discrete(StrategyTable.maximum(K, D)).fractions()
            ok &= got == [Fraction(k**D - (k - 1) ** D, K**D) for k in range(1, K + 1)]
    dt = time.perf_counter() - t0
    return ok and dt < 1.0, f"MAX pmf exact for K<=6, D<=4 ({dt:.2f}s)"


def criterion_2():
    t0 = time.perf_counter()
    ok = True
    for K, D in [(3, 2), (4, 2), (3, 3)]:
        pts = extreme_points_of_sigma_polytope(K, D)
        expect = {extreme_sigma(a, K, D) for a in itertools.permutations(range(1, K + 1))}
        ok &= len(pts) == math.factorial(K) and set(pts) == expect
    dt = time.perf_counter() - t0
    return ok and dt < 60, f"K! extreme pmfs at (3,2), (4,2), (3,3) ({dt:.1f}s)"


def criterion_3():
    t0 = time.perf_counter()
    ok, tables = True, 0
    for K in range(2, 7):
        for D in range(1, 4):
            for alpha in itertools.permutations(range(1, K + 1)):
                ok &= verify_weight_tuples(StrategyTable.greedy(alpha, D)).all_perm_of_D10
                tables += 1
    cyclic = table_from_choices(3, 2, {(1, 2): 1, (2, 3): 2, (1, 3): 3})
    rep = verify_weight_tuples(cyclic)
    ok &= not rep.all_perm_of_D10 and all(w == (1, 1, 1) for _, w in rep.counterexamples)
    dt = time.perf_counter() - t0
    return ok and dt < 30, f"{tables} greedy tables, cyclic gives (1,1,1) ({dt:.1f}s)"


def criterion_4():
    rng = np.random.default_rng(SEED)
    ok = True
    for _ in range(100):
        p = StrategyTable.random_rational(4, 2, rng)
        q = make_consistent(p)
        ok &= sigma_discrete(q) == sigma_discrete(p) and make_consistent(q) == q and is_consistent(q)
    return ok, "100 random K=4, D=2 tables"


def criterion_5():
    target = Fraction(50, 16)
    ok = all(scramble_mean_max(StrategyTable.greedy(a, 2))[0] == target
             for a in itertools.permutations(range(1, 5)))
    phis = list(itertools.permutations(range(1, 5)))
    ok &= len(phis) == 24
    uni = max(sigma_discrete(scramble(StrategyTable.uniform(4, 2), phi)).mean() for phi in phis)
    ok &= uni == Fraction(5, 2)
    return ok, f"all 24 orderings reach 50/16; uniform reaches {uni}"


def criterion_6():
    worst, slowest = 0.0, 0.0
    for D in (2, 3):
        for m in (1, 2, 4, 8, 16, 32):
            t0 = time.perf_counter()
            est = grid_entropy_dual(BinnedMeasure.uniform(m), D).entropy_estimate
            slowest = max(slowest, time.perf_counter() - t0)
            worst = max(worst, abs(est - math.log(D)))
    return worst <= 1e-6 and slowest < 10, f"max |est - log D| = {worst:.2e}, slowest {slowest:.2f}s"


def criterion_7():
    t0 = time.perf_counter()
    est = [grid_entropy_dual(binned_sigma_max(m, 2), 2).entropy_estimate for m in (4, 8, 16, 32)]
    dt = time.perf_counter() - t0
    mono = all(b <= a + 1e-6 for a, b in zip(est, est[1:]))
    ok = mono and 0.0 <= est[-1] <= 0.1 and dt < 60
    return ok, "estimates " + ", ".join(f"{e:.6f}" for e in est) + f" ({dt:.1f}s)"


def criterion_8():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    h = 1e-5
    for _ in range(20):
        tau = TauFunction(rng.normal(size=8), beta=float(rng.uniform(0.5, 2.0)))
        nu = BinnedMeasure(rng.dirichlet(np.ones(8)))
        g = dual_gradient(tau, nu, 2)
        fd = np.array([(dual_objective(TauFunction(tau.values + h * e, tau.beta), nu, 2)
                        - dual_objective(TauFunction(tau.values - h * e, tau.beta), nu, 2)) / (2 * h)
                       for e in np.eye(8)])
        worst = max(worst, float(np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-300)))
    return worst <= 1e-5, f"max relative error {worst:.2e}"


def criterion_9():
    m = 32
    lam = BinnedMeasure.uniform(m)
    smax = binned_sigma_max(m, 2)
    worst = -math.inf
    for nu in (lam, smax, lam.mix(smax, 0.5)):
        val = kl_divergence(nu, lam) + grid_entropy_dual(nu, 2).entropy_estimate
        worst = max(worst, val)
    return worst <= math.log(2) + 0.05, f"max KL + estimate = {worst:.6f}"


def _random_atoms(rng, n):
    x = rng.random(n)
    if rng.random() < 0.5:
        x = np.round(x * 16) / 16
    w = rng.random(n) + 0.05
    return AtomicMeasure(x, w / w.sum())


def criterion_10():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(200):
        mu = _random_atoms(rng, int(rng.integers(1, 9)))
        nu = _random_atoms(rng, int(rng.integers(1, 9)))
        worst = max(worst, abs(lp_distance(mu, nu) - lp_distance_oracle(mu, nu)))
    props = True
    for _ in range(100):
        a, b, c = (_random_atoms(rng, int(rng.integers(1, 7))) for _ in range(3))
        dab, dba = lp_distance(a, b), lp_distance(b, a)
        props &= abs(dab - dba) <= 1e-12
        props &= lp_distance(a, c) <= dab + lp_distance(b, c) + 1e-12
        props &= dab <= total_variation(a, b) + 1e-12
        s, t = float(rng.uniform(0.2, 0.8)), None
        t = 1.0 - s
        a2, b2 = _random_atoms(rng, 3), _random_atoms(rng, 3)
        lhs = lp_distance(a.scaled(s) + a2.scaled(t), b.scaled(s) + b2.scaled(t))
        props &= lhs <= lp_distance(a.scaled(s), b.scaled(s)) + lp_distance(a2.scaled(t), b2.scaled(t)) + 1e-12
    return worst <= 1e-12 and props, f"max |flow - oracle| = {worst:.1e}; metric properties {'hold' if props else 'violated'}"


def criterion_11():
    t0 = time.perf_counter()
    cont = glivenko_check(ScoredStrategy("identity"), 2, [10**5], 100, seed=SEED).rows[-1].lp
    disc = glivenko_check(StrategyTable.greedy((2, 4, 1, 3), 2), 2, [10**5], 4, seed=SEED).rows[-1].tv
    dt = time.perf_counter() - t0
    return cont <= 0.02 and disc <= 0.01 and dt < 10, f"LP {cont:.4f}, TV {disc:.4f} ({dt:.1f}s)"


def criterion_12():
    law = lambda t: extreme_density_law(t, 2)  # noqa: E731
    devs = [density_value_distribution(ScoredStrategy(s), 2, 10**6, seed=SEED, m=200).sup_deviation(law)
            for s in ("identity", "vee")]
    return max(devs) <= 0.02, f"sup deviations identity {devs[0]:.4f}, vee {devs[1]:.4f}"


def criterion_13():
    t0 = time.perf_counter()
    exact = True
    for n in (1, 4, 8, 12):
        env = sample_environment(n, 2, seed=SEED + n)
        h = path_histogram_dp(env, 6)
        hists, _ = enumerate_paths(env, 6)
        exact &= h.as_dict() == dict(Counter(map(tuple, hists.tolist())))
        nu = binned_sigma_max(6, 2)
        brute = brute_force_distances(env, nu, 6)
        got = [d for _, d in order_statistics(env, nu, 6, range(1, 2**n + 1), h)]
        exact &= bool(np.allclose(got, brute, rtol=0, atol=1e-12))
    for n in range(1, 21):
        exact &= path_histogram_dp(sample_environment(n, 2, seed=SEED), 8).total() == 2**n

    env = sample_environment(20, 2, seed=PATH_SEED)
    eps = [0.05, 0.1, 0.2]
    lam = {r["eps"]: r["slope"] for r in entropy_slope([env], BinnedMeasure.uniform(8), eps, 8)}
    smx = {r["eps"]: r["slope"] for r in entropy_slope([env], binned_sigma_max(8, 2), eps, 8)}
    near = abs(lam[0.1] - math.log(2)) <= 0.15
    below = smx[0.1] < lam[0.1]
    gaps = [lam[e] - smx[e] for e in eps]
    widening = all(math.isfinite(g) for g in gaps) and gaps[0] > gaps[1] > gaps[2]
    dt = time.perf_counter() - t0
    ok = exact and near and below and widening and dt < 120
    detail = (f"DP/brute-force {'agree' if exact else 'DISAGREE'}; at eps=0.1 slope(uniform)={lam[0.1]:.4f} "
              f"(target ln2 +- 0.15: {'ok' if near else 'missed'}), slope(sigma_max)={smx[0.1]:.4f}; "
              f"gaps at eps 0.05/0.1/0.2 = {', '.join(f'{g:.3f}' for g in gaps)} ({dt:.1f}s)")
    return ok, detail


def criterion_14():
    ok = all(abs(gibbs_exact(TauFunction(np.zeros(5)), D) - math.log(D)) <= 1e-15 for D in (1, 2, 3, 4))
    rng = np.random.default_rng(SEED)
    worst_z = 0.0
    for i in range(20):
        tau = TauFunction(rng.normal(size=int(rng.integers(2, 12))), beta=float(rng.uniform(0.5, 2)))
        c = float(rng.normal() * 3)
        ok &= abs(gibbs_exact(tau.shifted(c), 2) - gibbs_exact(tau, 2) - tau.beta * c) <= 1e-12
        est, se = gibbs_mc(tau, 2, 100_000, seed=SEED + i)
        worst_z = max(worst_z, abs(est - gibbs_exact(tau, 2)) / se)
    return ok and worst_z <= 3, f"identities exact; worst MC |z| = {worst_z:.2f}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10, criterion_11, criterion_12, criterion_13, criterion_14]


def _report(i, fn):
    ok, detail = fn()
    print(f"{'PASS' if ok else 'FAIL'} criterion {i}: {detail}", flush=True)
    return ok, detail


@pytest.mark.parametrize("i", range(1, len(CRITERIA) + 1))
def test_criterion(i, capsys):
    with capsys.disabled():
        print()
        ok, detail = _report(i, CRITERIA[i - 1])
    assert ok, detail


if __name__ == "__main__":
    results = [_report(i, fn)[0] for i, fn in enumerate(CRITERIA, start=1)]
    sys.exit(0 if all(results) else 1)
