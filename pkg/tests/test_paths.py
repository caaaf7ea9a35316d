import math
from collections import Counter

import numpy as np
import pytest

from gridlab.errors import SizeError
from gridlab.measures import BinnedMeasure
from gridlab.paths import (
    brute_force_distances,
    count_within,
    entropy_slope,
    enumerate_paths,
    order_statistics,
    path_histogram_dp,
    path_stats,
)
from gridlab.simulate import Environment, sample_environment
from gridlab.strategies import binned_sigma_max


def _env(rows, K=None):
    labels = np.array(rows, dtype=np.int64 if K else float)
    return Environment(len(rows), labels.shape[1], labels, 0, K)


def test_single_trial_distinct_bins():
    h = path_histogram_dp(_env([[0.1, 0.9]]), 2)
    assert h.as_dict() == {(1, 0): 1, (0, 1): 1}


def test_single_trial_same_bin():
    h = path_histogram_dp(_env([[0.1, 0.2]]), 2)
    assert h.as_dict() == {(1, 0): 2}


@pytest.mark.parametrize("n,D,m", [(12, 2, 6), (9, 3, 4), (10, 2, 3)])
def test_dp_matches_enumeration(n, D, m):
    env = sample_environment(n, D, seed=n + D)
    h = path_histogram_dp(env, m)
    hists, _ = enumerate_paths(env, m)
    brute = Counter(map(tuple, hists.tolist()))
    assert h.as_dict() == dict(brute)
    assert h.total() == D**n


def test_dp_on_discrete_labels():
    env = sample_environment(8, 2, "discrete", seed=1, K=4)
    h = path_histogram_dp(env, 4)
    assert h.total() == 2**8


@pytest.mark.parametrize("n", [16, 20])
def test_totals_exact(n):
    h = path_histogram_dp(sample_environment(n, 2, seed=n), 8)
    assert h.total() == 2**n and h.mode == "int64"


def test_large_n_switches_modes():
    h = path_histogram_dp(sample_environment(70, 2, seed=1), 3)
    assert h.mode == "bigint" and h.total() == 2**70
    h = path_histogram_dp(sample_environment(130, 2, seed=1), 2)
    assert h.mode == "log"
    assert h.total() == pytest.approx(130 * math.log(2), rel=1e-12)


def test_state_bound():
    with pytest.raises(SizeError):
        path_histogram_dp(sample_environment(200, 2, seed=1), 12)


def test_order_statistics_match_brute_force():
    env = sample_environment(12, 2, seed=4)
    nu = binned_sigma_max(6, 2)
    brute = brute_force_distances(env, nu, 6)
    ranks = [1, 2, 17, 100, 1000, 4095, 4096]
    got = order_statistics(env, nu, 6, ranks)
    assert [d for _, d in got] == pytest.approx([brute[j - 1] for j in ranks], abs=1e-12)
    assert order_statistics(env, nu, 6, [4097])[0][1] == math.inf


def test_every_rank_matches_brute_force():
    env = sample_environment(10, 2, seed=9)
    nu = BinnedMeasure.uniform(4)
    brute = brute_force_distances(env, nu, 4)
    got = [d for _, d in order_statistics(env, nu, 4, range(1, 2**10 + 1))]
    assert np.allclose(got, brute, atol=1e-12)
    assert np.all(np.diff(got) >= 0)


def test_rank_one_at_own_histogram():
    env = sample_environment(12, 2, seed=2)
    m = 6
    h = path_histogram_dp(env, m)
    own = BinnedMeasure(h.states[0] / env.n)
    assert order_statistics(env, own, m, [1], h)[0][1] <= 1 / (2 * m)


def test_counts_monotone_in_eps():
    env = sample_environment(14, 2, seed=3)
    h = path_histogram_dp(env, 6)
    nu = BinnedMeasure.uniform(6)
    counts = [count_within(h, nu, e) for e in (0.0, 0.05, 0.1, 0.2, 0.5, 1.0)]
    assert counts == sorted(counts) and counts[-1] == 2**14


def test_slope_at_eps_one_is_log_d():
    env = sample_environment(10, 3, seed=1)
    rows = entropy_slope([env], BinnedMeasure.uniform(4), 1.0, 4)
    assert rows[0]["count"] == 3**10
    assert rows[0]["slope"] == pytest.approx(math.log(3), abs=1e-15)


def test_path_stats_report():
    env = sample_environment(12, 2, seed=7)
    r = path_stats(env, BinnedMeasure.uniform(4), 4, [0.1, 0.3, 1.0], ranks=[1, 4096])
    assert r.counts[-1] == 4096 and r.mode == "int64"
    assert r.order_stats[0][1] <= r.order_stats[1][1] <= 1.0
