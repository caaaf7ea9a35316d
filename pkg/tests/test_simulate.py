import numpy as np
import pytest

from gridlab.errors import ContractError, DomainError
from gridlab.simulate import (
    averaged_strategy_check,
    exact_target,
    glivenko_check,
    iter_environment_rows,
    run,
    sample_environment,
    uniform_block,
)
from gridlab.strategies import ScoredStrategy, StrategyTable, sigma_discrete


def test_uniform_block_offsets_are_slices():
    full = uniform_block(9, 0, 0, 1000)
    for off, cnt in [(0, 5), (3, 10), (4, 4), (517, 100), (999, 1)]:
        assert np.array_equal(uniform_block(9, 0, off, cnt), full[off:off + cnt])


def test_streams_and_seeds_differ():
    assert not np.array_equal(uniform_block(1, 0, 0, 8), uniform_block(1, 1, 0, 8))
    assert not np.array_equal(uniform_block(1, 0, 0, 8), uniform_block(2, 0, 0, 8))


def test_chunked_environment_equals_whole():
    env = sample_environment(1000, 3, seed=5)
    parts = np.concatenate([r for _, r in iter_environment_rows(1000, 3, 5, chunk=77)])
    assert np.array_equal(env.labels, parts)
    assert np.array_equal(sample_environment(10, 3, seed=5).labels, env.labels[:10])


def test_discrete_environment_labels():
    env = sample_environment(5000, 2, "discrete", seed=1, K=4)
    assert env.labels.min() == 1 and env.labels.max() == 4
    assert np.allclose(np.bincount(env.labels.ravel())[1:] / 10000, 0.25, atol=0.02)
    with pytest.raises(ContractError):
        sample_environment(5, 2, "discrete", seed=1)


def test_run_is_reproducible_and_prefix_stable():
    env = sample_environment(2000, 2, "discrete", seed=3, K=4)
    t = StrategyTable.uniform(4, 2)
    a = run(env, t, seed=3)
    b = run(env, t, seed=3)
    c = run(env.head(500), t, seed=3)
    assert np.array_equal(a.choices, b.choices)
    assert np.array_equal(a.choices[:500], c.choices)
    assert set(np.unique(a.choices)) <= {1, 2}


def test_max_strategy_picks_largest():
    env = sample_environment(100, 3, seed=2)
    r = run(env, ScoredStrategy("identity"), seed=2)
    assert np.array_equal(r.values, env.labels.max(axis=1))


def test_per_trial_strategies():
    env = sample_environment(10, 2, "discrete", seed=4, K=3)
    mx, mn = StrategyTable.maximum(3, 2), StrategyTable.minimum(3, 2)
    r = run(env, [mx if i % 2 else mn for i in range(10)], seed=4)
    assert np.array_equal(r.values[1::2], env.labels[1::2].max(axis=1))
    assert np.array_equal(r.values[::2], env.labels[::2].min(axis=1))
    with pytest.raises(ContractError):
        run(env, [mx] * 3, seed=4)


def test_domain_mismatch():
    with pytest.raises(ContractError):
        run(sample_environment(5, 2, seed=1), StrategyTable.maximum(3, 2), seed=1)
    with pytest.raises(ContractError):
        run(sample_environment(5, 2, "discrete", seed=1, K=3), ScoredStrategy("identity"), seed=1)


def test_exact_target_uses_closed_forms():
    t = exact_target(ScoredStrategy("identity"), 2, 4)
    assert np.allclose(t.weights, np.array([1, 3, 5, 7]) / 16)
    e = exact_target(StrategyTable.maximum(4, 2), 2, 4)
    assert np.allclose(e.weights, sigma_discrete(StrategyTable.maximum(4, 2)).probs)


def test_glivenko_distances_shrink():
    rep = glivenko_check(ScoredStrategy("identity"), 2, [100, 1000, 100_000], 100, seed=11)
    assert rep.rows[-1].lp <= 0.02
    assert rep.rows[-1].lp <= rep.rows[0].lp
    assert rep.trend < 0


def test_glivenko_discrete_reports_tv():
    rep = glivenko_check(StrategyTable.greedy((2, 4, 1, 3), 2), 2, [1000, 100_000], 4, seed=11)
    assert all(r.tv is not None for r in rep.rows)
    assert rep.rows[-1].tv <= 0.01


def test_averaged_strategy_check():
    ts = [StrategyTable.maximum(4, 2), StrategyTable.uniform(4, 2)]
    d = averaged_strategy_check([ts[i % 2] for i in range(20_000)], 2, 20_000, None, seed=5)
    assert d < 0.02
