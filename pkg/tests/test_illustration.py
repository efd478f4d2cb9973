import numpy as np
import pandas as pd
import pytest

from bandits.core import make_rng
from bandits.envs import BernoulliBetaEnv
from bandits.illustration import STRATEGIES, illustrate, illustration_sweep, log_uniform, save_illustration


def test_log_uniform_propensities():
    env = BernoulliBetaEnv(4, 1.0, 1.0, seed=0)
    data = log_uniform(env, 100, make_rng(0))
    assert len(data) == 100
    assert {obs.propensity for obs in data} == {0.25}


def test_illustration_result():
    result = illustrate(7)
    assert set(result.policies) == set(STRATEGIES)
    assert result.policies['optimistic'] is result.policies['positive']
    assert result.expected_rewards['random'] == pytest.approx(result.arm_means.mean())
    assert result.bounds.lower <= 0.0 and result.bounds.upper >= 1.0
    for name, value in result.expected_rewards.items():
        assert value <= result.best_value + 1e-12, name


def test_submax_ignores_dominated_arms():
    result = illustrate(3)
    p0 = result.policies['negative'].probs
    p1 = result.policies['positive'].probs
    assert np.all(result.policies['submax'].probs[p1 <= p0] == 0.0)


def test_deterministic():
    a, b = illustrate(11), illustrate(11)
    assert a.expected_rewards == b.expected_rewards
    assert a.lam == b.lam


def test_sweep_frame():
    frame = illustration_sweep(range(3))
    assert list(frame['seed']) == [0, 1, 2]
    assert set(STRATEGIES) | {'seed', 'lambda', 'best'} == set(frame.columns)


def test_save(tmp_path):
    result = illustrate(0)
    written = save_illustration(result, str(tmp_path), illustration_sweep(range(2)))
    assert len(written) == 1 + len(STRATEGIES) + 4
    policy = pd.read_csv(tmp_path / 'policy_submax.csv')
    assert policy['probability'].sum() == pytest.approx(1.0)
    environment = pd.read_csv(tmp_path / 'policy_environment.csv')
    assert np.allclose(environment['value'], result.arm_means)
