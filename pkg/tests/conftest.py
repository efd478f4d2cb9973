"""Shared fixtures for the bandit test suite"""

import numpy as np
import pytest

from bandits.config import ExperimentConfig, PolicySpec
from bandits.core import EMPTY_CONTEXT, Observation, Reward, make_rng
from bandits.envs import BernoulliBetaEnv, EnvironmentSpec
from bandits.neural import TrainConfig


def make_obs(action, reward, propensity=1.0, context=EMPTY_CONTEXT):
    return Observation(context, action, Reward(float(reward)), propensity)


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture
def tiny_train():
    """Network schedule small enough for unit tests"""
    return TrainConfig(steps=30, batch_size=16, hidden_width=8, n_hidden=1, latent_dim=2)


@pytest.fixture
def bernoulli_env():
    return BernoulliBetaEnv(10, 1.0, 9.0, seed=3)


@pytest.fixture
def small_spec():
    return EnvironmentSpec(family='bernoulli', n_arms=10, alpha=1.0, beta=9.0, delay=50)


def experiment(spec, policy, horizon=300, repetitions=3, seed=0):
    return ExperimentConfig(
        name='test',
        environment=spec,
        policy=policy if isinstance(policy, PolicySpec) else PolicySpec(**policy),
        horizon=horizon,
        repetitions=repetitions,
        seed=seed
    )


def uniform_log(n_arms, n, rng, means=None):
    """Uniform-random logged observations with known propensity 1/K"""
    means = np.full(n_arms, 0.5) if means is None else np.asarray(means)
    data = []
    for _ in range(n):
        a = int(rng.integers(n_arms))
        data.append(make_obs(a, float(rng.random() < means[a]), 1.0 / n_arms))
    return data
