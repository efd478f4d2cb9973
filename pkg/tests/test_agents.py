import numpy as np
import pytest

from bandits.agents import RewardConditionedPolicy, make_policy
from bandits.baselines import (
    BetaTSPolicy,
    EpsilonGreedyPolicy,
    NeuralTSPolicy,
    OraclePolicy,
    RandomPolicy,
    UCB1Policy,
)
from bandits.config import PolicySpec
from bandits.core import (
    EMPTY_CONTEXT,
    CombinatorialAction,
    InvalidConfig,
    Observation,
    Reward,
    RewardDomain,
    make_rng,
)
from bandits.envs import CombinatorialEnv, ContextualNeuralEnv
from bandits.gm import is_coefficient

from conftest import make_obs, uniform_log


def graded_log(rewards, n_actions, domain, propensity=None):
    """Observations with non-binary rewards, actions cycling through the arms"""
    propensity = 1.0 / n_actions if propensity is None else propensity
    return [
        Observation(EMPTY_CONTEXT, i % n_actions, Reward(float(r), domain), propensity)
        for i, r in enumerate(rewards)
    ]


class TestCountingAgent:
    def test_cold_start_is_uniform(self, rng):
        policy = RewardConditionedPolicy(4, 'submax')
        assert not policy.trained
        decision = policy.act(EMPTY_CONTEXT, rng)
        assert decision.propensity == pytest.approx(0.25)

    def test_inference_policy_cached_between_releases(self, rng):
        policy = RewardConditionedPolicy(3, 'optimistic')
        policy.update([make_obs(0, 1), make_obs(1, 0)])
        first = policy.inference_policy()
        assert policy.inference_policy() is first
        policy.update([make_obs(2, 1)])
        assert policy.inference_policy() is not first

    def test_propensity_is_policy_entry(self, rng):
        policy = RewardConditionedPolicy(3, 'optimistic')
        policy.update([make_obs(0, 1), make_obs(0, 1), make_obs(1, 0)])
        expected = policy.inference_policy()
        for _ in range(20):
            decision = policy.act(EMPTY_CONTEXT, rng)
            assert decision.propensity == expected[decision.action]

    def test_optimized_coefficient(self):
        data = uniform_log(5, 200, make_rng(1), means=[0.9, 0.1, 0.1, 0.1, 0.1])
        policy = RewardConditionedPolicy(5, 'optimized')
        policy.update(data)
        p0, p1 = policy.conditional_policies()
        assert policy.coefficient == pytest.approx(is_coefficient(data, p0, p1))
        assert policy.coefficient > 0
        # Positive coefficient puts the optimized policy at the upper lambda bound
        assert policy.inference_policy().probs.min() == pytest.approx(0.0, abs=1e-9)

    def test_submax_prefers_good_arm(self):
        data = uniform_log(5, 500, make_rng(2), means=[0.9, 0.1, 0.1, 0.1, 0.1])
        policy = RewardConditionedPolicy(5, 'submax')
        policy.update(data)
        assert int(np.argmax(policy.inference_policy().probs)) == 0

    def test_continuous_rewards(self, rng):
        policy = RewardConditionedPolicy(3, 'submax', 'counting', reward_domain='continuous')
        policy.update(graded_log(range(20), 3, RewardDomain.CONTINUOUS))
        conditions = policy.model.conditions
        assert conditions.r_lo.value == pytest.approx(1.9)
        assert conditions.r_hi.value == pytest.approx(17.1)
        # Rewards 10..19 sit nearer r_hi
        assert policy.model.counts.sum(axis=1).tolist() == [10.0, 10.0]
        assert 0.0 < policy.act(EMPTY_CONTEXT, rng).propensity <= 1.0

        policy.update(graded_log(range(20, 40), 3, RewardDomain.CONTINUOUS))
        assert policy.model.counts.sum() == 40
        assert len(policy.replay) == 40
        assert policy.model.conditions.r_hi.value == pytest.approx(35.1)

    def test_optimized_with_graded_rewards(self):
        policy = RewardConditionedPolicy(3, 'optimized', 'counting', reward_domain='discrete-unbounded')
        policy.update(graded_log([0, 0, 5, 1, 0, 7, 2, 0, 9], 3, RewardDomain.DISCRETE_UNBOUNDED))
        assert np.isfinite(policy.coefficient)
        assert np.isclose(policy.inference_policy().probs.sum(), 1.0)

    def test_counting_rejects_contexts(self):
        with pytest.raises(InvalidConfig):
            RewardConditionedPolicy(4, backend='counting', context_dim=3)
        with pytest.raises(InvalidConfig):
            RewardConditionedPolicy(4, backend='tree')


class TestCvaeAgent:
    def test_combinatorial_actions(self, rng, tiny_train):
        env = CombinatorialEnv((2, 3), context_dim=3, shift=0.0, seed=0)
        policy = RewardConditionedPolicy(
            env.n_actions, 'submax', 'cvae', slot_sizes=env.slot_sizes, context_dim=3, train_config=tiny_train
        )
        context = env.sample_context(rng)
        cold = policy.act(context, rng)
        assert isinstance(cold.action, CombinatorialAction)
        assert cold.propensity == pytest.approx(1 / 6)

        batch = []
        for _ in range(20):
            c = env.sample_context(rng)
            decision = policy.act(c, rng)
            batch.append(make_obs(decision.action, float(rng.random() < 0.5), decision.propensity, c))
        policy.update(batch)
        decision = policy.act(context, rng)
        assert 0.0 < decision.propensity <= 1.0
        decision.action.validate(env.slot_sizes)

    def test_discrete_rewards(self, rng, tiny_train):
        policy = RewardConditionedPolicy(
            3, 'optimistic', 'cvae', train_config=tiny_train, reward_domain='discrete-finite'
        )
        policy.update(graded_log([0, 2, 5, 0, 5, 2] * 4, 3, RewardDomain.DISCRETE_FINITE))
        conditions = policy.model.conditions
        assert (conditions.r_lo.value, conditions.r_hi.value) == (0.0, 5.0)
        assert policy.trained
        assert np.isclose(policy.inference_policy(EMPTY_CONTEXT, rng).probs.sum(), 1.0)

    def test_replay_lives_in_model(self, tiny_train):
        policy = RewardConditionedPolicy(3, 'submax', 'cvae', train_config=tiny_train)
        policy.update(uniform_log(3, 10, make_rng(0)))
        policy.update(uniform_log(3, 10, make_rng(1)))
        assert policy.replay is policy.model.replay
        assert len(policy.replay) == 20
        assert policy.model.rounds == 2

    def test_optimized_contextual(self, rng, tiny_train):
        env = ContextualNeuralEnv(3, 2, 0.0, seed=0)
        policy = RewardConditionedPolicy(3, 'optimized', 'cvae', context_dim=2, train_config=tiny_train)
        batch = []
        for _ in range(20):
            c = env.sample_context(rng)
            a = int(rng.integers(3))
            batch.append(make_obs(a, float(env.pull(a, c, rng).value), 1 / 3, c))
        policy.update(batch)
        assert np.isfinite(policy.coefficient)
        assert np.isclose(policy.inference_policy(env.sample_context(rng), rng).probs.sum(), 1.0)


class TestMakePolicy:
    @pytest.mark.parametrize('kind,cls', [
        ('random', RandomPolicy),
        ('eps-greedy', EpsilonGreedyPolicy),
        ('ucb1', UCB1Policy),
        ('ts-beta', BetaTSPolicy),
        ('oracle', OraclePolicy),
        ('rcp', RewardConditionedPolicy),
    ])
    def test_kinds(self, bernoulli_env, kind, cls):
        policy = make_policy(PolicySpec(kind=kind), bernoulli_env)
        assert isinstance(policy, cls)
        assert policy.name == PolicySpec(kind=kind).label

    def test_true_prior(self, bernoulli_env):
        policy = make_policy(PolicySpec(kind='ts-beta', prior=None), bernoulli_env)
        assert (policy.posterior.prior_a, policy.posterior.prior_b) == (1.0, 9.0)

    def test_neural_seed(self, tiny_train):
        env = ContextualNeuralEnv(4, 20, 0.0, seed=0)
        policy = make_policy(PolicySpec(kind='neural-ts', train=tiny_train), env, seed=17)
        assert isinstance(policy, NeuralTSPolicy)
        assert policy.config.seed == 17

    def test_combinatorial_random(self):
        env = CombinatorialEnv((2, 3), context_dim=3, seed=0)
        policy = make_policy(PolicySpec(kind='random'), env)
        assert policy.slot_sizes == (2, 3)

    def test_reward_domain_reaches_policy(self, bernoulli_env):
        spec = PolicySpec(kind='rcp', reward_domain='continuous', q0=20.0, q1=80.0)
        policy = make_policy(spec, bernoulli_env)
        assert policy.reward_domain == RewardDomain.CONTINUOUS
        assert (policy.q0, policy.q1) == (20.0, 80.0)
        data = uniform_log(10, 200, make_rng(0), bernoulli_env.arm_means)
        policy.update(data)
        assert policy.model.snap_to_nearest
