import numpy as np
import pytest

from bandits.core import (
    CombinatorialAction,
    Context,
    InvalidAction,
    InvalidConfig,
    Reward,
    Unsupported,
    make_rng,
)
from bandits.envs import (
    BernoulliBetaEnv,
    CombinatorialEnv,
    ContextualNeuralEnv,
    DelayBuffer,
    EnvironmentSpec,
    buffer_poll,
    buffer_push,
    expected_random_reward,
    make_bernoulli_env,
    make_environment,
    optimal_value,
    sample_sphere,
)

from conftest import make_obs


class TestBernoulli:
    def test_means_fixed_by_seed(self):
        a = BernoulliBetaEnv(10, 1.0, 9.0, seed=5)
        b = BernoulliBetaEnv(10, 1.0, 9.0, seed=5)
        c = BernoulliBetaEnv(10, 1.0, 9.0, seed=6)
        assert np.array_equal(a.arm_means, b.arm_means)
        assert not np.array_equal(a.arm_means, c.arm_means)
        d = make_bernoulli_env(10, 1.0, 9.0, seed=5)
        assert np.array_equal(a.arm_means, d.arm_means)

    def test_pull_frequency(self, bernoulli_env):
        rng = make_rng(0)
        arm = int(np.argmax(bernoulli_env.arm_means))
        pulls = [bernoulli_env.pull(arm, None, rng).value for _ in range(20000)]
        assert np.mean(pulls) == pytest.approx(bernoulli_env.arm_means[arm], abs=0.015)

    def test_optimal_value(self, bernoulli_env):
        assert optimal_value(bernoulli_env) == bernoulli_env.arm_means.max()
        assert bernoulli_env.expected_reward(bernoulli_env.optimal_action()) == optimal_value(bernoulli_env)

    def test_invalid_action(self, bernoulli_env, rng):
        with pytest.raises(InvalidAction):
            bernoulli_env.pull(10, None, rng)

    def test_random_value_is_mean_of_arms(self, bernoulli_env, rng):
        assert expected_random_reward(bernoulli_env, rng) == pytest.approx(bernoulli_env.arm_means.mean())

    def test_invalid_prior(self):
        with pytest.raises(InvalidConfig):
            BernoulliBetaEnv(10, 0.0, 1.0, seed=0)

    @pytest.mark.parametrize('alpha,beta,target,tolerance', [(1.0, 9.0, 0.1, 0.01), (1.0, 1.0, 0.5, 0.02)])
    def test_arm_means_follow_prior(self, alpha, beta, target, tolerance):
        means = [make_bernoulli_env(10, alpha, beta, seed).arm_means.mean() for seed in range(200)]
        assert np.mean(means) == pytest.approx(target, abs=tolerance)


class TestContextual:
    def test_sphere_contexts(self, rng):
        for _ in range(10):
            context = sample_sphere(20, rng)
            assert np.linalg.norm(context.values) == pytest.approx(1.0)

    def test_context_coordinates_center_on_zero(self, rng):
        env = ContextualNeuralEnv(4, 5, 0.0, seed=1)
        samples = np.stack([env.sample_context(rng).values for _ in range(20000)])
        assert np.all(np.abs(samples.mean(axis=0)) < 0.02)

    def test_values_in_unit_interval(self, rng):
        env = ContextualNeuralEnv(4, 20, 0.0, seed=1)
        values = env.action_values(env.sample_context(rng))
        assert values.shape == (4,)
        assert np.all((values > 0.0) & (values < 1.0))

    def test_same_seed_same_network(self, rng):
        context = sample_sphere(20, rng)
        a = ContextualNeuralEnv(4, 20, 0.0, seed=2).action_values(context)
        b = ContextualNeuralEnv(4, 20, 0.0, seed=2).action_values(context)
        assert np.array_equal(a, b)

    def test_context_required(self, rng):
        env = ContextualNeuralEnv(4, 20, 0.0, seed=1)
        with pytest.raises(InvalidAction):
            env.expected_reward(0, None)
        with pytest.raises(InvalidAction):
            env.expected_reward(0, Context(np.zeros(3)))

    def test_shift_lowers_rewards(self, rng):
        context = sample_sphere(20, rng)
        base = ContextualNeuralEnv(4, 20, 0.0, seed=3).action_values(context)
        shifted = ContextualNeuralEnv(4, 20, -2.0, seed=3).action_values(context)
        assert np.all(shifted < base)

    @pytest.mark.parametrize('shift,target,tolerance', [(0.0, 0.50, 0.06), (-2.0, 0.123, 0.05), (-4.0, 0.0185, 0.02)])
    def test_average_reward_by_shift(self, shift, target, tolerance):
        rewards = [
            expected_random_reward(ContextualNeuralEnv(4, 20, shift, seed=seed), make_rng(1000 + seed))
            for seed in range(20)
        ]
        assert np.mean(rewards) == pytest.approx(target, abs=tolerance)


class TestCombinatorial:
    env = CombinatorialEnv((2, 3, 4), context_dim=5, shift=-3.0, seed=0)

    def test_encode_decode(self):
        action = CombinatorialAction((1, 2, 3))
        index = self.env.encode(action)
        assert index == 1 * 12 + 2 * 4 + 3
        assert self.env.decode(index) == action
        assert self.env.n_actions == 24

    def test_joint_values_match_single_queries(self, rng):
        context = self.env.sample_context(rng)
        values = self.env.action_values(context)
        assert values.shape == (24,)
        for index in (0, 7, 23):
            action = self.env.decode(index)
            assert values[index] == pytest.approx(self.env.expected_reward(action, context))

    def test_rejects_flat_actions(self, rng):
        context = self.env.sample_context(rng)
        with pytest.raises(InvalidAction):
            self.env.expected_reward(3, context)
        with pytest.raises(InvalidAction):
            self.env.expected_reward(CombinatorialAction((2, 0, 0)), context)

    def test_optimal_value_unsupported(self, rng):
        with pytest.raises(Unsupported):
            optimal_value(self.env, self.env.sample_context(rng))


class TestDelayBuffer:
    def test_releases_full_batches(self):
        buf = DelayBuffer(3)
        released = []
        for _ in range(7):
            buffer_push(buf, make_obs(0, 1))
            released.append(len(buffer_poll(buf)))
        assert released == [0, 0, 3, 0, 0, 3, 0]
        assert len(buf) == 1

    def test_conserves_observations(self):
        buf = DelayBuffer(4)
        observed = []
        for t in range(10):
            buf.push(make_obs(t % 2, t % 2))
            observed.extend(buf.poll())
        assert buf.total_pushed == 10
        assert buf.total_released + len(buf) == buf.total_pushed
        assert len(observed) == 8

    def test_capacity_one_releases_immediately(self):
        buf = DelayBuffer(1)
        buf.push(make_obs(0, 0))
        assert len(buf.poll()) == 1

    def test_invalid_capacity(self):
        with pytest.raises(InvalidConfig):
            DelayBuffer(0)


class TestSpec:
    def test_labels(self):
        assert EnvironmentSpec(n_arms=100, alpha=1, beta=9, delay=100).label == 'K100_a1_b9_Nb100'
        contextual = EnvironmentSpec(family='contextual', n_arms=4, shift=-2.0, delay=1000)
        assert contextual.label == 'ctx_K4_d20_s-2_Nb1000'
        combinatorial = EnvironmentSpec(family='combinatorial', shift=-3.0, delay=1000)
        assert combinatorial.label == 'comb_2x4x6x16x32_d20_s-3_Nb1000'

    def test_make_environment(self):
        env = make_environment(EnvironmentSpec(family='combinatorial', slot_sizes=(2, 2)), seed=0)
        assert isinstance(env, CombinatorialEnv) and env.n_actions == 4

    def test_invalid_spec(self):
        with pytest.raises(InvalidConfig):
            EnvironmentSpec(family='slates')
        with pytest.raises(InvalidConfig):
            EnvironmentSpec(delay=0)


def test_bernoulli_reward_type(bernoulli_env, rng):
    assert isinstance(bernoulli_env.pull(0, None, rng), Reward)
