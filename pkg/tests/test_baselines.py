from dataclasses import replace

import numpy as np
import pytest

from bandits.baselines import (
    ArmStats,
    BetaPosterior,
    BetaTSPolicy,
    EpsilonGreedyPolicy,
    NeuralEpsilonGreedyPolicy,
    NeuralTSPolicy,
    OraclePolicy,
    RandomPolicy,
    UCB1Policy,
    epsilon_greedy_act,
    neural_ts_act,
    random_act,
    ts_beta_act,
    ts_beta_update,
    ucb1_act,
)
from bandits.core import EMPTY_CONTEXT, CombinatorialAction, Context, InvalidConfig, make_rng
from bandits.neural import fit_value_model

from conftest import make_obs


def test_random_act_range(rng):
    draws = {random_act(5, rng) for _ in range(500)}
    assert draws == set(range(5))
    with pytest.raises(InvalidConfig):
        random_act(0, rng)


def test_random_policy_combinatorial(rng):
    policy = RandomPolicy(slot_sizes=(2, 3))
    decision = policy.act(Context([0.0, 1.0]), rng)
    assert isinstance(decision.action, CombinatorialAction)
    assert decision.propensity == pytest.approx(1 / 6)


class TestEpsilonGreedy:
    def test_zero_epsilon_is_greedy(self, rng):
        stats = ArmStats.empty(3)
        stats.update([make_obs(0, 0), make_obs(1, 1), make_obs(2, 0)])
        assert all(epsilon_greedy_act(stats, 0.0, rng) == 1 for _ in range(50))

    def test_unpulled_arms_look_best(self):
        stats = ArmStats.empty(3)
        stats.update([make_obs(0, 1)])
        assert np.isinf(stats.means()[1:]).all()

    def test_propensities(self, rng):
        policy = EpsilonGreedyPolicy(4, epsilon=0.2)
        policy.update([make_obs(a, float(a == 2)) for a in range(4)])
        for _ in range(100):
            decision = policy.act(EMPTY_CONTEXT, rng)
            expected = 0.85 if decision.action == 2 else 0.05
            assert decision.propensity == pytest.approx(expected)

    def test_invalid_epsilon(self, rng):
        with pytest.raises(InvalidConfig):
            EpsilonGreedyPolicy(4, epsilon=1.5)
        with pytest.raises(InvalidConfig):
            epsilon_greedy_act(ArmStats.empty(2), -0.1, rng)


class TestUCB1:
    def test_sweeps_unpulled_arms_first(self, rng):
        policy = UCB1Policy(4)
        order = []
        for _ in range(4):
            action = policy.act(EMPTY_CONTEXT, rng).action
            order.append(action)
            policy.update([make_obs(action, 0)])
        assert order == [0, 1, 2, 3]

    def test_index(self):
        stats = ArmStats(np.array([10, 10]), np.array([2.0, 8.0]))
        assert ucb1_act(stats) == 1
        # A rarely pulled arm wins through its bonus
        stats = ArmStats(np.array([1, 1000]), np.array([0.0, 600.0]))
        assert ucb1_act(stats) == 0

    def test_relabeling_permutes_choice(self):
        stats = ArmStats(np.array([5, 7, 3, 9]), np.array([1.0, 4.0, 1.0, 6.0]))
        chosen = ucb1_act(stats)
        rng = make_rng(8)
        for _ in range(10):
            perm = rng.permutation(4)
            relabeled = ArmStats(stats.counts[perm], stats.successes[perm])
            assert perm[ucb1_act(relabeled)] == chosen


class TestBetaTS:
    def test_conjugate_update(self):
        post = BetaPosterior.from_prior(3, 1.0, 9.0)
        updated = ts_beta_update(post, [make_obs(0, 1), make_obs(0, 0), make_obs(2, 1)])
        assert updated.a.tolist() == [2.0, 1.0, 2.0]
        assert updated.b.tolist() == [10.0, 9.0, 9.0]
        assert post.a.tolist() == [1.0, 1.0, 1.0]

    def test_concentrated_posterior_wins(self, rng):
        post = BetaPosterior(1.0, 1.0, np.array([1.0, 1000.0]), np.array([1000.0, 1.0]))
        assert all(ts_beta_act(post, rng) == 1 for _ in range(20))

    def test_placeholder_propensity(self, rng):
        policy = BetaTSPolicy(3)
        assert policy.act(EMPTY_CONTEXT, rng).propensity == 1.0
        assert policy.propensity_exact is False
        assert policy.name == 'ts-beta(1,1)'

    def test_posterior_mean_converges(self, rng):
        p, n = 0.3, 2000
        batch = [make_obs(0, float(rng.random() < p)) for _ in range(n)]
        post = ts_beta_update(BetaPosterior.from_prior(2), batch)
        assert abs(post.means()[0] - p) < 3.0 * np.sqrt(p * (1.0 - p) / n)

    def test_invalid_prior(self):
        with pytest.raises(InvalidConfig):
            BetaPosterior.from_prior(3, 0.0, 1.0)


class TestNeural:
    def test_cold_start_is_uniform(self, rng, tiny_train):
        context = Context(np.ones(3) / np.sqrt(3))
        for policy in (NeuralTSPolicy(4, 3, tiny_train), NeuralEpsilonGreedyPolicy(4, 3, tiny_train)):
            decision = policy.act(context, rng)
            assert decision.propensity == pytest.approx(0.25)

    def test_cold_act_needs_action_count(self, rng):
        with pytest.raises(InvalidConfig):
            neural_ts_act(None, EMPTY_CONTEXT, rng)
        assert 0 <= neural_ts_act(None, EMPTY_CONTEXT, rng, n_actions=3) < 3

    def test_update_fits_value_model(self, rng, tiny_train):
        policy = NeuralTSPolicy(2, 2, tiny_train)
        batch = [make_obs(a % 2, 1, 0.5, Context([1.0, 0.0])) for a in range(20)]
        policy.update(batch)
        assert policy.model is not None and policy.releases == 1
        decision = policy.act(Context([1.0, 0.0]), rng)
        assert decision.action in (0, 1)

    def test_empty_release_is_ignored(self, tiny_train):
        policy = NeuralEpsilonGreedyPolicy(2, 2, tiny_train)
        policy.update([])
        assert policy.model is None

    @staticmethod
    def _separated_model(config):
        # Arm 0 always pays, arm 1 never does
        actions = np.arange(100) % 2
        return fit_value_model(np.zeros((100, 0)), actions, (actions == 0).astype(float), 2, config)

    def test_no_dropout_is_greedy(self, tiny_train):
        model = self._separated_model(replace(tiny_train, steps=200, learning_rate=1e-2, dropout_rate=0.0))
        greedy = int(np.argmax(model.values(np.zeros(0))))
        for seed in range(20):
            assert neural_ts_act(model, EMPTY_CONTEXT, make_rng(seed)) == greedy

    def test_same_seed_same_action(self, tiny_train):
        model = self._separated_model(tiny_train)
        assert neural_ts_act(model, EMPTY_CONTEXT, make_rng(4)) == neural_ts_act(model, EMPTY_CONTEXT, make_rng(4))

    def test_mostly_greedy_on_separated_values(self, rng, tiny_train):
        config = replace(tiny_train, steps=500, learning_rate=1e-2, hidden_width=32, dropout_rate=0.1)
        model = self._separated_model(config)
        values = model.values(np.zeros(0))
        assert values[0] - values[1] > 0.5
        greedy = sum(neural_ts_act(model, EMPTY_CONTEXT, rng) == 0 for _ in range(1000))
        assert greedy >= 950


def test_oracle_plays_best_arm(bernoulli_env):
    decision = OraclePolicy(bernoulli_env).act(EMPTY_CONTEXT, make_rng(0))
    assert decision.action == int(np.argmax(bernoulli_env.arm_means))
