"""
Classic Bandit Baselines
고전 밴딧 기준 알고리즘

Uniform random, epsilon-greedy, UCB1, beta-Bernoulli Thompson sampling and
MC-dropout neural Thompson sampling, plus the policy interface the simulator
drives every algorithm through.
랜덤, 엡실론 탐욕, UCB1, 베타-베르누이 톰슨 샘플링, MC 드롭아웃 신경망 톰슨 샘플링
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from .core import (
    Action,
    ActionId,
    CombinatorialAction,
    Context,
    InvalidConfig,
    Observation,
    as_observations,
    check_action,
    rng_seed,
)
from .neural import TrainConfig, ValueModel, fit_value_model, make_generator

logger = logging.getLogger(__name__)


# ==================== Sufficient statistics / 충분 통계량 ====================

@dataclass
class ArmStats:
    """
    Per-arm pull and success counts
    팔별 시행 및 성공 횟수
    """
    counts: np.ndarray
    successes: np.ndarray

    @classmethod
    def empty(cls, n_arms: int) -> 'ArmStats':
        return cls(np.zeros(n_arms, dtype=np.int64), np.zeros(n_arms, dtype=np.float64))

    @property
    def n_arms(self) -> int:
        return int(self.counts.shape[0])

    @property
    def t(self) -> int:
        return int(self.counts.sum())

    def update(self, batch: Sequence[Observation]):
        for obs in as_observations(batch):
            arm = check_action(obs.action, self.n_arms)
            self.counts[arm] += 1
            self.successes[arm] += obs.reward.value

    def means(self) -> np.ndarray:
        """Empirical means; unpulled arms are +inf (forced exploration)"""
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.where(self.counts > 0, self.successes / np.maximum(self.counts, 1), np.inf)


@dataclass(frozen=True)
class BetaPosterior:
    """
    Independent Beta posteriors per arm
    팔별 독립 베타 사후분포
    """
    prior_a: float
    prior_b: float
    a: np.ndarray
    b: np.ndarray

    @classmethod
    def from_prior(cls, n_arms: int, prior_a: float = 1.0, prior_b: float = 1.0) -> 'BetaPosterior':
        if prior_a <= 0 or prior_b <= 0:
            raise InvalidConfig(f"Beta prior parameters must be positive, got ({prior_a}, {prior_b})")
        return cls(prior_a, prior_b, np.full(n_arms, float(prior_a)), np.full(n_arms, float(prior_b)))

    def means(self) -> np.ndarray:
        return self.a / (self.a + self.b)


# ==================== Act functions / 행동 선택 함수 ====================

def random_act(K: int, rng: np.random.Generator) -> ActionId:
    """Uniform over [0, K)"""
    if K < 1:
        raise InvalidConfig(f"K must be >= 1, got {K}")
    return int(rng.integers(K))


def greedy_arm(stats: ArmStats) -> ActionId:
    """Argmax of empirical means, lowest index on ties"""
    return int(np.argmax(stats.means()))


def epsilon_greedy_act(stats: ArmStats, epsilon: float, rng: np.random.Generator) -> ActionId:
    """
    Greedy with probability 1 - epsilon, uniform otherwise
    1-엡실론 확률로 탐욕, 그 외 균등 선택
    """
    if not 0.0 <= epsilon <= 1.0:
        raise InvalidConfig(f"epsilon must lie in [0, 1], got {epsilon}")
    if rng.random() < epsilon:
        return random_act(stats.n_arms, rng)
    return greedy_arm(stats)


def ucb1_act(stats: ArmStats) -> ActionId:
    """
    UCB1 index s_i/n_i + sqrt(2 ln t / n_i), after one sweep over unpulled arms
    UCB1 지표로 팔 선택
    """
    unpulled = np.flatnonzero(stats.counts == 0)
    if unpulled.size:
        return int(unpulled[0])
    n = stats.counts.astype(np.float64)
    index = stats.successes / n + np.sqrt(2.0 * np.log(stats.t) / n)
    return int(np.argmax(index))


def ts_beta_act(post: BetaPosterior, rng: np.random.Generator) -> ActionId:
    """Argmax of one Beta draw per arm"""
    return int(np.argmax(rng.beta(post.a, post.b)))


def ts_beta_update(post: BetaPosterior, batch: Sequence[Observation]) -> BetaPosterior:
    """Conjugate update; returns a new posterior"""
    a, b = post.a.copy(), post.b.copy()
    n_arms = a.shape[0]
    for obs in as_observations(batch):
        arm = check_action(obs.action, n_arms)
        a[arm] += obs.reward.value
        b[arm] += 1.0 - obs.reward.value
    return replace(post, a=a, b=b)


def neural_ts_act(
    value_model: Optional[ValueModel],
    context: Context,
    rng: np.random.Generator,
    n_actions: Optional[int] = None
) -> ActionId:
    """
    One dropout-enabled forward pass, argmax of the sampled values
    드롭아웃을 켠 순전파 한 번으로 가치를 샘플링

    Falls back to random_act before the first fit.
    """
    if value_model is None:
        if n_actions is None:
            raise InvalidConfig("n_actions is required before the value model is fitted")
        return random_act(n_actions, rng)
    generator = make_generator(rng_seed(rng))
    values = value_model.values(context.values, dropout_mode='sample', generator=generator)
    return int(np.argmax(values))


# ==================== Policies / 정책 ====================

@dataclass(frozen=True)
class Decision:
    """Action taken and the probability the policy assigned to it"""
    action: Action
    propensity: float


class BasePolicy(ABC):
    """
    Interface the simulator uses for every algorithm
    시뮬레이터가 모든 알고리즘을 구동하는 인터페이스
    """

    name: str = 'policy'
    # False when the logged propensity is a placeholder, not pi(a | c)
    propensity_exact: bool = True

    @abstractmethod
    def act(self, context: Context, rng: np.random.Generator) -> Decision:
        """Choose an action for the context"""

    def update(self, batch: List[Observation]):
        """Consume a batch released by the delay buffer"""


class RandomPolicy(BasePolicy):
    """Uniform random policy (flat or per-slot)"""

    def __init__(self, n_actions: int = 1, slot_sizes: Optional[Sequence[int]] = None, name: str = 'random'):
        self.slot_sizes = tuple(slot_sizes) if slot_sizes else None
        self.n_actions = int(np.prod(self.slot_sizes)) if self.slot_sizes else int(n_actions)
        self.name = name

    def act(self, context: Context, rng: np.random.Generator) -> Decision:
        if self.slot_sizes:
            choices = tuple(random_act(size, rng) for size in self.slot_sizes)
            return Decision(CombinatorialAction(choices), 1.0 / self.n_actions)
        return Decision(random_act(self.n_actions, rng), 1.0 / self.n_actions)


class EpsilonGreedyPolicy(BasePolicy):
    """Epsilon-greedy over empirical arm means"""

    def __init__(self, n_arms: int, epsilon: float = 0.1, name: Optional[str] = None):
        if not 0.0 <= epsilon <= 1.0:
            raise InvalidConfig(f"epsilon must lie in [0, 1], got {epsilon}")
        self.stats = ArmStats.empty(n_arms)
        self.epsilon = float(epsilon)
        self.name = name or f"eps-greedy({epsilon:g})"

    def act(self, context: Context, rng: np.random.Generator) -> Decision:
        greedy = greedy_arm(self.stats)
        action = epsilon_greedy_act(self.stats, self.epsilon, rng)
        propensity = self.epsilon / self.stats.n_arms + (1.0 - self.epsilon) * (action == greedy)
        return Decision(action, propensity)

    def update(self, batch: List[Observation]):
        self.stats.update(batch)


class UCB1Policy(BasePolicy):
    """UCB1; deterministic given the statistics"""

    def __init__(self, n_arms: int, name: str = 'ucb1'):
        self.stats = ArmStats.empty(n_arms)
        self.name = name

    def act(self, context: Context, rng: np.random.Generator) -> Decision:
        return Decision(ucb1_act(self.stats), 1.0)

    def update(self, batch: List[Observation]):
        self.stats.update(batch)


class BetaTSPolicy(BasePolicy):
    """Beta-Bernoulli Thompson sampling"""

    propensity_exact = False

    def __init__(self, n_arms: int, prior_a: float = 1.0, prior_b: float = 1.0, name: Optional[str] = None):
        self.posterior = BetaPosterior.from_prior(n_arms, prior_a, prior_b)
        self.name = name or f"ts-beta({prior_a:g},{prior_b:g})"

    def act(self, context: Context, rng: np.random.Generator) -> Decision:
        return Decision(ts_beta_act(self.posterior, rng), 1.0)

    def update(self, batch: List[Observation]):
        self.posterior = ts_beta_update(self.posterior, batch)


class _ValueModelPolicy(BasePolicy):
    """Keeps the replay set and refits the value network from scratch per release"""

    def __init__(self, n_arms: int, context_dim: int, config: TrainConfig):
        self.n_arms = int(n_arms)
        self.context_dim = int(context_dim)
        self.config = config
        self.replay: List[Observation] = []
        self.model: Optional[ValueModel] = None
        self.releases = 0

    def update(self, batch: List[Observation]):
        if not batch:
            return
        self.replay.extend(as_observations(batch))
        self.releases += 1
        contexts = np.stack([obs.context.values for obs in self.replay])
        actions = np.array([obs.action for obs in self.replay], dtype=np.int64)
        rewards = np.array([obs.reward.value for obs in self.replay])
        config = replace(self.config, seed=self.config.seed + self.releases)
        self.model = fit_value_model(contexts, actions, rewards, self.n_arms, config)
        logger.debug(f"{self.name}: refitted value model on {len(self.replay)} observations")


class NeuralTSPolicy(_ValueModelPolicy):
    """Thompson sampling with MC-dropout value samples"""

    propensity_exact = False

    def __init__(self, n_arms: int, context_dim: int, config: TrainConfig, name: str = 'neural-ts'):
        super().__init__(n_arms, context_dim, config)
        self.name = name

    def act(self, context: Context, rng: np.random.Generator) -> Decision:
        if self.model is None:
            return Decision(random_act(self.n_arms, rng), 1.0 / self.n_arms)
        return Decision(neural_ts_act(self.model, context, rng, self.n_arms), 1.0)


class NeuralEpsilonGreedyPolicy(_ValueModelPolicy):
    """Epsilon-greedy over the fitted value network (dropout off)"""

    def __init__(
        self,
        n_arms: int,
        context_dim: int,
        config: TrainConfig,
        epsilon: float = 0.1,
        name: Optional[str] = None
    ):
        super().__init__(n_arms, context_dim, config)
        if not 0.0 <= epsilon <= 1.0:
            raise InvalidConfig(f"epsilon must lie in [0, 1], got {epsilon}")
        self.epsilon = float(epsilon)
        self.name = name or f"neural-eps-greedy({epsilon:g})"

    def act(self, context: Context, rng: np.random.Generator) -> Decision:
        if self.model is None:
            return Decision(random_act(self.n_arms, rng), 1.0 / self.n_arms)
        greedy = int(np.argmax(self.model.values(context.values)))
        action = random_act(self.n_arms, rng) if rng.random() < self.epsilon else greedy
        propensity = self.epsilon / self.n_arms + (1.0 - self.epsilon) * (action == greedy)
        return Decision(action, propensity)


class OraclePolicy(BasePolicy):
    """Plays the argmax of the true values; reference only"""

    def __init__(self, env, name: str = 'oracle'):
        self.env = env
        self.name = name

    def act(self, context: Context, rng: np.random.Generator) -> Decision:
        context = context if self.env.is_contextual else None
        return Decision(self.env.optimal_action(context), 1.0)
