"""
Reward-Conditioned Agents
보상 조건부 에이전트

RewardConditionedPolicy acts by sampling from an inference policy built out
of its two conditional policies, and make_policy turns a PolicySpec into a
ready-to-run policy for an environment.
두 조건부 정책으로 만든 추론 정책에서 샘플링하여 행동하는 에이전트와 정책 팩토리
"""

import logging
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .baselines import (
    BasePolicy,
    BetaTSPolicy,
    Decision,
    EpsilonGreedyPolicy,
    NeuralEpsilonGreedyPolicy,
    NeuralTSPolicy,
    OraclePolicy,
    RandomPolicy,
    UCB1Policy,
)
from .config import PolicySpec
from .core import (
    Action,
    CombinatorialAction,
    Context,
    EMPTY_CONTEXT,
    InvalidConfig,
    Observation,
    ProbabilityVector,
    RewardDomain,
    as_observations,
    make_rng,
    sample,
)
from .envs import Environment
from .gm import Strategy, infer_policy, is_coefficient
from .neural import TrainConfig
from .rcp import (
    BINARY_CONDITIONS,
    DEFAULT_LATENT_SAMPLES,
    DEFAULT_Q0,
    DEFAULT_Q1,
    ConditionRewards,
    CountingRCP,
    CvaeRCP,
    select_condition_rewards,
)

logger = logging.getLogger(__name__)


class RewardConditionedPolicy(BasePolicy):
    """
    Reward-conditioned policy with generalized marginalization
    일반화 주변화를 사용하는 보상 조건부 정책

    Acts uniformly at random until the first buffer release. Afterwards the
    inference policy is cached between releases in the non-contextual case
    and rebuilt for every context otherwise. For the optimized strategy the
    importance-sampling coefficient is computed once per release from the
    whole replay set.
    """

    def __init__(
        self,
        n_actions: int,
        strategy: Union[Strategy, str] = Strategy.SUBMAX,
        backend: str = 'counting',
        slot_sizes: Optional[Sequence[int]] = None,
        context_dim: int = 0,
        smoothing: float = 1.0,
        train_config: Optional[TrainConfig] = None,
        n_latent_samples: int = DEFAULT_LATENT_SAMPLES,
        reward_domain: Union[RewardDomain, str] = RewardDomain.BINARY,
        q0: float = DEFAULT_Q0,
        q1: float = DEFAULT_Q1,
        name: Optional[str] = None
    ):
        self.strategy = Strategy(strategy)
        self.backend = backend
        self.slot_sizes = tuple(int(s) for s in slot_sizes) if slot_sizes else (int(n_actions),)
        self.n_actions = int(np.prod(self.slot_sizes))
        self.context_dim = int(context_dim)
        self.combinatorial = len(self.slot_sizes) > 1
        self.contextual = self.context_dim > 0
        self.reward_domain = RewardDomain(reward_domain)
        self.q0, self.q1 = q0, q1
        self.smoothing = smoothing
        self.name = name or f"rcp-{backend}-{self.strategy.value}"

        conditions = replace(BINARY_CONDITIONS, q0=q0, q1=q1)
        if backend == 'counting':
            if self.contextual or self.combinatorial:
                raise InvalidConfig("The counting backend only supports flat non-contextual action spaces")
            self.model = CountingRCP(self.n_actions, smoothing, conditions)
        elif backend == 'cvae':
            self.model = CvaeRCP(self.slot_sizes, self.context_dim, train_config, conditions, n_latent_samples)
        else:
            raise InvalidConfig(f"Unknown RCP backend {backend!r}")

        # The CVAE backend keeps the replay set itself
        self._replay: List[Observation] = []
        self.releases = 0
        self._uniform = ProbabilityVector.uniform(self.n_actions)
        self._cached: Optional[ProbabilityVector] = None
        self._coefficient: Optional[float] = None

    @property
    def trained(self) -> bool:
        return self.releases > 0

    @property
    def replay(self) -> List[Observation]:
        if isinstance(self.model, CvaeRCP):
            return self.model.replay
        return self._replay

    @property
    def coefficient(self) -> Optional[float]:
        return self._coefficient

    def _to_action(self, index: int) -> Action:
        if self.combinatorial:
            return CombinatorialAction(tuple(int(i) for i in np.unravel_index(index, self.slot_sizes)))
        return index

    def conditional_policies(
        self,
        context: Context = EMPTY_CONTEXT,
        rng: Optional[np.random.Generator] = None
    ) -> Tuple[ProbabilityVector, ProbabilityVector]:
        """(p0, p1) = (pi(. | c, r_lo), pi(. | c, r_hi))"""
        if isinstance(self.model, CountingRCP):
            conditions = self.model.conditions
            return self.model.policy(conditions.r_lo), self.model.policy(conditions.r_hi)
        return self.model.policies(context, rng)

    def inference_policy(
        self,
        context: Context = EMPTY_CONTEXT,
        rng: Optional[np.random.Generator] = None
    ) -> ProbabilityVector:
        """Distribution the policy acts from in this context"""
        if not self.trained:
            return self._uniform
        if not self.contextual and self._cached is not None:
            return self._cached
        p0, p1 = self.conditional_policies(context, rng)
        policy = infer_policy(self.strategy, p0, p1, self._coefficient)
        if not self.contextual:
            self._cached = policy
        return policy

    def act(self, context: Context, rng: np.random.Generator) -> Decision:
        policy = self.inference_policy(context if self.contextual else EMPTY_CONTEXT, rng)
        index = sample(policy, rng)
        # Propensity is the inference-policy probability of the sampled action
        return Decision(self._to_action(index), min(float(policy[index]), 1.0))

    def _replay_coefficient(self) -> float:
        if isinstance(self.model, CountingRCP):
            p0, p1 = self.conditional_policies()
            return is_coefficient(self.replay, p0, p1)
        contexts = [obs.context for obs in self.replay]
        actions = [obs.action for obs in self.replay]
        conditions = self.model.conditions
        seed = self.model.config.seed
        # Same latent draws for both conditions
        pi0 = self.model.action_probability(contexts, actions, conditions.r_lo, make_rng(seed))
        pi1 = self.model.action_probability(contexts, actions, conditions.r_hi, make_rng(seed))
        return is_coefficient(self.replay, lambda data: pi0, lambda data: pi1)

    def _select_conditions(self, dataset: Sequence[Observation]) -> ConditionRewards:
        conditions = select_condition_rewards(
            [obs.reward.value for obs in dataset], self.reward_domain, self.q0, self.q1
        )
        logger.debug(f"{self.name}: condition rewards ({conditions.r_lo.value:g}, {conditions.r_hi.value:g})")
        return conditions

    def update(self, batch: List[Observation]):
        if not batch:
            return
        batch = as_observations(batch)
        self.releases += 1
        binary = self.reward_domain == RewardDomain.BINARY

        if isinstance(self.model, CountingRCP):
            self._replay.extend(batch)
            if binary:
                self.model.update(batch)
            else:
                # Recount the whole history under the current condition rewards
                conditions = self._select_conditions(self._replay)
                self.model = CountingRCP(self.n_actions, self.smoothing, conditions, snap_to_nearest=True)
                self.model.update(self._replay)
        else:
            dataset = self.model.replay + batch
            if not binary:
                self.model.conditions = self._select_conditions(dataset)
            self.model.retrain(dataset)

        self._cached = None
        if self.strategy == Strategy.OPTIMIZED:
            self._coefficient = self._replay_coefficient()
            logger.debug(f"{self.name}: release {self.releases}, IS coefficient {self._coefficient:.4g}")


def make_policy(spec: PolicySpec, env: Environment, seed: int = 0) -> BasePolicy:
    """
    Build the policy a PolicySpec describes for an environment
    정책 사양과 환경으로부터 정책 생성

    Args:
        spec: Policy specification
        env: Environment the policy will act in
        seed: Seed for network initialization and training
    """
    train = replace(spec.train, seed=int(seed))
    label = spec.label
    slot_sizes = getattr(env, 'slot_sizes', None)

    if spec.kind == 'random':
        return RandomPolicy(env.n_actions, slot_sizes=slot_sizes, name=label)
    if spec.kind == 'eps-greedy':
        return EpsilonGreedyPolicy(env.n_actions, spec.epsilon, name=label)
    if spec.kind == 'ucb1':
        return UCB1Policy(env.n_actions, name=label)
    if spec.kind == 'ts-beta':
        prior_a, prior_b = spec.prior if spec.prior is not None else (env.alpha, env.beta)
        return BetaTSPolicy(env.n_actions, prior_a, prior_b, name=label)
    if spec.kind == 'neural-ts':
        return NeuralTSPolicy(env.n_actions, env.context_dim, train, name=label)
    if spec.kind == 'neural-eps-greedy':
        return NeuralEpsilonGreedyPolicy(env.n_actions, env.context_dim, train, spec.epsilon, name=label)
    if spec.kind == 'oracle':
        return OraclePolicy(env, name=label)
    return RewardConditionedPolicy(
        env.n_actions,
        strategy=spec.strategy,
        backend=spec.backend,
        slot_sizes=slot_sizes,
        context_dim=env.context_dim,
        smoothing=spec.smoothing,
        train_config=train,
        n_latent_samples=spec.n_latent_samples,
        reward_domain=spec.reward_domain,
        q0=spec.q0,
        q1=spec.q1,
        name=label
    )
