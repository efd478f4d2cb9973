"""
Reward-Conditioned Policy Models
보상 조건부 정책 모델

Estimates pi(a | c, r) for the two conditioning rewards: a counting table for
non-contextual bandits and a CVAE for contextual and combinatorial ones.
Also picks the two conditioning rewards for non-binary reward domains.
비문맥 밴딧용 카운팅 테이블과 문맥/조합 밴딧용 CVAE로 pi(a | c, r)를 추정
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from .core import (
    Action,
    CombinatorialAction,
    Context,
    EMPTY_CONTEXT,
    InvalidConfig,
    InvalidInput,
    InvalidReward,
    NoData,
    NotTrained,
    Observation,
    ProbabilityVector,
    Reward,
    RewardDomain,
    as_observations,
    check_action,
    normalize,
    rng_seed,
)
from .neural import DTYPE, Cvae, CvaeBatch, TrainConfig, TrainingHistory, make_generator, train_cvae

logger = logging.getLogger(__name__)

DEFAULT_Q0 = 10.0
DEFAULT_Q1 = 90.0
DEFAULT_LATENT_SAMPLES = 5

RewardLike = Union[Reward, float, int]


def _reward_value(r: RewardLike) -> float:
    return r.value if isinstance(r, Reward) else float(r)


# ==================== Conditioning rewards / 조건 보상 ====================

@dataclass(frozen=True)
class ConditionRewards:
    """
    The low and high rewards the policy is conditioned on
    정책이 조건으로 삼는 낮은/높은 보상
    """
    r_lo: Reward
    r_hi: Reward
    q0: float = DEFAULT_Q0
    q1: float = DEFAULT_Q1

    def __post_init__(self):
        if not 0.0 < self.q0 < self.q1 < 100.0:
            raise InvalidConfig(f"Quantiles must satisfy 0 < q0 < q1 < 100, got ({self.q0}, {self.q1})")
        if self.r_lo.value > self.r_hi.value:
            raise InvalidConfig(f"r_lo {self.r_lo.value} exceeds r_hi {self.r_hi.value}")

    def index(self, r: RewardLike) -> int:
        """0 for r_lo, 1 for r_hi; InvalidReward for anything else"""
        value = _reward_value(r)
        if value == self.r_hi.value:
            return 1
        if value == self.r_lo.value:
            return 0
        raise InvalidReward(f"Reward {value} is neither condition ({self.r_lo.value}, {self.r_hi.value})")

    def nearest(self, r: RewardLike) -> int:
        """Index of the nearer condition; ties go to r_hi"""
        value = _reward_value(r)
        return int(abs(value - self.r_hi.value) <= abs(value - self.r_lo.value))


BINARY_CONDITIONS = ConditionRewards(Reward(0.0), Reward(1.0))


def select_condition_rewards(
    rewards: Sequence[float],
    domain: Union[RewardDomain, str] = RewardDomain.BINARY,
    q0: float = DEFAULT_Q0,
    q1: float = DEFAULT_Q1,
    domain_values: Optional[Sequence[float]] = None
) -> ConditionRewards:
    """
    Choose (r_lo, r_hi) for a reward domain
    보상 도메인에 맞는 조건 보상 선택

    Args:
        rewards: Observed reward history
        domain: Reward domain tag
        q0, q1: Percentiles for quantile-based domains
        domain_values: Support of a discrete-finite domain (falls back to the
            observed values when omitted)

    Returns:
        ConditionRewards; binary -> (0, 1), discrete-finite -> (min, max),
        continuous -> linear-interpolation quantiles, discrete-unbounded ->
        quantiles rounded to the nearest observed value

    Raises:
        NoData: empty history where the domain needs one
    """
    domain = RewardDomain(domain)
    if not 0.0 < q0 < q1 < 100.0:
        raise InvalidConfig(f"Quantiles must satisfy 0 < q0 < q1 < 100, got ({q0}, {q1})")

    if domain == RewardDomain.BINARY:
        return replace(BINARY_CONDITIONS, q0=q0, q1=q1)

    values = np.asarray(rewards, dtype=np.float64).reshape(-1)
    if domain == RewardDomain.DISCRETE_FINITE:
        support = np.asarray(domain_values if domain_values is not None else values, dtype=np.float64)
        if support.size == 0:
            raise NoData("Discrete-finite domain needs its support or a reward history")
        return ConditionRewards(Reward(support.min(), domain), Reward(support.max(), domain), q0, q1)

    if values.size == 0:
        raise NoData("Quantile condition rewards need a nonempty reward history")
    lo, hi = np.percentile(values, [q0, q1], method='linear')
    if domain == RewardDomain.DISCRETE_UNBOUNDED:
        observed = np.unique(values)
        lo = observed[np.argmin(np.abs(observed - lo))]
        hi = observed[np.argmin(np.abs(observed - hi))]
    return ConditionRewards(Reward(lo, domain), Reward(hi, domain), q0, q1)


# ==================== Counting backend / 카운팅 모델 ====================

@dataclass
class CountingRCP:
    """
    Tabular pi(a | r) from action frequencies per reward condition
    보상 조건별 행동 빈도 기반 표 형식 정책

    Args:
        n_actions: Number of arms K
        smoothing: Pseudo-count alpha_s added to every cell
        conditions: The two reward values the table is split by
        snap_to_nearest: Count every reward under the nearer condition instead
            of rejecting values other than r_lo and r_hi (non-binary domains)
    """
    n_actions: int
    smoothing: float = 1.0
    conditions: ConditionRewards = BINARY_CONDITIONS
    counts: np.ndarray = field(default=None, repr=False)
    snap_to_nearest: bool = False

    def __post_init__(self):
        if self.n_actions < 1:
            raise InvalidConfig(f"n_actions must be >= 1, got {self.n_actions}")
        if self.smoothing < 0:
            raise InvalidConfig(f"smoothing must be >= 0, got {self.smoothing}")
        if self.counts is None:
            self.counts = np.zeros((2, self.n_actions), dtype=np.float64)

    def update(self, batch: Sequence[Observation]) -> 'CountingRCP':
        """Add a batch in place; rejects rewards outside the two conditions unless snapping"""
        batch = as_observations(batch)
        row_of = self.conditions.nearest if self.snap_to_nearest else self.conditions.index
        rows = [row_of(obs.reward) for obs in batch]
        for row, obs in zip(rows, batch):
            self.counts[row, check_action(obs.action, self.n_actions)] += 1.0
        return self

    def policy(self, r: RewardLike) -> ProbabilityVector:
        return normalize(self.counts[self.conditions.index(r)] + self.smoothing)

    def copy(self) -> 'CountingRCP':
        return replace(self, counts=self.counts.copy())


def counting_update(m: CountingRCP, batch: Sequence[Observation]) -> CountingRCP:
    """New model with the batch counted"""
    return m.copy().update(batch)


def counting_policy(m: CountingRCP, r: RewardLike) -> ProbabilityVector:
    """
    normalize(counts_r + alpha_s)

    Raises:
        DegenerateNormalization: no counts and no smoothing
    """
    return m.policy(r)


# ==================== CVAE backend / CVAE 모델 ====================

class CvaeRCP:
    """
    CVAE estimate of pi(a | c, r), retrained from scratch on every release
    릴리스마다 처음부터 재학습하는 CVAE 정책 추정기

    Flat action spaces use one head of width K; combinatorial spaces use one
    head per slot and the policy is their product. Queries average the head
    outputs over prior latent samples z ~ N(0, I).
    """

    def __init__(
        self,
        slot_sizes: Sequence[int],
        context_dim: int = 0,
        config: Optional[TrainConfig] = None,
        conditions: ConditionRewards = BINARY_CONDITIONS,
        n_latent_samples: int = DEFAULT_LATENT_SAMPLES
    ):
        if n_latent_samples < 1:
            raise InvalidConfig(f"n_latent_samples must be >= 1, got {n_latent_samples}")
        self.slot_sizes = tuple(int(s) for s in slot_sizes)
        self.context_dim = int(context_dim)
        self.config = config or TrainConfig()
        self.conditions = conditions
        self.n_latent_samples = int(n_latent_samples)
        self.n_actions = int(np.prod(self.slot_sizes))
        self.combinatorial = len(self.slot_sizes) > 1

        self.replay: List[Observation] = []
        self.model: Optional[Cvae] = None
        self.history: Optional[TrainingHistory] = None
        self.rounds = 0

    @property
    def trained(self) -> bool:
        return self.model is not None

    def _choices(self, action: Action) -> Tuple[int, ...]:
        if isinstance(action, CombinatorialAction):
            action.validate(self.slot_sizes)
            return action.choices
        if self.combinatorial:
            index = check_action(action, self.n_actions)
            return tuple(int(i) for i in np.unravel_index(index, self.slot_sizes))
        return (check_action(action, self.n_actions),)

    def _context_rows(self, contexts: Sequence[Context]) -> torch.Tensor:
        rows = np.zeros((len(contexts), self.context_dim))
        for i, context in enumerate(contexts):
            if context.dim != self.context_dim:
                raise InvalidInput(f"Expected context of dimension {self.context_dim}, got {context.dim}")
            rows[i] = context.values
        return torch.as_tensor(rows, dtype=DTYPE)

    def to_batch(self, dataset: Sequence[Observation]) -> CvaeBatch:
        """Training tensors; rewards enter as the index of the nearer condition"""
        dataset = as_observations(dataset)
        actions = torch.as_tensor([self._choices(obs.action) for obs in dataset], dtype=torch.long)
        actions = actions.reshape(len(dataset), len(self.slot_sizes))
        contexts = self._context_rows([obs.context for obs in dataset])
        rewards = torch.as_tensor(
            [[float(self.conditions.nearest(obs.reward))] for obs in dataset], dtype=DTYPE
        ).reshape(len(dataset), 1)
        return CvaeBatch(actions, contexts, rewards)

    def retrain(self, dataset: Sequence[Observation], config: Optional[TrainConfig] = None) -> TrainingHistory:
        """
        Fresh initialization, then config.steps of ELBO training on the dataset
        새 초기화 후 전체 데이터로 ELBO 학습

        Raises:
            NoData: empty dataset
        """
        dataset = as_observations(dataset)
        if not dataset:
            raise NoData("CVAE retraining needs at least one observation")
        config = config or self.config
        generator = make_generator(config.seed)
        model = Cvae(
            self.slot_sizes,
            self.context_dim,
            latent_dim=config.latent_dim,
            hidden_width=config.hidden_width,
            n_hidden=config.n_hidden,
            injection=config.injection,
            generator=generator
        )
        self.history = train_cvae(model, self.to_batch(dataset), config, generator)
        self.model = model
        self.replay = list(dataset)
        self.rounds += 1
        return self.history

    def update(self, batch: Sequence[Observation]) -> TrainingHistory:
        """Append a released batch to the replay set and retrain on all of it"""
        return self.retrain(self.replay + as_observations(batch))

    def _require_model(self) -> Cvae:
        if self.model is None:
            raise NotTrained("CVAE policy queried before the first training round")
        return self.model

    def _latent(self, n_rows: int, rng: Optional[np.random.Generator]) -> torch.Tensor:
        generator = make_generator(rng_seed(rng) if rng is not None else self.config.seed)
        return torch.randn((self.n_latent_samples, n_rows, self.config.latent_dim), generator=generator, dtype=DTYPE)

    def _head_probs(self, context: Context, condition: int, z: torch.Tensor) -> List[torch.Tensor]:
        # (n_z, S_i) head outputs for one context under one condition
        model = self._require_model()
        n_z = z.shape[0]
        contexts = self._context_rows([context]).expand(n_z, self.context_dim)
        rewards = torch.full((n_z, 1), float(condition), dtype=DTYPE)
        with torch.no_grad():
            return model.head_probs(contexts, rewards, z[:, 0, :])

    @staticmethod
    def _joint(heads: List[torch.Tensor]) -> np.ndarray:
        # Mean over z of the outer product of slot heads, C order
        joint = heads[0]
        for head in heads[1:]:
            joint = (joint[:, :, None] * head[:, None, :]).reshape(joint.shape[0], -1)
        return joint.mean(dim=0).numpy()

    def policy(
        self,
        context: Context = EMPTY_CONTEXT,
        r: RewardLike = 1.0,
        rng: Optional[np.random.Generator] = None
    ) -> ProbabilityVector:
        """
        pi(a | c, r) over the flat (joint) action space
        잠재 변수 평균으로 주변화한 정책

        Raises:
            NotTrained: before the first retrain
        """
        condition = self.conditions.index(r)
        heads = self._head_probs(context, condition, self._latent(1, rng))
        return normalize(self._joint(heads))

    def policies(
        self,
        context: Context = EMPTY_CONTEXT,
        rng: Optional[np.random.Generator] = None
    ) -> Tuple[ProbabilityVector, ProbabilityVector]:
        """(pi(. | c, r_lo), pi(. | c, r_hi)) sharing the same latent draws"""
        z = self._latent(1, rng)
        return tuple(normalize(self._joint(self._head_probs(context, condition, z))) for condition in (0, 1))

    def slot_policies(
        self,
        context: Context = EMPTY_CONTEXT,
        r: RewardLike = 1.0,
        rng: Optional[np.random.Generator] = None
    ) -> List[ProbabilityVector]:
        """Per-slot marginals of the joint policy"""
        heads = self._head_probs(context, self.conditions.index(r), self._latent(1, rng))
        return [normalize(head.mean(dim=0).numpy()) for head in heads]

    def action_probability(
        self,
        contexts: Sequence[Context],
        actions: Sequence[Action],
        r: RewardLike,
        rng: Optional[np.random.Generator] = None
    ) -> np.ndarray:
        """
        Batched pi(a^i | c^i, r) for logged rows
        기록된 각 행의 행동 확률을 일괄 계산
        """
        model = self._require_model()
        if len(contexts) != len(actions):
            raise InvalidInput(f"{len(contexts)} contexts but {len(actions)} actions")
        n = len(actions)
        if n == 0:
            return np.zeros(0)
        condition = self.conditions.index(r)
        choices = torch.as_tensor([self._choices(a) for a in actions], dtype=torch.long).reshape(n, -1)
        z = self._latent(n, rng)
        c = self._context_rows(contexts).unsqueeze(0).expand(self.n_latent_samples, n, self.context_dim)
        rewards = torch.full((self.n_latent_samples * n, 1), float(condition), dtype=DTYPE)
        with torch.no_grad():
            heads = model.head_probs(
                c.reshape(self.n_latent_samples * n, self.context_dim),
                rewards,
                z.reshape(self.n_latent_samples * n, self.config.latent_dim)
            )
        prob = torch.ones(self.n_latent_samples * n, dtype=DTYPE)
        tiled = choices.repeat(self.n_latent_samples, 1)
        for slot, head in enumerate(heads):
            prob = prob * head.gather(1, tiled[:, slot:slot + 1]).squeeze(1)
        return prob.reshape(self.n_latent_samples, n).mean(dim=0).numpy()


def cvae_retrain(m: CvaeRCP, dataset: Sequence[Observation], train_config: Optional[TrainConfig] = None) -> CvaeRCP:
    m.retrain(dataset, train_config)
    return m


def cvae_policy(
    m: CvaeRCP,
    c: Context,
    r: RewardLike,
    rng: Optional[np.random.Generator] = None
) -> ProbabilityVector:
    return m.policy(c, r, rng)
