"""
Simulated Bandit Environments
시뮬레이션 밴딧 환경

Bernoulli arms with Beta-distributed means, contextual environments driven by
a randomly initialized value network, the combinatorial-action environment,
and the delay buffer that withholds rewards until N_b observations accumulate.
베타 분포 평균의 베르누이 팔, 신경망 기반 컨텍스트 환경, 조합 행동 환경, 지연 버퍼
"""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Deque, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from .core import (
    Action,
    CombinatorialAction,
    Context,
    InvalidAction,
    InvalidConfig,
    Observation,
    Reward,
    RewardDomain,
    Unsupported,
    check_action,
    make_rng,
)
from .neural import DTYPE, DenseNet, make_generator

logger = logging.getLogger(__name__)

FAMILIES = ('bernoulli', 'contextual', 'combinatorial')
DEFAULT_SLOT_SIZES = (2, 4, 6, 16, 32)
VALUE_NET_WIDTHS = (64, 64)


def sample_sphere(dim: int, rng: np.random.Generator) -> Context:
    """Uniform draw from the unit hypersphere (normalized Gaussian)"""
    while True:
        g = rng.standard_normal(dim)
        norm = np.linalg.norm(g)
        if norm > 0.0:
            return Context(g / norm)


def _bernoulli(mean: float, rng: np.random.Generator) -> Reward:
    return Reward(1.0 if rng.random() < mean else 0.0, RewardDomain.BINARY)


class BernoulliBetaEnv:
    """
    K Bernoulli arms with means drawn once from Beta(alpha, beta)
    베타 분포에서 평균을 뽑은 K개의 베르누이 팔
    """

    family = 'bernoulli'
    is_contextual = False
    context_dim = 0

    def __init__(self, n_arms: int, alpha: float, beta: float, seed: int):
        """
        Args:
            n_arms: Number of arms K
            alpha: Beta prior alpha
            beta: Beta prior beta
            seed: Environment seed (fixes the arm means)
        """
        if n_arms < 1:
            raise InvalidConfig(f"n_arms must be >= 1, got {n_arms}")
        if alpha <= 0 or beta <= 0:
            raise InvalidConfig(f"Beta prior parameters must be positive, got ({alpha}, {beta})")
        self.n_arms = int(n_arms)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.seed = seed
        self.arm_means = make_rng(seed).beta(self.alpha, self.beta, size=self.n_arms)
        self.arm_means.flags.writeable = False
        logger.debug(f"Bernoulli env K={n_arms} Beta({alpha}, {beta}) best mean {self.arm_means.max():.4f}")

    @property
    def n_actions(self) -> int:
        return self.n_arms

    def sample_context(self, rng: np.random.Generator) -> Context:
        raise Unsupported("Bernoulli environment has no contexts")

    def action_values(self, context: Optional[Context] = None) -> np.ndarray:
        """R(a) for every arm"""
        return np.asarray(self.arm_means)

    def expected_reward(self, action: Action, context: Optional[Context] = None) -> float:
        return float(self.arm_means[check_action(action, self.n_arms)])

    def pull(self, action: Action, context: Optional[Context], rng: np.random.Generator) -> Reward:
        return _bernoulli(self.expected_reward(action, context), rng)

    def optimal_value(self, context: Optional[Context] = None) -> float:
        return float(self.arm_means.max())

    def optimal_action(self, context: Optional[Context] = None) -> int:
        return int(np.argmax(self.arm_means))


def make_bernoulli_env(K: int, alpha: float, beta: float, seed: int) -> BernoulliBetaEnv:
    """Build a Beta-Bernoulli environment / 베타-베르누이 환경 생성"""
    return BernoulliBetaEnv(K, alpha, beta, seed)


class _ValueNetEnv:
    """Shared machinery for value-network environments"""

    is_contextual = True

    def __init__(self, input_dim: int, context_dim: int, shift: float, seed: int):
        if context_dim < 1:
            raise InvalidConfig(f"context_dim must be >= 1, got {context_dim}")
        self.context_dim = int(context_dim)
        self.shift = float(shift)
        self.seed = seed
        self.value_net = DenseNet(
            input_dim, VALUE_NET_WIDTHS, 1, activation='tanh', generator=make_generator(seed)
        )
        self.value_net.requires_grad_(False)

    def sample_context(self, rng: np.random.Generator) -> Context:
        return sample_sphere(self.context_dim, rng)

    def _check_context(self, context: Optional[Context]) -> np.ndarray:
        if context is None or context.dim != self.context_dim:
            got = None if context is None else context.dim
            raise InvalidAction(f"Context of dimension {self.context_dim} required, got {got}")
        return context.values

    def _values(self, encoded_actions: np.ndarray, context: np.ndarray) -> np.ndarray:
        n = encoded_actions.shape[0]
        x = np.concatenate([encoded_actions, np.broadcast_to(context, (n, self.context_dim))], axis=1)
        with torch.no_grad():
            logits = self.value_net(torch.as_tensor(x, dtype=DTYPE)).reshape(-1)
            return torch.sigmoid(logits + self.shift).numpy()

    def pull(self, action: Action, context: Optional[Context], rng: np.random.Generator) -> Reward:
        return _bernoulli(self.expected_reward(action, context), rng)


class ContextualNeuralEnv(_ValueNetEnv):
    """
    K arms whose success probability is sigmoid(net(a, c) + s)
    랜덤 초기화 신경망으로 정의된 컨텍스트 밴딧 환경
    """

    family = 'contextual'

    def __init__(self, n_arms: int = 4, context_dim: int = 20, shift: float = 0.0, seed: int = 0):
        if n_arms < 1:
            raise InvalidConfig(f"n_arms must be >= 1, got {n_arms}")
        self.n_arms = int(n_arms)
        super().__init__(self.n_arms + context_dim, context_dim, shift, seed)
        self._one_hot = np.eye(self.n_arms)

    @property
    def n_actions(self) -> int:
        return self.n_arms

    def action_values(self, context: Optional[Context]) -> np.ndarray:
        """R(a | c) for every arm"""
        return self._values(self._one_hot, self._check_context(context))

    def expected_reward(self, action: Action, context: Optional[Context]) -> float:
        action = check_action(action, self.n_arms)
        return float(self._values(self._one_hot[action:action + 1], self._check_context(context))[0])

    def optimal_value(self, context: Optional[Context]) -> float:
        return float(self.action_values(context).max())

    def optimal_action(self, context: Optional[Context]) -> int:
        return int(np.argmax(self.action_values(context)))


class CombinatorialEnv(_ValueNetEnv):
    """
    One choice per slot; one-hot choices are concatenated for the value network
    슬롯별 선택을 연결한 조합 행동 환경
    """

    family = 'combinatorial'

    def __init__(
        self,
        slot_sizes: Sequence[int] = DEFAULT_SLOT_SIZES,
        context_dim: int = 20,
        shift: float = -3.0,
        seed: int = 0
    ):
        self.slot_sizes = tuple(int(s) for s in slot_sizes)
        if not self.slot_sizes or min(self.slot_sizes) < 1:
            raise InvalidConfig(f"slot_sizes must be positive, got {slot_sizes}")
        super().__init__(sum(self.slot_sizes) + context_dim, context_dim, shift, seed)
        self._offsets = np.cumsum((0,) + self.slot_sizes[:-1])

    @property
    def n_actions(self) -> int:
        return int(np.prod(self.slot_sizes))

    def encode(self, action: CombinatorialAction) -> int:
        """Flat joint index of a combinatorial action (C order)"""
        action.validate(self.slot_sizes)
        return int(np.ravel_multi_index(action.choices, self.slot_sizes))

    def decode(self, index: int) -> CombinatorialAction:
        """Combinatorial action at a flat joint index"""
        index = check_action(index, self.n_actions)
        return CombinatorialAction(tuple(int(i) for i in np.unravel_index(index, self.slot_sizes)))

    def _one_hot(self, choices: np.ndarray) -> np.ndarray:
        choices = np.atleast_2d(choices)
        encoded = np.zeros((choices.shape[0], sum(self.slot_sizes)))
        rows = np.arange(choices.shape[0])
        for slot, offset in enumerate(self._offsets):
            encoded[rows, offset + choices[:, slot]] = 1.0
        return encoded

    def expected_reward(self, action: Action, context: Optional[Context]) -> float:
        if not isinstance(action, CombinatorialAction):
            raise InvalidAction(f"Combinatorial environment expects CombinatorialAction, got {action!r}")
        action.validate(self.slot_sizes)
        encoded = self._one_hot(np.asarray(action.choices))
        return float(self._values(encoded, self._check_context(context))[0])

    def action_values(self, context: Optional[Context]) -> np.ndarray:
        """R(a | c) over the whole joint space (C order)"""
        grids = np.indices(self.slot_sizes).reshape(len(self.slot_sizes), -1).T
        return self._values(self._one_hot(grids), self._check_context(context))

    def optimal_value(self, context: Optional[Context] = None) -> float:
        raise Unsupported("Optimal value is not provided for the combinatorial environment; track reward instead")


Environment = Union[BernoulliBetaEnv, ContextualNeuralEnv, CombinatorialEnv]


def optimal_value(env: Environment, context: Optional[Context] = None) -> float:
    """max_a R(a | c); raises Unsupported for the combinatorial environment"""
    return env.optimal_value(context)


def expected_random_reward(env: Environment, rng: np.random.Generator, n_contexts: int = 200) -> float:
    """
    Expected reward of the uniform-random policy
    균등 랜덤 정책의 기대 보상

    Exact for Bernoulli arms, Monte Carlo over contexts otherwise.
    """
    if not env.is_contextual:
        return float(np.mean(env.action_values()))
    values = [float(np.mean(env.action_values(env.sample_context(rng)))) for _ in range(n_contexts)]
    return float(np.mean(values))


@dataclass(frozen=True)
class EnvironmentSpec:
    """
    Environment family and parameters as written in experiment configs
    실험 설정의 환경 사양
    """
    family: str = 'bernoulli'
    n_arms: int = 10
    alpha: float = 1.0
    beta: float = 9.0
    context_dim: int = 20
    shift: float = 0.0
    slot_sizes: Tuple[int, ...] = DEFAULT_SLOT_SIZES
    delay: int = 100

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidConfig(f"Unknown environment family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "slot_sizes", tuple(int(s) for s in self.slot_sizes))
        if self.delay < 1:
            raise InvalidConfig(f"delay (N_b) must be >= 1, got {self.delay}")

    @property
    def label(self) -> str:
        if self.family == 'bernoulli':
            return f"K{self.n_arms}_a{self.alpha:g}_b{self.beta:g}_Nb{self.delay}"
        if self.family == 'contextual':
            return f"ctx_K{self.n_arms}_d{self.context_dim}_s{self.shift:g}_Nb{self.delay}"
        slots = 'x'.join(str(s) for s in self.slot_sizes)
        return f"comb_{slots}_d{self.context_dim}_s{self.shift:g}_Nb{self.delay}"


def make_environment(spec: EnvironmentSpec, seed: int) -> Environment:
    """Construct the environment an EnvironmentSpec describes"""
    if spec.family == 'bernoulli':
        return BernoulliBetaEnv(spec.n_arms, spec.alpha, spec.beta, seed)
    if spec.family == 'contextual':
        return ContextualNeuralEnv(spec.n_arms, spec.context_dim, spec.shift, seed)
    return CombinatorialEnv(spec.slot_sizes, spec.context_dim, spec.shift, seed)


class DelayBuffer:
    """
    Withholds observations until N_b of them are pending, then releases all
    N_b개의 관측이 쌓일 때까지 보류하는 지연 버퍼
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise InvalidConfig(f"Delay buffer capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self.pending: Deque[Observation] = deque()
        self.total_pushed = 0
        self.total_released = 0

    def __len__(self) -> int:
        return len(self.pending)

    def push(self, obs: Observation):
        self.pending.append(obs)
        self.total_pushed += 1

    def poll(self) -> List[Observation]:
        """Full pending batch once len >= capacity, else []"""
        if len(self.pending) < self.capacity:
            return []
        batch = list(self.pending)
        self.pending.clear()
        self.total_released += len(batch)
        return batch


def buffer_push(buf: DelayBuffer, obs: Observation):
    buf.push(obs)


def buffer_poll(buf: DelayBuffer) -> List[Observation]:
    return buf.poll()
