"""
Core Domain Types for Reward-Conditioned Bandits
보상 조건부 밴딧 핵심 도메인 타입

Actions, contexts, rewards, observations, probability vectors, the
exception hierarchy and the seeded random-source helpers shared by every module.
모든 모듈이 공유하는 행동, 컨텍스트, 보상, 관측, 확률 벡터, 예외 계층 및 시드 난수 도우미
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

# Probability tolerance after 64-bit accumulation / 64비트 누적 후 확률 허용 오차
PROB_TOLERANCE = 1e-9

ActionId = int


# ==================== Exceptions / 예외 ====================

class BanditError(Exception):
    """Base class for every error raised by the bandits package"""


class DegenerateNormalization(BanditError, ValueError):
    """All-zero or negative weights passed to normalize"""


class InvalidConfig(BanditError, ValueError):
    """Experiment, environment or policy configuration is invalid"""


class InvalidAction(BanditError, ValueError):
    """Action outside the environment's action space"""


class InvalidReward(BanditError, ValueError):
    """Reward value not accepted by the receiving model"""


class InvalidInput(BanditError, ValueError):
    """Malformed arguments (mismatched lengths and similar)"""


class InvalidPropensity(BanditError, ValueError):
    """Logged propensity outside (0, 1]"""


class InfeasibleLambda(BanditError, ValueError):
    """Mixing weight outside the feasible interval"""


class ShapeError(BanditError, ValueError):
    """Tensor widths do not match the network"""


class NoData(BanditError, ValueError):
    """Operation needs at least one observation"""


class Unsupported(BanditError, RuntimeError):
    """Operation not provided for this environment or model"""


class NotTrained(BanditError, RuntimeError):
    """Model queried before its first training round"""


class TrainingDiverged(BanditError, RuntimeError):
    """Non-finite gradients met during optimization"""


class IoError(BanditError, OSError):
    """Result files could not be written"""


# ==================== Value types / 값 타입 ====================

class RewardDomain(str, Enum):
    """Reward domain tag / 보상 도메인 태그"""
    BINARY = 'binary'
    DISCRETE_FINITE = 'discrete-finite'
    DISCRETE_UNBOUNDED = 'discrete-unbounded'
    CONTINUOUS = 'continuous'


@dataclass(frozen=True)
class CombinatorialAction:
    """
    One choice per slot of a combinatorial action space
    슬롯별 선택으로 구성된 조합 행동
    """
    choices: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'choices', tuple(int(c) for c in self.choices))

    def validate(self, slot_sizes: Sequence[int]):
        """Raise InvalidAction unless every choice fits its slot"""
        if len(self.choices) != len(slot_sizes):
            raise InvalidAction(
                f"Expected {len(slot_sizes)} slots, got {len(self.choices)}"
            )
        for slot, (choice, size) in enumerate(zip(self.choices, slot_sizes)):
            if not 0 <= choice < size:
                raise InvalidAction(f"Slot {slot} choice {choice} outside [0, {size})")


Action = Union[ActionId, CombinatorialAction]


@dataclass(frozen=True)
class Context:
    """
    Real-valued context vector; dimension 0 means non-contextual
    실수 컨텍스트 벡터 (차원 0 = 비컨텍스트)
    """
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise InvalidInput("Context entries must be finite")
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def __eq__(self, other) -> bool:
        return isinstance(other, Context) and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())


EMPTY_CONTEXT = Context()


@dataclass(frozen=True)
class Reward:
    """Reward value with its domain tag / 도메인 태그가 있는 보상"""
    value: float
    domain: RewardDomain = RewardDomain.BINARY

    def __post_init__(self):
        object.__setattr__(self, 'value', float(self.value))
        object.__setattr__(self, 'domain', RewardDomain(self.domain))
        if self.domain == RewardDomain.BINARY and self.value not in (0.0, 1.0):
            raise InvalidReward(f"Binary reward must be 0 or 1, got {self.value}")


@dataclass(frozen=True)
class Observation:
    """
    One logged interaction (c, a, r, q)
    하나의 기록된 상호작용 (컨텍스트, 행동, 보상, 성향 점수)
    """
    context: Context
    action: Action
    reward: Reward
    propensity: float

    def __post_init__(self):
        propensity = float(self.propensity)
        if not 0.0 < propensity <= 1.0:
            raise InvalidPropensity(f"Propensity must lie in (0, 1], got {propensity}")
        object.__setattr__(self, 'propensity', propensity)


@dataclass(frozen=True)
class ProbabilityVector:
    """
    Finite categorical distribution over actions
    행동에 대한 유한 범주형 분포

    Construction fails unless every entry is >= 0 and the entries sum to 1
    within PROB_TOLERANCE.
    """
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64).reshape(-1)
        if probs.size == 0:
            raise InvalidInput("Probability vector must not be empty")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0.0):
            raise InvalidInput("Probability entries must be finite and nonnegative")
        total = probs.sum()
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise InvalidInput(f"Probabilities sum to {total!r}, not 1")
        probs.flags.writeable = False
        object.__setattr__(self, 'probs', probs)

    def __len__(self) -> int:
        return int(self.probs.shape[0])

    def __getitem__(self, index):
        return self.probs[index]

    def __eq__(self, other) -> bool:
        return isinstance(other, ProbabilityVector) and np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())

    def expectation(self, values: Sequence[float]) -> float:
        """Expected value of per-action values under this distribution"""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.probs.shape:
            raise InvalidInput(f"Expected {len(self)} values, got {values.shape}")
        return float(self.probs @ values)

    @classmethod
    def uniform(cls, size: int) -> 'ProbabilityVector':
        return cls(np.full(size, 1.0 / size))


# ==================== Operations / 연산 ====================

def normalize(weights: Union[Sequence[float], np.ndarray, ProbabilityVector]) -> ProbabilityVector:
    """
    Scale nonnegative weights to sum to one
    비음수 가중치를 합이 1이 되도록 정규화

    Args:
        weights: Nonnegative weights with at least one positive entry

    Returns:
        ProbabilityVector proportional to the weights

    Raises:
        DegenerateNormalization: all-zero or negative input
    """
    # Already normalized vectors pass through untouched
    # 이미 정규화된 벡터는 그대로 반환
    if isinstance(weights, ProbabilityVector):
        return weights

    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.size == 0 or np.any(w < 0.0) or not np.all(np.isfinite(w)):
        raise DegenerateNormalization("Weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0.0:
        raise DegenerateNormalization("Weights sum to zero")
    return ProbabilityVector(w / total)


def sample(pv: ProbabilityVector, rng: np.random.Generator) -> ActionId:
    """
    Draw an index with probability pv[i]
    확률 벡터에서 인덱스 샘플링

    Args:
        pv: Distribution to sample from
        rng: Explicit random source

    Returns:
        Sampled action index
    """
    cdf = np.cumsum(pv.probs)
    u = rng.random() * cdf[-1]
    index = int(np.searchsorted(cdf, u, side='right'))
    # Rounding can push u onto the last edge
    index = min(index, len(pv) - 1)
    # Never return a zero-probability entry
    while pv.probs[index] == 0.0:
        index -= 1
    return index


def check_action(action: ActionId, n_actions: int) -> ActionId:
    """Raise InvalidAction unless 0 <= action < n_actions"""
    if isinstance(action, (bool, np.bool_)) or not isinstance(action, (int, np.integer)):
        raise InvalidAction(f"Action must be an integer index, got {action!r}")
    if not 0 <= int(action) < n_actions:
        raise InvalidAction(f"Action {action} outside [0, {n_actions})")
    return int(action)


# ==================== Random sources / 난수원 ====================

def make_rng(seed: Optional[Union[int, Sequence[int], np.random.SeedSequence]]) -> np.random.Generator:
    """Seeded generator; the single way modules create random sources"""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.default_rng(seed)


def derive_seed(base_seed: int, *keys: int) -> np.random.SeedSequence:
    """
    Derive an independent seed sequence from a base seed and integer keys
    기본 시드와 키로부터 독립적인 시드 시퀀스 파생

    Used for per-repetition streams: derive_seed(base, rep_index).
    """
    return np.random.SeedSequence(entropy=int(base_seed), spawn_key=tuple(int(k) for k in keys))


def split_rng(seed_seq: np.random.SeedSequence, n: int) -> List[np.random.Generator]:
    """Split one seed sequence into n independent generators"""
    return [make_rng(child) for child in seed_seq.spawn(n)]


def rng_seed(rng: np.random.Generator) -> int:
    """Draw a 63-bit integer seed for libraries that want plain integers (torch)"""
    return int(rng.integers(0, 2**63 - 1))


def as_observations(items: Iterable[Observation]) -> List[Observation]:
    """Materialize an observation batch, checking element types"""
    batch = list(items)
    for obs in batch:
        if not isinstance(obs, Observation):
            raise InvalidInput(f"Expected Observation, got {type(obs).__name__}")
    return batch
