"""
Generalized Marginalization
일반화 주변화

Builds the acting (inference) policy from the two reward-conditioned policies
p0 = pi(a | c, r_lo) and p1 = pi(a | c, r_hi):

    optimized   (1 - lam) * p0 + lam * p1 with lam at the feasibility bound
                that maximizes the importance-sampling reward estimate
    optimistic  p1
    submax      normalize(max(p1 - p0, 0))
    negative    p0

두 조건부 정책을 섞어 추론 정책을 구성 (최적화, 낙관, SubMax, 부정)
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import (
    InfeasibleLambda,
    InvalidInput,
    InvalidPropensity,
    NoData,
    Observation,
    ProbabilityVector,
    as_observations,
    normalize,
)

logger = logging.getLogger(__name__)

# Slack on mix entries before a lambda counts as infeasible / 실현 가능성 여유
FEASIBILITY_SLACK = 1e-12

# pi(a^i | c^i) for logged rows: a fixed vector (non-contextual) or a batch evaluator
PolicyEval = Union[ProbabilityVector, Callable[[Sequence[Observation]], np.ndarray]]


class Strategy(str, Enum):
    """Inference-policy construction / 추론 정책 구성 방식"""
    OPTIMIZED = 'optimized'
    OPTIMISTIC = 'optimistic'
    SUBMAX = 'submax'
    NEGATIVE = 'negative'


@dataclass(frozen=True)
class LambdaBounds:
    """Feasible interval of the mixing weight lam"""
    lower: float = -math.inf
    upper: float = math.inf

    def __contains__(self, lam: float) -> bool:
        return self.lower - FEASIBILITY_SLACK <= lam <= self.upper + FEASIBILITY_SLACK


@dataclass(frozen=True)
class WeightFunction:
    """Weights (w0, w1) = (1 - lam, lam) on the low and high conditions"""
    lam: float = 1.0

    @property
    def w0(self) -> float:
        return 1.0 - self.lam

    @property
    def w1(self) -> float:
        return self.lam

    def apply(self, p0: ProbabilityVector, p1: ProbabilityVector) -> ProbabilityVector:
        return mix(p0, p1, self.lam)


def _pair(p0: ProbabilityVector, p1: ProbabilityVector):
    if len(p0) != len(p1):
        raise InvalidInput(f"Policies differ in length: {len(p0)} vs {len(p1)}")
    return p0.probs, p1.probs


def mix(p0: ProbabilityVector, p1: ProbabilityVector, lam: float) -> ProbabilityVector:
    """
    (1 - lam) * p0 + lam * p1
    두 정책의 선형 결합

    Entries within rounding of zero are clipped; lam = 0 and lam = 1 return
    the inputs unchanged.

    Raises:
        InfeasibleLambda: some entry is clearly negative
    """
    a, b = _pair(p0, p1)
    if lam == 1.0:
        return p1
    if lam == 0.0:
        return p0
    mixed = (1.0 - lam) * a + lam * b
    # Rounding grows with |lam| for bounds far from [0, 1]
    slack = FEASIBILITY_SLACK * max(1.0, abs(lam))
    if mixed.min() < -slack:
        raise InfeasibleLambda(f"lambda={lam!r} gives a negative entry {mixed.min():.3e}")
    return normalize(np.clip(mixed, 0.0, None))


def lambda_bounds(p0: ProbabilityVector, p1: ProbabilityVector) -> LambdaBounds:
    """
    Interval of lam keeping every entry of the mix nonnegative
    혼합 정책이 비음수가 되는 lam 구간

    A positive difference p1_i - p0_i bounds lam from below, a negative one
    from above; both lam = 0 and lam = 1 are always inside.
    """
    a, b = _pair(p0, p1)
    diff = b - a
    up, down = diff > 0.0, diff < 0.0
    lower = float(np.max(-a[up] / diff[up])) if up.any() else -math.inf
    upper = float(np.min(-a[down] / diff[down])) if down.any() else math.inf
    return LambdaBounds(lower, upper)


def _evaluate(pi: PolicyEval, data: Sequence[Observation]) -> np.ndarray:
    if isinstance(pi, ProbabilityVector):
        return np.array([pi[int(obs.action)] for obs in data], dtype=np.float64)
    values = np.asarray(pi(data), dtype=np.float64).reshape(-1)
    if values.shape[0] != len(data):
        raise InvalidInput(f"Policy evaluator returned {values.shape[0]} values for {len(data)} rows")
    return values


def _weighted_rewards(data: Sequence[Observation]) -> np.ndarray:
    data = as_observations(data)
    if not data:
        raise NoData("Importance-sampling estimate needs at least one observation")
    propensities = np.array([obs.propensity for obs in data])
    if np.any(propensities <= 0.0):
        raise InvalidPropensity("Importance sampling needs positive propensities")
    return np.array([obs.reward.value for obs in data]) / propensities


def is_coefficient(data: Sequence[Observation], pi0_eval: PolicyEval, pi1_eval: PolicyEval) -> float:
    """
    Slope in lam of the importance-sampling reward estimate
    중요도 샘플링 보상 추정치의 lam 계수

    (1/N) * sum_i (pi1(a^i | c^i) - pi0(a^i | c^i)) * r^i / q^i
    """
    weights = _weighted_rewards(data)
    return float(np.mean((_evaluate(pi1_eval, data) - _evaluate(pi0_eval, data)) * weights))


def is_estimate(data: Sequence[Observation], lam: float, pi0_eval: PolicyEval, pi1_eval: PolicyEval) -> float:
    """Full importance-sampling estimate of the lam-mix, constant term included"""
    weights = _weighted_rewards(data)
    mixed = (1.0 - lam) * _evaluate(pi0_eval, data) + lam * _evaluate(pi1_eval, data)
    return float(np.mean(mixed * weights))


def optimal_lambda(bounds: LambdaBounds, coefficient: float) -> float:
    """
    Bound maximizing a linear objective with the given slope

    Falls back to lam = 1 when the slope is zero or the bound is infinite.
    """
    if coefficient > 0.0 and math.isfinite(bounds.upper):
        return bounds.upper
    if coefficient < 0.0 and math.isfinite(bounds.lower):
        return bounds.lower
    return 1.0


def optimized_policy(
    p0: ProbabilityVector,
    p1: ProbabilityVector,
    data: Sequence[Observation],
    pi0_eval: Optional[PolicyEval] = None,
    pi1_eval: Optional[PolicyEval] = None
) -> ProbabilityVector:
    """
    Mix at the bound that maximizes the importance-sampling estimate
    중요도 샘플링 추정치를 최대화하는 경계에서 혼합

    Args:
        p0, p1: Conditional policies at the acting context
        data: Logged observations (c, a, r, q)
        pi0_eval, pi1_eval: Conditional policies evaluated on the logged rows;
            default to p0 / p1 (non-contextual case)
    """
    pi0_eval = p0 if pi0_eval is None else pi0_eval
    pi1_eval = p1 if pi1_eval is None else pi1_eval
    coefficient = is_coefficient(data, pi0_eval, pi1_eval)
    lam = optimal_lambda(lambda_bounds(p0, p1), coefficient)
    logger.debug(f"Optimized mix: coefficient {coefficient:.4g}, lambda {lam:.4g}")
    return mix(p0, p1, lam)


def optimistic_policy(p1: ProbabilityVector) -> ProbabilityVector:
    return p1


def negative_policy(p0: ProbabilityVector) -> ProbabilityVector:
    return p0


def submax_policy(p0: ProbabilityVector, p1: ProbabilityVector) -> ProbabilityVector:
    """normalize(max(p1 - p0, 0)); p1 when the difference is nowhere positive"""
    a, b = _pair(p0, p1)
    gain = np.maximum(b - a, 0.0)
    if not gain.sum() > 0.0:
        return p1
    return normalize(gain)


def infer_policy(
    strategy: Union[Strategy, str],
    p0: ProbabilityVector,
    p1: ProbabilityVector,
    coefficient: Optional[float] = None
) -> ProbabilityVector:
    """
    Dispatch on the strategy; the optimized strategy needs the IS coefficient
    전략별 추론 정책 생성
    """
    strategy = Strategy(strategy)
    if strategy == Strategy.OPTIMIZED:
        if coefficient is None:
            raise InvalidInput("The optimized strategy needs the importance-sampling coefficient")
        return mix(p0, p1, optimal_lambda(lambda_bounds(p0, p1), coefficient))
    if strategy == Strategy.OPTIMISTIC:
        return optimistic_policy(p1)
    if strategy == Strategy.NEGATIVE:
        return negative_policy(p0)
    return submax_policy(p0, p1)
