"""
Reward-conditioned bandit library
보상 조건부 밴딧 라이브러리
"""

from .core import (
    BanditError,
    CombinatorialAction,
    Context,
    Observation,
    ProbabilityVector,
    Reward,
    RewardDomain,
    normalize,
    sample,
)
from .envs import BernoulliBetaEnv, CombinatorialEnv, ContextualNeuralEnv, DelayBuffer, EnvironmentSpec
from .baselines import (
    BasePolicy,
    BetaTSPolicy,
    EpsilonGreedyPolicy,
    NeuralEpsilonGreedyPolicy,
    NeuralTSPolicy,
    OraclePolicy,
    RandomPolicy,
    UCB1Policy,
)
from .rcp import ConditionRewards, CountingRCP, CvaeRCP
from .gm import Strategy, infer_policy, lambda_bounds, mix, optimized_policy, submax_policy
from .agents import RewardConditionedPolicy, make_policy
from .config import ExperimentConfig, PolicySpec, load_config
from .traces import AggregateSeries, RunTrace

__all__ = [
    'BanditError',
    'CombinatorialAction',
    'Context',
    'Observation',
    'ProbabilityVector',
    'Reward',
    'RewardDomain',
    'normalize',
    'sample',
    'BernoulliBetaEnv',
    'CombinatorialEnv',
    'ContextualNeuralEnv',
    'DelayBuffer',
    'EnvironmentSpec',
    'BasePolicy',
    'BetaTSPolicy',
    'EpsilonGreedyPolicy',
    'NeuralEpsilonGreedyPolicy',
    'NeuralTSPolicy',
    'OraclePolicy',
    'RandomPolicy',
    'UCB1Policy',
    'ConditionRewards',
    'CountingRCP',
    'CvaeRCP',
    'Strategy',
    'infer_policy',
    'lambda_bounds',
    'mix',
    'optimized_policy',
    'submax_policy',
    'RewardConditionedPolicy',
    'make_policy',
    'ExperimentConfig',
    'PolicySpec',
    'load_config',
    'AggregateSeries',
    'RunTrace',
]
