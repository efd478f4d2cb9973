"""
Strategy Illustration
전략 비교 예시

Ten Bernoulli arms with Beta(1, 9) means, 1000 observations logged by the
uniform-random policy, and a raw-frequency counting RCP fitted on them.
The inference policies of every strategy are compared by their true expected
reward against the arm means.
10개 팔, Beta(1, 9), 균등 랜덤 정책으로 수집한 1000개 관측에서 전략별 추론 정책 비교
"""

import logging
import os
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional

import numpy as np
import pandas as pd

from .core import EMPTY_CONTEXT, Observation, ProbabilityVector, derive_seed, make_rng, normalize
from .envs import BernoulliBetaEnv
from .export import write_bar_svg, write_policy_csv, write_policy_panel_svg, write_table_csv
from .gm import LambdaBounds, is_coefficient, lambda_bounds, mix, optimal_lambda, submax_policy
from .rcp import CountingRCP

logger = logging.getLogger(__name__)

N_ARMS = 10
PRIOR = (1.0, 9.0)
N_OBSERVATIONS = 1000

# Panel order / 패널 순서
STRATEGIES = ('negative', 'positive', 'optimized', 'optimistic', 'submax', 'random')


@dataclass
class IllustrationResult:
    """Policies and their true expected rewards for one seed"""
    seed: int
    arm_means: np.ndarray
    policies: Dict[str, ProbabilityVector]
    expected_rewards: Dict[str, float]
    bounds: LambdaBounds
    coefficient: float
    lam: float

    @property
    def best_value(self) -> float:
        return float(self.arm_means.max())


def log_uniform(env: BernoulliBetaEnv, n: int, rng: np.random.Generator) -> List[Observation]:
    """n observations from the uniform-random logging policy (q = 1/K)"""
    propensity = 1.0 / env.n_arms
    data = []
    for _ in range(n):
        action = int(rng.integers(env.n_arms))
        data.append(Observation(EMPTY_CONTEXT, action, env.pull(action, None, rng), propensity))
    return data


def illustrate(
    seed: int,
    n_arms: int = N_ARMS,
    prior=PRIOR,
    n_observations: int = N_OBSERVATIONS,
    smoothing: float = 0.0
) -> IllustrationResult:
    """
    Fit the counting RCP on uniformly logged data and build every inference policy
    균등 로그 데이터로 카운팅 RCP를 학습하고 전략별 추론 정책 생성

    Args:
        seed: Seed of the environment and of the logged data
        n_arms: Number of arms K
        prior: Beta prior (alpha, beta) of the arm means
        n_observations: Logged observations
        smoothing: Counting pseudo-count; 0 uses raw frequencies
    """
    env = BernoulliBetaEnv(n_arms, prior[0], prior[1], seed)
    data = log_uniform(env, n_observations, make_rng(derive_seed(seed, 1)))

    model = CountingRCP(n_arms, smoothing).update(data)
    p0, p1 = model.policy(0.0), model.policy(1.0)

    bounds = lambda_bounds(p0, p1)
    coefficient = is_coefficient(data, p0, p1)
    lam = optimal_lambda(bounds, coefficient)

    policies = {
        'negative': p0,
        'positive': p1,
        'optimized': mix(p0, p1, lam),
        'optimistic': p1,
        'submax': submax_policy(p0, p1),
        'random': ProbabilityVector.uniform(n_arms),
    }
    expected = {name: policies[name].expectation(env.arm_means) for name in STRATEGIES}
    logger.debug(f"seed {seed}: lambda {lam:.4g}, " + ", ".join(f"{k} {v:.4f}" for k, v in expected.items()))

    return IllustrationResult(
        seed=seed,
        arm_means=np.asarray(env.arm_means),
        policies=policies,
        expected_rewards=expected,
        bounds=bounds,
        coefficient=coefficient,
        lam=lam
    )


def illustration_sweep(seeds: Iterable[int], **kwargs) -> pd.DataFrame:
    """One row per seed: expected reward of every strategy plus the best arm"""
    rows = []
    for seed in seeds:
        result = illustrate(int(seed), **kwargs)
        row = {'seed': result.seed, 'lambda': result.lam, 'best': result.best_value}
        row.update(result.expected_rewards)
        rows.append(row)
    return pd.DataFrame(rows)


def save_illustration(result: IllustrationResult, out_dir: str, sweep: Optional[pd.DataFrame] = None) -> List[str]:
    """
    Per-strategy policy CSVs, an expected-reward summary and SVG panels
    전략별 정책 CSV, 기대 보상 요약, SVG 패널 저장
    """
    written = []
    environment = normalize(result.arm_means)
    written.append(write_policy_csv(environment, os.path.join(out_dir, 'policy_environment.csv'), result.arm_means))
    for name in STRATEGIES:
        path = os.path.join(out_dir, f"policy_{name}.csv")
        written.append(write_policy_csv(result.policies[name], path))

    rows = [{'strategy': name, 'expected_reward': result.expected_rewards[name]} for name in STRATEGIES]
    rows.append({'strategy': 'best_arm', 'expected_reward': result.best_value})
    written.append(write_table_csv(rows, os.path.join(out_dir, 'expected_rewards.csv')))

    panels = {'environment': environment}
    panels.update({name: result.policies[name] for name in STRATEGIES})
    written.append(write_policy_panel_svg(
        panels, os.path.join(out_dir, 'policies.svg'), title=f"Inference policies (seed {result.seed})"
    ))
    written.append(write_bar_svg(
        result.expected_rewards,
        os.path.join(out_dir, 'expected_rewards.svg'),
        title='True expected reward',
        ylabel='Expected reward'
    ))

    if sweep is not None and len(sweep) > 1:
        sweep_path = os.path.join(out_dir, 'expected_rewards_by_seed.csv')
        written.append(write_table_csv(sweep.to_dict('records'), sweep_path))

    logger.info(f"Illustration written to {out_dir} ({len(written)} files)")
    return written
