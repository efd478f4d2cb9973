"""
Simulation Engine for Reward-Conditioned Bandits
보상 조건부 밴딧 시뮬레이션 엔진

Runs seeded repetitions of policies against simulated environments, applies
the delay buffer, aggregates accumulated regret (or reward) across
repetitions and saves CSV, SVG, HTML, JSON and markdown results.
시드 고정 반복 실행, 지연 버퍼, 반복 간 집계 및 결과 저장
"""

import os
import json
import logging
from contextlib import contextmanager
from datetime import datetime
from multiprocessing import get_context
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
from tqdm import tqdm

from bandits.agents import make_policy
from bandits.baselines import BasePolicy
from bandits.config import ExperimentConfig, environment_cells
from bandits.core import (
    EMPTY_CONTEXT,
    InvalidPropensity,
    Observation,
    derive_seed,
    rng_seed,
    split_rng,
)
from bandits.envs import DelayBuffer, Environment, EnvironmentSpec, expected_random_reward, make_environment
from bandits.export import write_series_csv, write_series_html, write_series_svg, write_trace_csv
from bandits.traces import AggregateSeries, RunTrace, aggregate_traces, final_values

logger = logging.getLogger(__name__)

# Streams per repetition: environment, world (contexts + pulls), acting, policy init
N_STREAMS = 4

# Monte Carlo contexts for the uniform-policy value; fewer on joint spaces
RANDOM_VALUE_CONTEXTS = 200
LARGE_ACTION_SPACE = 1024


def repetition_streams(seed: int, rep_index: int) -> List[np.random.Generator]:
    """Independent generators of one repetition, derived from (seed, rep_index)"""
    return split_rng(derive_seed(seed, rep_index), N_STREAMS)


def build_environment(spec: EnvironmentSpec, seed: int, rep_index: int) -> Environment:
    """The environment repetition rep_index runs against"""
    env_rng = repetition_streams(seed, rep_index)[0]
    return make_environment(spec, rng_seed(env_rng))


def run_repetition(
    config: ExperimentConfig,
    rep_index: int,
    buffer: Optional[DelayBuffer] = None,
    policy: Optional[BasePolicy] = None
) -> RunTrace:
    """
    Run one seeded repetition of a policy on an environment
    정책 하나를 환경에서 한 번 반복 실행

    Args:
        config: Experiment cell
        rep_index: Repetition index (seeds derive from config.seed and this)
        buffer: Delay buffer to use (a fresh one sized N_b by default)
        policy: Policy instance to drive (built from config.policy by default)

    Returns:
        RunTrace with per-step regret, or per-step reward for the
        combinatorial environment where the optimum is not available
    """
    env_rng, world_rng, act_rng, policy_rng = repetition_streams(config.seed, rep_index)
    env = make_environment(config.environment, rng_seed(env_rng))
    policy_seed = rng_seed(policy_rng)
    policy = policy if policy is not None else make_policy(config.policy, env, policy_seed)
    buffer = buffer if buffer is not None else DelayBuffer(config.environment.delay)

    mode = 'reward' if env.family == 'combinatorial' else 'regret'
    horizon = config.horizon
    values = np.zeros(horizon)
    expected = np.zeros(horizon)
    rewards = np.zeros(horizon)
    optimal = np.zeros(horizon, dtype=bool)
    releases = 0

    for t in range(horizon):
        context = env.sample_context(world_rng) if env.is_contextual else EMPTY_CONTEXT
        env_context = context if env.is_contextual else None
        decision = policy.act(context, act_rng)

        if mode == 'regret':
            action_values = env.action_values(env_context)
            expected[t] = action_values[decision.action]
            values[t] = action_values.max() - expected[t]
            optimal[t] = expected[t] == action_values.max()
        else:
            expected[t] = env.expected_reward(decision.action, env_context)

        reward = env.pull(decision.action, env_context, world_rng)
        rewards[t] = reward.value
        if mode == 'reward':
            values[t] = reward.value

        try:
            obs = Observation(context, decision.action, reward, decision.propensity)
        except InvalidPropensity as e:
            raise InvalidPropensity(f"{policy.name} at step {t}: {e}") from e
        buffer.push(obs)
        batch = buffer.poll()
        if batch:
            policy.update(batch)
            releases += 1
            logger.debug(f"{config.label} rep {rep_index}: release {releases} at step {t + 1}")

    trace = RunTrace(
        label=config.policy.label,
        rep_index=rep_index,
        seed=config.seed,
        mode=mode,
        values=values,
        expected=expected,
        rewards=rewards,
        optimal=optimal,
        releases=releases,
        propensity_exact=policy.propensity_exact
    )
    logger.info(f"{config.label} rep {rep_index}: accumulated {mode} {trace.accumulated[-1]:.2f}")
    return trace


# ==================== Sweeps / 스윕 ====================

@contextmanager
def single_threaded():
    """Pin torch to one thread for the duration (bit-identical network math)"""
    previous = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        yield
    finally:
        torch.set_num_threads(previous)


def _init_worker():
    torch.set_num_threads(1)


def _run_task(task: Tuple[ExperimentConfig, int]) -> Tuple[str, RunTrace]:
    config, rep_index = task
    return config.label, run_repetition(config, rep_index)


def run_traces(
    configs: Sequence[ExperimentConfig],
    parallel: int = 1,
    progress: bool = False
) -> Dict[str, List[RunTrace]]:
    """
    Every repetition of every config, grouped by config label
    모든 설정의 모든 반복 실행

    Repetitions run in a process pool when parallel > 1. Grouped traces are
    sorted by repetition index, so results do not depend on the pool size.
    """
    tasks = [(config, rep) for config in configs for rep in range(config.repetitions)]
    traces: Dict[str, List[RunTrace]] = {config.label: [] for config in configs}
    bar = tqdm(total=len(tasks), desc='Repetitions', disable=not progress)

    if parallel > 1 and len(tasks) > 1:
        with get_context('spawn').Pool(processes=parallel, initializer=_init_worker) as pool:
            for label, trace in pool.imap_unordered(_run_task, tasks):
                traces[label].append(trace)
                bar.update(1)
    else:
        with single_threaded():
            for task in tasks:
                label, trace = _run_task(task)
                traces[label].append(trace)
                bar.update(1)
    bar.close()

    for group in traces.values():
        group.sort(key=lambda t: t.rep_index)
    return traces


def run_sweep(
    configs: Sequence[ExperimentConfig],
    parallel: int = 1,
    progress: bool = False
) -> Dict[str, AggregateSeries]:
    """
    Aggregate series (mean, 2.5% and 97.5% quantiles) per config label
    설정별 집계 시계열
    """
    traces = run_traces(configs, parallel, progress)
    return {label: aggregate_traces(group) for label, group in traces.items()}


# ==================== Simulator / 시뮬레이터 ====================

class Simulator:
    """
    Experiment runner: repetitions, aggregation, metrics and result files
    실험 실행기: 반복, 집계, 지표, 결과 파일
    """

    def __init__(
        self,
        configs: Sequence[ExperimentConfig],
        parallel: int = 1,
        progress: bool = False,
        save_traces: bool = False
    ):
        """
        Initialize simulator
        시뮬레이터 초기화

        Args:
            configs: Expanded experiment cells (one per environment x policy)
            parallel: Worker processes for repetitions
            progress: Show a tqdm progress bar
            save_traces: Also write one CSV per repetition
        """
        self.configs = list(configs)
        self.parallel = max(1, int(parallel))
        self.progress = progress
        self.save_traces = save_traces

        self.traces: Dict[str, List[RunTrace]] = {}
        self.series: Dict[str, AggregateSeries] = {}
        self.metrics: Dict[str, Dict] = {}

        logger.info(f"Simulator initialized: {len(self.configs)} config(s), parallel={self.parallel}")

    @property
    def cells(self) -> List[EnvironmentSpec]:
        return environment_cells(self.configs)

    def configs_for(self, cell: EnvironmentSpec) -> List[ExperimentConfig]:
        return [config for config in self.configs if config.environment == cell]

    def run(self) -> Dict[str, Dict]:
        """
        Run every repetition and compute metrics
        모든 반복 실행 후 지표 계산

        Returns:
            Metrics per config label
        """
        try:
            logger.info("=" * 80)
            logger.info(f"Starting simulation: {len(self.cells)} environment cell(s)")
            logger.info("=" * 80)

            self.traces = run_traces(self.configs, self.parallel, self.progress)
            self.series = {label: aggregate_traces(group) for label, group in self.traces.items()}
            self.metrics = self.calculate_metrics()

            logger.info("=" * 80)
            logger.info("Simulation completed!")
            logger.info("=" * 80)

            return self.metrics

        except Exception as e:
            logger.error(f"Simulation failed: {e}")
            raise

    def calculate_metrics(self) -> Dict[str, Dict]:
        """
        Summary metrics per config
        설정별 요약 지표

        Returns:
            Dictionary keyed by config label
        """
        try:
            if not self.traces:
                logger.warning("No repetitions executed yet")
                return {}

            random_values: Dict[EnvironmentSpec, float] = {}
            metrics = {}
            for config in self.configs:
                group = self.traces[config.label]
                series = self.series.get(config.label) or aggregate_traces(group)
                finals = final_values(group)
                std_error = float(finals.std(ddof=1) / np.sqrt(len(finals))) if len(finals) > 1 else 0.0

                cell = config.environment
                if cell not in random_values:
                    random_values[cell] = self._random_value(config)

                entry = {
                    'environment': cell.label,
                    'policy': config.policy.label,
                    'mode': series.mode,
                    'horizon': config.horizon,
                    'repetitions': len(group),
                    'seed': config.seed,
                    'final_mean': series.final,
                    'final_lo': float(series.lo[-1]),
                    'final_hi': float(series.hi[-1]),
                    'final_std_error': std_error,
                    'mean_expected_reward': float(np.mean([t.expected.mean() for t in group])),
                    'random_expected_reward': random_values[cell],
                    'mean_releases': float(np.mean([t.releases for t in group])),
                    'propensity_exact': all(t.propensity_exact for t in group),
                }
                if series.mode == 'regret':
                    entry['optimal_fraction'] = float(np.mean([t.optimal.mean() for t in group]))
                metrics[config.label] = entry

            return metrics

        except Exception as e:
            logger.error(f"Failed to calculate metrics: {e}")
            raise

    def _random_value(self, config: ExperimentConfig) -> float:
        # Uniform-policy value averaged over the repetition environments
        values = []
        for rep in range(config.repetitions):
            env = build_environment(config.environment, config.seed, rep)
            rng = repetition_streams(config.seed, rep)[1]
            n_contexts = RANDOM_VALUE_CONTEXTS if env.n_actions <= LARGE_ACTION_SPACE else 20
            values.append(expected_random_reward(env, rng, n_contexts))
        return float(np.mean(values))

    def save_results(self, output_dir: str = 'simulation_results') -> List[str]:
        """
        Save simulation results to files
        시뮬레이션 결과를 파일로 저장

        One aggregate CSV, SVG and HTML per environment cell, metrics JSON,
        a markdown report, and per-repetition trace CSVs when requested.

        Args:
            output_dir: Directory to save results
        """
        try:
            os.makedirs(output_dir, exist_ok=True)
            written = []

            for cell in self.cells:
                series = [self.series[config.label] for config in self.configs_for(cell)]
                base = os.path.join(output_dir, cell.label)
                written.append(write_series_csv(series, f"{base}.csv"))
                written.append(write_series_svg(series, f"{base}.svg", title=cell.label))
                written.append(write_series_html(series, f"{base}.html", title=cell.label))
                logger.info(f"Aggregates for {cell.label} saved to {base}.csv")

            if self.save_traces:
                for config in self.configs:
                    trace_dir = os.path.join(output_dir, 'traces', config.label)
                    for trace in self.traces[config.label]:
                        written.append(write_trace_csv(trace, os.path.join(trace_dir, f"rep_{trace.rep_index:03d}.csv")))
                logger.info(f"Traces saved under {os.path.join(output_dir, 'traces')}")

            metrics_file = os.path.join(output_dir, 'metrics.json')
            with open(metrics_file, 'w') as f:
                json.dump(self.metrics, f, indent=4, default=str)
            written.append(metrics_file)
            logger.info(f"Metrics saved to {metrics_file}")

            written.append(self.generate_report(output_dir, self.metrics))
            return written

        except Exception as e:
            logger.error(f"Failed to save results: {e}")
            raise

    def generate_report(self, output_dir: str, metrics: Dict[str, Dict]) -> str:
        """
        Generate markdown simulation report
        마크다운 시뮬레이션 리포트 생성

        Args:
            output_dir: Output directory
            metrics: Metrics per config label
        """
        try:
            report_file = os.path.join(output_dir, 'report.md')

            with open(report_file, 'w', encoding='utf-8') as f:
                f.write("# Simulation Report\n\n")
                f.write(f"**Generated:** {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n\n")

                for cell in self.cells:
                    configs = self.configs_for(cell)
                    first = metrics[configs[0].label]
                    f.write(f"## {cell.label}\n\n")
                    f.write(f"- **Family:** {cell.family}\n")
                    f.write(f"- **Delay (N_b):** {cell.delay}\n")
                    f.write(f"- **Horizon:** {first['horizon']}\n")
                    f.write(f"- **Repetitions:** {first['repetitions']}\n")
                    f.write(f"- **Uniform-random expected reward:** {first['random_expected_reward']:.4f}\n\n")

                    label = 'Regret' if first['mode'] == 'regret' else 'Reward'
                    f.write(f"| Policy | Final {label} | 95% Band | Std. Error | Mean Expected Reward | Optimal % |\n")
                    f.write("|--------|-------------|----------|------------|----------------------|-----------|\n")
                    for config in configs:
                        m = metrics[config.label]
                        optimal = f"{100 * m['optimal_fraction']:.1f}%" if 'optimal_fraction' in m else 'n/a'
                        exact = '' if m['propensity_exact'] else ' *'
                        f.write(f"| {m['policy']}{exact} | {m['final_mean']:.2f} | "
                                f"[{m['final_lo']:.2f}, {m['final_hi']:.2f}] | "
                                f"{m['final_std_error']:.2f} | "
                                f"{m['mean_expected_reward']:.4f} | {optimal} |\n")
                    f.write("\n")

                f.write("\\* logged propensities are placeholders for this policy\n")

            logger.info(f"Report saved to {report_file}")
            return report_file

        except Exception as e:
            logger.error(f"Failed to generate report: {e}")
            raise
