"""
Run Traces and Aggregation
실행 기록 및 집계

RunTrace holds the per-step series of one seeded repetition; AggregateSeries
holds the mean and 95% quantile ribbon of the accumulated series across
repetitions.
반복 실행별 시계열과 반복 간 평균/95% 분위수 리본
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from .core import NoData, ShapeError

logger = logging.getLogger(__name__)

# Two-sided 95% envelope / 95% 분위수 구간
LOWER_QUANTILE = 0.025
UPPER_QUANTILE = 0.975

MODES = ('regret', 'reward')


@dataclass
class RunTrace:
    """
    One repetition of one policy on one environment
    한 환경에서 한 정책의 반복 실행 기록

    Args:
        label: Policy label
        rep_index: Repetition index
        seed: Base seed of the experiment
        mode: 'regret' (values are instantaneous regret) or 'reward'
        values: Per-step regret or realized reward
        expected: Per-step expected reward R(a_t | c_t) of the taken action
        rewards: Per-step realized reward
        optimal: Per-step flag for optimal-arm pulls (regret mode only)
        releases: Number of delay-buffer releases
        propensity_exact: Whether logged propensities are exact
    """
    label: str
    rep_index: int
    seed: int
    mode: str
    values: np.ndarray
    expected: np.ndarray
    rewards: np.ndarray
    optimal: np.ndarray
    releases: int = 0
    propensity_exact: bool = True

    @property
    def horizon(self) -> int:
        return int(self.values.shape[0])

    @property
    def accumulated(self) -> np.ndarray:
        return np.cumsum(self.values)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({
            'step': np.arange(1, self.horizon + 1),
            'value': self.values,
            'accumulated': self.accumulated,
            'expected_reward': self.expected,
            'reward': self.rewards,
        })
        if self.mode == 'regret':
            frame['optimal'] = self.optimal.astype(int)
        return frame


@dataclass
class AggregateSeries:
    """
    Mean and quantile envelope of accumulated series
    누적 시계열의 평균과 분위수 구간
    """
    label: str
    mean: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    n_reps: int = 1
    mode: str = 'regret'

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.lo = np.asarray(self.lo, dtype=np.float64)
        self.hi = np.asarray(self.hi, dtype=np.float64)
        if not (self.mean.shape == self.lo.shape == self.hi.shape):
            raise ShapeError(f"Series shapes differ: {self.mean.shape}, {self.lo.shape}, {self.hi.shape}")

    def __len__(self) -> int:
        return int(self.mean.shape[0])

    @property
    def steps(self) -> np.ndarray:
        return np.arange(1, len(self) + 1)

    @property
    def final(self) -> float:
        return float(self.mean[-1])

    def to_frame(self, with_label: bool = False) -> pd.DataFrame:
        frame = pd.DataFrame({'step': self.steps, 'mean': self.mean, 'lo': self.lo, 'hi': self.hi})
        if with_label:
            frame['label'] = self.label
        return frame


def aggregate_traces(traces: Sequence[RunTrace], label: Optional[str] = None) -> AggregateSeries:
    """
    Mean and 2.5% / 97.5% linear-interpolation quantiles per step
    스텝별 평균과 2.5%/97.5% 분위수

    Traces are ordered by repetition index first, so the result does not
    depend on completion order. The envelope is widened where needed so that
    lo <= mean <= hi holds exactly.
    """
    if not traces:
        raise NoData("Nothing to aggregate")
    ordered = sorted(traces, key=lambda t: t.rep_index)
    stacked = np.stack([t.accumulated for t in ordered])
    mean = stacked.mean(axis=0)
    lo, hi = np.quantile(stacked, [LOWER_QUANTILE, UPPER_QUANTILE], axis=0, method='linear')
    return AggregateSeries(
        label=label or ordered[0].label,
        mean=mean,
        lo=np.minimum(lo, mean),
        hi=np.maximum(hi, mean),
        n_reps=len(ordered),
        mode=ordered[0].mode
    )


def final_values(traces: Sequence[RunTrace]) -> np.ndarray:
    """Final accumulated value of every repetition, by repetition index"""
    return np.array([t.accumulated[-1] for t in sorted(traces, key=lambda t: t.rep_index)])


def series_table(series: Sequence[AggregateSeries]) -> pd.DataFrame:
    """Long-format table (step, mean, lo, hi, label) of several series"""
    frames: List[pd.DataFrame] = [s.to_frame(with_label=True) for s in series]
    return pd.concat(frames, ignore_index=True)
