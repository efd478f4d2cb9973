"""
Result Export
결과 내보내기

CSV tables written with 17 significant digits (re-parse to the same floats),
SVG ribbon charts through matplotlib and interactive HTML charts through plotly.
CSV, SVG(matplotlib), HTML(plotly) 형식으로 결과 저장
"""

import logging
import os
from typing import Dict, List, Optional, Sequence

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import plotly.graph_objects as go

from .core import InvalidInput, IoError, ProbabilityVector
from .traces import AggregateSeries, RunTrace, series_table

logger = logging.getLogger(__name__)

# Full double precision in text form / 전체 배정밀도
FLOAT_FORMAT = '%.17g'

SERIES_COLUMNS = ['step', 'mean', 'lo', 'hi']

AXIS_LABELS = {
    'regret': 'Accumulated regret',
    'reward': 'Accumulated reward',
}


def _prepare(path: str) -> str:
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as e:
        raise IoError(f"Cannot create directory {directory}: {e}") from e
    return path


def _write_frame(frame: pd.DataFrame, path: str) -> str:
    _prepare(path)
    try:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    except OSError as e:
        raise IoError(f"Cannot write {path}: {e}") from e
    logger.debug(f"Wrote {path}")
    return path


def write_series_csv(series: Sequence[AggregateSeries], path: str) -> str:
    """
    Long-format CSV with header step,mean,lo,hi,label
    스텝별 평균/하한/상한 CSV 저장
    """
    series = list(series)
    if not series or any(len(s) == 0 for s in series):
        raise InvalidInput("Cannot export an empty series")
    return _write_frame(series_table(series), path)


def read_series_csv(path: str) -> List[AggregateSeries]:
    """Parse a file written by write_series_csv back into series"""
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except OSError as e:
        raise IoError(f"Cannot read {path}: {e}") from e
    if 'label' not in frame.columns:
        frame['label'] = os.path.splitext(os.path.basename(path))[0]
    result = []
    for label, group in frame.groupby('label', sort=False):
        group = group.sort_values('step')
        result.append(AggregateSeries(
            label=str(label),
            mean=group['mean'].to_numpy(),
            lo=group['lo'].to_numpy(),
            hi=group['hi'].to_numpy()
        ))
    return result


def write_trace_csv(trace: RunTrace, path: str) -> str:
    """Per-step columns of one repetition"""
    return _write_frame(trace.to_frame(), path)


def write_policy_csv(policy: ProbabilityVector, path: str, values: Optional[Sequence[float]] = None) -> str:
    """action,probability(,value) table of one policy"""
    frame = pd.DataFrame({'action': np.arange(len(policy)), 'probability': policy.probs})
    if values is not None:
        frame['value'] = np.asarray(values, dtype=np.float64)
    return _write_frame(frame, path)


def write_table_csv(rows: List[Dict], path: str) -> str:
    return _write_frame(pd.DataFrame(rows), path)


def write_series_svg(series: Sequence[AggregateSeries], path: str, title: str = '') -> str:
    """
    Mean lines with quantile ribbons as a standalone SVG
    평균선과 분위수 리본 SVG 차트
    """
    series = list(series)
    if not series:
        raise InvalidInput("Cannot plot an empty series list")
    _prepare(path)

    fig, ax = plt.subplots(figsize=(10, 6))
    try:
        for s in series:
            line, = ax.plot(s.steps, s.mean, linewidth=1.5, label=s.label)
            ax.fill_between(s.steps, s.lo, s.hi, alpha=0.2, color=line.get_color())
        ax.set_xlabel('Step')
        ax.set_ylabel(AXIS_LABELS.get(series[0].mode, 'Accumulated value'))
        ax.set_title(title)
        ax.grid(True, alpha=0.3)
        ax.legend(loc='upper left', fontsize='small')
        fig.tight_layout()
        fig.savefig(path, format='svg')
    except OSError as e:
        raise IoError(f"Cannot write {path}: {e}") from e
    finally:
        plt.close(fig)
    logger.debug(f"Wrote {path}")
    return path


def write_series_html(series: Sequence[AggregateSeries], path: str, title: str = '') -> str:
    """Interactive plotly chart of the same series"""
    series = list(series)
    if not series:
        raise InvalidInput("Cannot plot an empty series list")
    _prepare(path)

    fig = go.Figure()
    for s in series:
        steps = s.steps
        fig.add_trace(go.Scatter(
            x=np.concatenate([steps, steps[::-1]]),
            y=np.concatenate([s.hi, s.lo[::-1]]),
            fill='toself',
            opacity=0.2,
            line=dict(width=0),
            hoverinfo='skip',
            showlegend=False,
            legendgroup=s.label
        ))
        fig.add_trace(go.Scatter(
            x=steps,
            y=s.mean,
            mode='lines',
            name=s.label,
            legendgroup=s.label,
            line=dict(width=2)
        ))

    fig.update_layout(
        title=title,
        xaxis_title='Step',
        yaxis_title=AXIS_LABELS.get(series[0].mode, 'Accumulated value'),
        height=500,
        template='plotly_dark'
    )
    try:
        fig.write_html(path, include_plotlyjs='cdn')
    except OSError as e:
        raise IoError(f"Cannot write {path}: {e}") from e
    logger.debug(f"Wrote {path}")
    return path


def write_bar_svg(values: Dict[str, float], path: str, title: str = '', ylabel: str = '') -> str:
    """Single bar panel (strategy -> value)"""
    _prepare(path)
    fig, ax = plt.subplots(figsize=(8, 4))
    try:
        names = list(values.keys())
        ax.bar(names, [values[n] for n in names], color='steelblue')
        ax.set_title(title)
        ax.set_ylabel(ylabel)
        ax.grid(True, axis='y', alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, format='svg')
    except OSError as e:
        raise IoError(f"Cannot write {path}: {e}") from e
    finally:
        plt.close(fig)
    return path


def write_policy_panel_svg(policies: Dict[str, ProbabilityVector], path: str, title: str = '') -> str:
    """One bar chart per policy, side by side"""
    _prepare(path)
    names = list(policies.keys())
    fig, axes = plt.subplots(1, len(names), figsize=(3 * len(names), 3), sharey=True, squeeze=False)
    try:
        for ax, name in zip(axes[0], names):
            probs = policies[name].probs
            ax.bar(np.arange(len(probs)), probs, color='steelblue')
            ax.set_title(name, fontsize='small')
            ax.set_xlabel('Action')
        axes[0][0].set_ylabel('Probability')
        fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path, format='svg')
    except OSError as e:
        raise IoError(f"Cannot write {path}: {e}") from e
    finally:
        plt.close(fig)
    return path
