import xml.etree.ElementTree as ET

import numpy as np
import pytest

from bandits.core import InvalidInput, IoError, NoData, ProbabilityVector, ShapeError
from bandits.export import (
    read_series_csv,
    write_policy_csv,
    write_series_csv,
    write_series_html,
    write_series_svg,
    write_trace_csv,
)
from bandits.traces import AggregateSeries, RunTrace, aggregate_traces, final_values


def _trace(rep_index, values, label='demo'):
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    return RunTrace(label, rep_index, 0, 'regret', values, np.zeros(n), np.zeros(n), np.zeros(n, dtype=bool))


class TestAggregate:
    def test_single_repetition_collapses(self):
        series = aggregate_traces([_trace(0, [0.1, 0.2, 0.3])])
        assert np.array_equal(series.mean, series.lo)
        assert np.array_equal(series.mean, series.hi)
        assert series.final == pytest.approx(0.6)

    def test_envelope_contains_mean(self):
        rng = np.random.default_rng(0)
        traces = [_trace(i, rng.random(50)) for i in range(30)]
        series = aggregate_traces(traces)
        assert np.all(series.lo <= series.mean) and np.all(series.mean <= series.hi)
        assert series.n_reps == 30

    def test_order_independent(self):
        traces = [_trace(i, [float(i), 1.0]) for i in range(5)]
        a = aggregate_traces(traces)
        b = aggregate_traces(list(reversed(traces)))
        assert np.array_equal(a.mean, b.mean) and np.array_equal(a.lo, b.lo)
        assert final_values(reversed(traces)).tolist() == [1.0, 2.0, 3.0, 4.0, 5.0]

    def test_empty(self):
        with pytest.raises(NoData):
            aggregate_traces([])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            AggregateSeries('x', [1.0, 2.0], [1.0], [1.0, 2.0])


class TestCsv:
    series = AggregateSeries('demo', [0.1, 1 / 3, 2.0 / 7.0], [0.0, 0.2, 0.25], [0.2, 0.5, np.pi])

    def test_layout(self, tmp_path):
        path = write_series_csv([self.series], str(tmp_path / 'out.csv'))
        lines = open(path).read().strip().splitlines()
        assert len(lines) == 4
        assert lines[0] == 'step,mean,lo,hi,label'
        assert lines[1].startswith('1,')

    def test_round_trip_is_exact(self, tmp_path):
        other = AggregateSeries('other', [1e-300, 5.0, 7.0], [0.0, 4.0, 6.5], [1.0, 6.0, 8.0])
        path = write_series_csv([self.series, other], str(tmp_path / 'out.csv'))
        parsed = read_series_csv(path)
        assert [s.label for s in parsed] == ['demo', 'other']
        for original, restored in zip([self.series, other], parsed):
            assert np.array_equal(original.mean, restored.mean)
            assert np.array_equal(original.lo, restored.lo)
            assert np.array_equal(original.hi, restored.hi)

    def test_empty_series(self, tmp_path):
        with pytest.raises(InvalidInput):
            write_series_csv([], str(tmp_path / 'out.csv'))
        with pytest.raises(InvalidInput):
            write_series_csv([AggregateSeries('x', [], [], [])], str(tmp_path / 'out.csv'))

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / 'file.txt'
        blocker.write_text('x')
        with pytest.raises(IoError):
            write_series_csv([self.series], str(blocker / 'out.csv'))

    def test_trace_and_policy_tables(self, tmp_path):
        path = write_trace_csv(_trace(0, [0.5, 0.0]), str(tmp_path / 'trace.csv'))
        assert open(path).readline().strip() == 'step,value,accumulated,expected_reward,reward,optimal'
        path = write_policy_csv(ProbabilityVector([0.25, 0.75]), str(tmp_path / 'policy.csv'), values=[0.1, 0.2])
        assert open(path).readline().strip() == 'action,probability,value'


class TestCharts:
    series = AggregateSeries('demo', [0.0, 1.0, 1.5], [0.0, 0.5, 1.0], [0.0, 1.5, 2.0])

    def test_svg_is_wellformed(self, tmp_path):
        path = write_series_svg([self.series], str(tmp_path / 'chart.svg'), title='demo')
        root = ET.parse(path).getroot()
        assert root.tag.endswith('svg')

    def test_html(self, tmp_path):
        path = write_series_html([self.series], str(tmp_path / 'chart.html'))
        assert 'plotly' in open(path).read()

    def test_empty_chart(self, tmp_path):
        with pytest.raises(InvalidInput):
            write_series_svg([], str(tmp_path / 'chart.svg'))
