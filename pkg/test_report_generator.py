import io

import numpy as np
import pandas as pd
import pytest
from openpyxl import load_workbook

from modules.report_generator import ReportGenerator


@pytest.fixture
def results():
    rows = []
    values = {
        ('mcts', 50): [10.0, 12.0, 14.0],
        ('mcts', 100): [20.0, 22.0, 24.0],
        ('random', 50): [5.0, 6.0, 7.0],
        ('random', 100): [8.0, 10.0, 12.0],
    }
    for (policy, budget), gains in values.items():
        for trial, gain in enumerate(gains):
            rows.append({'policy': policy, 'budget': budget, 'trial': trial,
                         'info_gain': gain, 'accuracy': gain / 2 + 30})
    return pd.DataFrame(rows)


def test_summarize(results):
    summary = ReportGenerator.summarize(results)
    assert list(summary['policy']) == ['mcts', 'mcts', 'random', 'random']
    row = summary[(summary['policy'] == 'mcts') & (summary['budget'] == 50)].iloc[0]
    assert row['trials'] == 3
    assert row['info_gain_mean'] == pytest.approx(12.0)
    assert row['info_gain_std'] == pytest.approx(2.0)
    assert row['accuracy_mean'] == pytest.approx(36.0)


def test_summarize_empty():
    assert ReportGenerator.summarize(pd.DataFrame()).empty


def test_mean_sigma_table(results):
    table = ReportGenerator.mean_sigma_table(ReportGenerator.summarize(results))
    assert list(table.columns) == ['B=50', 'B=100']
    assert list(table.index) == ['mcts', 'random']
    assert table.loc['mcts', 'B=50'] == '12.00(2.00)'
    assert table.loc['random', 'B=100'] == '10.00(2.00)'


def test_single_trial_has_no_sigma(results):
    one = results[results['trial'] == 0]
    table = ReportGenerator.mean_sigma_table(ReportGenerator.summarize(one), digits=1)
    assert table.loc['mcts', 'B=50'] == '10.0(-)'


def test_relative_increase(results):
    increase = ReportGenerator.relative_increase(ReportGenerator.summarize(results))
    row = increase[(increase['policy'] == 'mcts') & (increase['budget'] == 50)].iloc[0]
    # accuracy 36 vs 33
    assert row['accuracy_increase_pct'] == pytest.approx(100 * 3 / 33)
    base = increase[increase['policy'] == 'random']
    np.testing.assert_allclose(base['accuracy_increase_pct'], 0.0)
    assert ReportGenerator.relative_increase(ReportGenerator.summarize(results), baseline='fixed').empty


def test_gain_curves():
    traces = pd.DataFrame({
        'policy': ['mcts'] * 4,
        'budget': [10] * 4,
        'trial': [0, 0, 1, 1],
        'remaining': [10, 9, 10, 9],
        'info_gain': [0.0, 2.0, 0.0, 4.0],
        'accuracy': [1.0, 2.0, 1.0, 3.0],
    })
    curves = ReportGenerator.gain_curves(traces)
    assert list(curves['spent']) == [0, 1]
    assert list(curves['info_gain']) == [0.0, 3.0]


def test_paired_differences(results):
    diff = ReportGenerator.paired_differences(results, 'mcts', 'random')
    assert len(diff) == 6
    first = diff[(diff['budget'] == 50) & (diff['trial'] == 0)].iloc[0]
    assert first['info_gain_diff'] == pytest.approx(5.0)


def test_bootstrap_ci_brackets_mean():
    values = np.random.default_rng(0).normal(5.0, 1.0, size=200)
    lo, hi = ReportGenerator.bootstrap_ci(values)
    assert lo < values.mean() < hi
    assert ReportGenerator.bootstrap_ci(values) == (lo, hi)


def test_paired_comparison(results):
    paired = ReportGenerator.paired_comparison(results)
    assert set(paired['policy']) == {'mcts'}
    assert len(paired) == 4
    gain = paired[(paired['metric'] == 'info_gain') & (paired['budget'] == 50)].iloc[0]
    assert gain['pairs'] == 3
    assert gain['mean_diff'] == pytest.approx(6.0)
    assert 5.0 <= gain['ci_low'] <= 6.0 <= gain['ci_high'] <= 7.0
    # constant differences give a degenerate interval
    flat = paired[(paired['metric'] == 'info_gain') & (paired['budget'] == 100)].iloc[0]
    assert flat['ci_low'] == pytest.approx(12.0)
    assert flat['ci_high'] == pytest.approx(12.0)
    acc = paired[(paired['metric'] == 'accuracy') & (paired['budget'] == 50)].iloc[0]
    assert acc['mean_diff'] == pytest.approx(3.0)
    assert ReportGenerator.paired_comparison(results, baseline='fixed').empty


def test_generate_excel(results):
    traces = pd.DataFrame({'policy': ['mcts'], 'budget': [50], 'trial': [0], 'step': [0],
                           'remaining': [50], 'info_gain': [0.0], 'accuracy': [33.3]})
    data = ReportGenerator().generate_excel(results, traces)
    book = load_workbook(io.BytesIO(data))
    assert book.sheetnames == ['Summary', 'Information Gain (bits)', 'Accuracy Score',
                               'Accuracy vs Random', 'Paired vs Random', 'Trials', 'Traces']
    sheet = book['Information Gain (bits)']
    assert sheet['A1'].value == 'INFORMATION GAIN (BITS)'
    assert sheet['A2'].value == 'Policy'
    assert sheet['B3'].value == '12.00(2.00)'
    assert sheet.freeze_panes == 'A3'
