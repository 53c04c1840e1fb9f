import io
from typing import Optional

import numpy as np
import pandas as pd
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter


class ReportGenerator:
    """
    Benchmark tables and multi-sheet Excel reports.
    Information gain and accuracy are laid out policy x budget as mean(σ),
    the shape of the published comparison tables.
    """

    METRICS = {
        'info_gain': 'Information Gain (bits)',
        'accuracy': 'Accuracy Score',
    }

    def __init__(self, title: str = 'ROVER SENSING BENCHMARK'):
        self.title = title

    @staticmethod
    def summarize(results: pd.DataFrame) -> pd.DataFrame:
        """Mean and sample σ per (policy, budget), policies in first-seen order."""
        columns = ['policy', 'budget', 'trials', 'info_gain_mean', 'info_gain_std',
                   'accuracy_mean', 'accuracy_std']
        if results.empty:
            return pd.DataFrame(columns=columns)
        grouped = results.groupby(['policy', 'budget'], sort=False)
        summary = grouped.agg(
            trials=('trial', 'count'),
            info_gain_mean=('info_gain', 'mean'),
            info_gain_std=('info_gain', 'std'),
            accuracy_mean=('accuracy', 'mean'),
            accuracy_std=('accuracy', 'std'),
        ).reset_index()
        return summary[columns]

    @staticmethod
    def mean_sigma_table(summary: pd.DataFrame, metric: str = 'info_gain', digits: int = 2) -> pd.DataFrame:
        """Policy rows x budget columns of 'mean(σ)' strings, e.g. '103.67(18.68)'."""
        def cell(row):
            std = row[f'{metric}_std']
            std_txt = '-' if pd.isna(std) else f"{std:.{digits}f}"
            return f"{row[f'{metric}_mean']:.{digits}f}({std_txt})"

        if summary.empty:
            return pd.DataFrame()
        frame = summary.assign(cell=summary.apply(cell, axis=1))
        table = frame.pivot(index='policy', columns='budget', values='cell')
        table = table.reindex(list(dict.fromkeys(summary['policy'])))
        table.columns = [f"B={b:g}" for b in table.columns]
        table.index.name = 'Policy'
        return table

    @staticmethod
    def relative_increase(summary: pd.DataFrame, baseline: str = 'random',
                          metric: str = 'accuracy') -> pd.DataFrame:
        """Percent change of each policy's mean over the baseline at the same budget."""
        if summary.empty or baseline not in set(summary['policy']):
            return pd.DataFrame(columns=['policy', 'budget', f'{metric}_increase_pct'])
        base = summary[summary['policy'] == baseline].set_index('budget')[f'{metric}_mean']
        out = summary[['policy', 'budget']].copy()
        ref = summary['budget'].map(base)
        out[f'{metric}_increase_pct'] = 100.0 * (summary[f'{metric}_mean'] - ref) / ref
        return out

    @staticmethod
    def gain_curves(traces: pd.DataFrame) -> pd.DataFrame:
        """Mean cumulative information gain against budget spent, per policy and budget."""
        if traces.empty:
            return pd.DataFrame(columns=['policy', 'budget', 'spent', 'info_gain', 'accuracy'])
        frame = traces.assign(spent=traces['budget'] - traces['remaining'])
        curves = (frame.groupby(['policy', 'budget', 'spent'], sort=False)[['info_gain', 'accuracy']]
                  .mean().reset_index())
        return curves.sort_values(['policy', 'budget', 'spent'], kind='stable').reset_index(drop=True)

    @staticmethod
    def paired_differences(results: pd.DataFrame, a: str, b: str, metric: str = 'info_gain') -> pd.DataFrame:
        """Per-trial metric difference a - b, matched on (budget, trial)."""
        left = results[results['policy'] == a].set_index(['budget', 'trial'])[metric]
        right = results[results['policy'] == b].set_index(['budget', 'trial'])[metric]
        diff = (left - right).dropna()
        return diff.rename(f'{metric}_diff').reset_index()

    @staticmethod
    def bootstrap_ci(values: np.ndarray, n_boot: int = 2000, level: float = 0.95,
                     seed: int = 0) -> tuple:
        """Percentile bootstrap interval of the mean."""
        values = np.asarray(values, dtype=float)
        rng = np.random.default_rng(seed)
        means = rng.choice(values, size=(n_boot, values.size), replace=True).mean(axis=1)
        alpha = (1.0 - level) / 2.0
        return float(np.quantile(means, alpha)), float(np.quantile(means, 1.0 - alpha))

    @classmethod
    def paired_comparison(cls, results: pd.DataFrame, baseline: str = 'random') -> pd.DataFrame:
        """Mean paired difference against `baseline` with its bootstrap CI, per policy, budget and metric."""
        columns = ['policy', 'budget', 'metric', 'pairs', 'mean_diff', 'ci_low', 'ci_high']
        if results.empty or baseline not in set(results['policy']):
            return pd.DataFrame(columns=columns)
        rows = []
        for policy in dict.fromkeys(results['policy']):
            if policy == baseline:
                continue
            for metric in cls.METRICS:
                diff = cls.paired_differences(results, policy, baseline, metric)
                for budget, group in diff.groupby('budget', sort=False):
                    values = group[f'{metric}_diff'].to_numpy()
                    lo, hi = cls.bootstrap_ci(values)
                    rows.append({'policy': policy, 'budget': budget, 'metric': metric, 'pairs': values.size,
                                 'mean_diff': float(values.mean()), 'ci_low': lo, 'ci_high': hi})
        return pd.DataFrame(rows, columns=columns)

    # ------------------------------------------
    # Excel
    # ------------------------------------------
    def generate_excel(self, results: pd.DataFrame, traces: Optional[pd.DataFrame] = None) -> bytes:
        output = io.BytesIO()
        summary = self.summarize(results)

        with pd.ExcelWriter(output, engine='openpyxl') as writer:
            # 1. Ringkasan
            self._write_sheet(writer, summary, 'Summary', f'{self.title} - SUMMARY')

            # 2. Tables (mean(σ))
            for metric, label in self.METRICS.items():
                table = self.mean_sigma_table(summary, metric).reset_index()
                self._write_sheet(writer, table, label[:31], label.upper())

            # 3. Relative accuracy against random
            increase = self.relative_increase(summary)
            if not increase.empty:
                self._write_sheet(writer, increase, 'Accuracy vs Random', 'ACCURACY INCREASE OVER RANDOM (%)')
                paired = self.paired_comparison(results)
                if not paired.empty:
                    self._write_sheet(writer, paired, 'Paired vs Random',
                                      'PAIRED DIFFERENCE VS RANDOM (95% BOOTSTRAP CI)')

            # 4. Raw data
            self._write_sheet(writer, results, 'Trials', 'PER-TRIAL RESULTS')
            if traces is not None and not traces.empty:
                self._write_sheet(writer, traces, 'Traces', 'PER-STEP TRACES')

        return output.getvalue()

    def _write_sheet(self, writer, df: pd.DataFrame, sheet: str, heading: str):
        df.to_excel(writer, sheet_name=sheet, index=False, startrow=1)
        worksheet = writer.sheets[sheet]

        header_fill = PatternFill(start_color="4472C4", end_color="4472C4", fill_type="solid")
        header_font = Font(bold=True, color="FFFFFF", size=12)
        border = Border(
            left=Side(style='thin', color='000000'),
            right=Side(style='thin', color='000000'),
            top=Side(style='thin', color='000000'),
            bottom=Side(style='thin', color='000000')
        )

        worksheet['A1'] = heading
        worksheet['A1'].font = Font(bold=True, size=14, color="1F4E78")
        worksheet['A1'].alignment = Alignment(horizontal='left', vertical='center')
        worksheet.row_dimensions[1].height = 25

        for col_idx, col_name in enumerate(df.columns, start=1):
            cell = worksheet.cell(row=2, column=col_idx)
            cell.fill = header_fill
            cell.font = header_font
            cell.alignment = Alignment(horizontal='center', vertical='center', wrap_text=True)
            cell.border = border

            data_max_len = df[col_name].astype(str).map(len).max() if not df.empty else 0
            width = max(int(data_max_len), len(str(col_name)))
            worksheet.column_dimensions[get_column_letter(col_idx)].width = min(width + 3, 60)

        # traces can be long; border only the small sheets
        if len(df) <= 500:
            for row in worksheet.iter_rows(min_row=3, max_row=len(df) + 2, max_col=len(df.columns)):
                for cell in row:
                    cell.border = border

        worksheet.freeze_panes = 'A3'
