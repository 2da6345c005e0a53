"""Tests for report models and merge outcomes."""

import numpy as np
import pytest
from pydantic import ValidationError

from src.models.merge_outcome import LayerFlag, LayerMeta, MergeMethod, MergeOutcome
from src.models.report import (
    AlignmentReport,
    AlignmentRow,
    BenchmarkReport,
    BenchmarkRow,
    SpectrumReport,
    SpectrumRow,
    TableReport,
)
from src.models.task_matrix import TaskMatrixSet


def test_alignment_row_range_is_checked():
    """Test that SAR values outside [0, 1] are rejected."""
    AlignmentRow(task='a', layer='w', sar=1.0 + 1e-12)
    with pytest.raises(ValidationError):
        AlignmentRow(task='a', layer='w', sar=1.5)


def test_alignment_report_returns_avg_rows():
    """Test the lookup of a task's average row."""
    report = AlignmentReport(
        rows=[
            AlignmentRow(task='a', layer='w', sar=0.4),
            AlignmentRow(task='a', layer='avg', sar=0.4),
        ],
        epsilon=0.05,
    )

    assert report.sar_avg('a') == 0.4
    assert report.csv_header() == ('task', 'layer', 'sar')
    assert report.csv_rows() == [['a', 'w', 0.4], ['a', 'avg', 0.4]]


def test_spectrum_report_rejects_increasing_values():
    """Test that singular values must not increase within a layer."""
    SpectrumReport(rows=[SpectrumRow(layer='w', index=1, sigma=2.0), SpectrumRow(layer='v', index=1, sigma=5.0)])
    with pytest.raises(ValidationError):
        SpectrumReport(rows=[SpectrumRow(layer='w', index=1, sigma=1.0), SpectrumRow(layer='w', index=2, sigma=2.0)])


def test_benchmark_report_writes_method_names():
    """Test that benchmark rows carry the command-line method name."""
    row = BenchmarkRow(method=MergeMethod.ISO_CTS, alpha=1.2, task='mean', acc=0.9, nai=0.8, sar_avg=0.7)

    assert BenchmarkReport(rows=[row]).csv_rows() == [['iso-cts', 1.2, 'mean', 0.9, 0.8, 0.7]]


def test_table_report_uses_its_header():
    """Test that free-form tables follow the given header."""
    report = TableReport(rows=[{'b': 2, 'a': 1}], header=('a', 'b'))

    assert report.csv_header() == ('a', 'b')
    assert report.csv_rows() == [[1, 2]]


def test_merge_outcome_sidecar_and_flags():
    """Test the sidecar summary and flag lookup."""
    outcome = MergeOutcome(
        TaskMatrixSet({'w': np.zeros((2, 2))}),
        {'w': LayerMeta(method=MergeMethod.ISO_C, r=2, k_common=2, flags=[LayerFlag.ZERO_SUM])},
        MergeMethod.ISO_C,
    )

    chosen = outcome.with_alpha(1.3)
    sidecar = chosen.to_sidecar()

    assert outcome.alpha is None
    assert chosen.flagged_layers(LayerFlag.ZERO_SUM) == ['w']
    assert chosen.flagged_layers(LayerFlag.WHITENING_FALLBACK) == []
    assert sidecar['method'] == 'iso-c'
    assert sidecar['alpha'] == 1.3
    assert sidecar['common_fraction'] is None
    assert sidecar['layers']['w']['flags'] == ['zero_sum']
