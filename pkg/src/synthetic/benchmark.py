"""Desk-scale benchmark of the merging methods on a synthetic suite."""

import logging
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel

from src.errors import DegenerateDenominator, NoTwoDLayers
from src.merging.alpha_sweep import DEFAULT_ALPHA_GRID, sweep_alpha
from src.merging.merge_ops import build_merger
from src.merging.methods.iso_cts import DEFAULT_COMMON_FRACTION
from src.metrics.alignment import sar_avg
from src.metrics.statistics import nai
from src.models.merge_outcome import MergeMethod, MergeOutcome
from src.models.report import BenchmarkReport, BenchmarkRow
from src.models.task_matrix import TaskMatrixSet
from src.models.tensor_bundle import TensorBundle, apply_delta
from src.spectral.core import DEFAULT_EPSILON
from src.synthetic.network import evaluate_accuracy
from src.synthetic.suite import SyntheticSuite

logger = logging.getLogger(__name__)


class MethodSummary(BaseModel):
    """Means over tasks of one method's benchmark rows."""

    method: MergeMethod
    alpha: float
    mean_acc: float
    mean_nai: float
    mean_normalized_acc: float


class BenchmarkResult:
    """Benchmark rows plus per-method summaries."""

    def __init__(self, report: BenchmarkReport, summaries: dict[MergeMethod, MethodSummary]):
        """Initialize the result.

        Args:
            report: Per-task rows, each method block closed by a ``task='mean'`` row
            summaries: Per-method means keyed by method
        """
        self.report = report
        self.summaries = summaries

    def __repr__(self) -> str:
        return f'<BenchmarkResult methods={[method.value for method in self.summaries]}>'


class ReferenceAccuracies:
    """Test accuracies of θ_0 and of each θ_t on its own task."""

    def __init__(self, suite: SyntheticSuite):
        """Evaluate the reference models of ``suite``."""
        self.zero = [evaluate_accuracy(suite.base, data.test) for data in suite.datasets]
        pairs = zip(suite.models, suite.datasets, strict=True)
        self.task = [evaluate_accuracy(model, data.test) for model, data in pairs]


def split_accuracies(model: TensorBundle, suite: SyntheticSuite, split: str = 'test') -> list[float]:
    """Accuracy of ``model`` on the given split of every task."""
    return [evaluate_accuracy(model, data.split(split)) for data in suite.datasets]


def validation_evaluator(suite: SyntheticSuite):
    """Evaluator for ``sweep_alpha`` returning per-task validation accuracies."""
    return lambda model: split_accuracies(model, suite, 'val')


def safe_nai(acc_merged: float, acc_task: float, acc_zero: float, task: str) -> float:
    """NAI, or NaN with a warning when θ_t does not move away from θ_0's accuracy."""
    try:
        return nai(acc_merged, acc_task, acc_zero)
    except DegenerateDenominator:
        logger.warning('NAI undefined for task %r: task and zero-shot accuracies are both %.4f', task, acc_zero)
        return float('nan')


def nan_mean(values: Sequence[float]) -> float:
    """Mean of the finite values, NaN when there is none."""
    finite = [value for value in values if np.isfinite(value)]
    return float(np.mean(finite)) if finite else float('nan')


def safe_sar_avg(task: TaskMatrixSet, merged: MergeOutcome | TaskMatrixSet, epsilon: float) -> float:
    """SAR_avg, or NaN with a warning when no 2-D layer is usable."""
    try:
        return sar_avg(task, merged, epsilon)
    except NoTwoDLayers:
        logger.warning('SAR_avg undefined for task %r: no usable 2-D layer', task.task_label)
        return float('nan')


def benchmark_method(
    suite: SyntheticSuite,
    outcome: MergeOutcome,
    alpha: float,
    references: ReferenceAccuracies,
    epsilon: float = DEFAULT_EPSILON,
) -> tuple[list[BenchmarkRow], MethodSummary]:  # pylint: disable=too-many-arguments,too-many-positional-arguments
    """Rows of one merged model at a fixed α, closed by a ``task='mean'`` row."""
    merged = apply_delta(suite.base, outcome, alpha)
    task_deltas = suite.task_deltas()
    accuracies = split_accuracies(merged, suite)

    rows = []
    for t, delta in enumerate(task_deltas):
        label = delta.task_label
        rows.append(
            BenchmarkRow(
                method=outcome.method,
                alpha=alpha,
                task=label,
                acc=accuracies[t],
                nai=safe_nai(accuracies[t], references.task[t], references.zero[t], label),
                sar_avg=safe_sar_avg(delta, outcome, epsilon),
            )
        )

    mean_nai = nan_mean([row.nai for row in rows])
    normalized = [acc / ref if ref > 0 else 0.0 for acc, ref in zip(accuracies, references.task, strict=True)]
    summary = MethodSummary(
        method=outcome.method,
        alpha=alpha,
        mean_acc=float(np.mean(accuracies)),
        mean_nai=mean_nai,
        mean_normalized_acc=float(np.mean(normalized)),
    )
    rows.append(
        BenchmarkRow(
            method=outcome.method,
            alpha=alpha,
            task='mean',
            acc=summary.mean_acc,
            nai=mean_nai,
            sar_avg=nan_mean([row.sar_avg for row in rows]),
        )
    )
    return rows, summary


def run_benchmark(
    suite: SyntheticSuite,
    methods: Sequence[MergeMethod | str],
    alpha_grid: Sequence[float] = DEFAULT_ALPHA_GRID,
    common_fraction: float = DEFAULT_COMMON_FRACTION,
    epsilon: float = DEFAULT_EPSILON,
    threads: int = 1,
) -> BenchmarkResult:  # pylint: disable=too-many-arguments,too-many-positional-arguments
    """Merge the suite with every method, pick α on validation splits and score on test splits.

    Args:
        suite: Synthetic suite to merge
        methods: Methods in report order
        alpha_grid: Candidate α values
        common_fraction: Iso-CTS common-subspace fraction
        epsilon: Residual tolerance of the SAR effective rank
        threads: Per-layer merge parallelism

    Returns:
        BenchmarkResult: Rows per method and task plus per-method means
    """
    references = ReferenceAccuracies(suite)
    task_deltas = suite.task_deltas()
    evaluator = validation_evaluator(suite)

    rows, summaries = [], {}
    for method in methods:
        merger = build_merger(method, common_fraction=common_fraction, threads=threads)
        outcome = merger.merge(task_deltas)
        sweep = sweep_alpha(suite.base, outcome, alpha_grid, evaluator)
        outcome = outcome.with_alpha(sweep.best_alpha)
        method_rows, summary = benchmark_method(suite, outcome, sweep.best_alpha, references, epsilon)
        rows.extend(method_rows)
        summaries[outcome.method] = summary
        logger.info(
            'Benchmark %s: alpha=%.3g mean_acc=%.4f mean_nai=%.4f',
            outcome.method,
            summary.alpha,
            summary.mean_acc,
            summary.mean_nai,
        )

    return BenchmarkResult(BenchmarkReport(rows=rows), summaries)
