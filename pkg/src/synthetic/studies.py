"""Spectrum and subspace studies run on a synthetic suite."""

import logging
from collections.abc import Callable, Sequence

import numpy as np

from src.merging.alpha_sweep import DEFAULT_ALPHA_GRID, sweep_alpha
from src.merging.merge_ops import flatten_task, merge_iso_cts, merge_task_arithmetic
from src.metrics.alignment import pairwise_alignment
from src.metrics.spectrum import interpolate_spectrum, truncate_isotropic
from src.models.report import TableReport
from src.models.task_matrix import TaskMatrixSet
from src.models.tensor_bundle import apply_delta
from src.spectral.core import DEFAULT_EPSILON
from src.synthetic.benchmark import (
    ReferenceAccuracies,
    nan_mean,
    safe_nai,
    safe_sar_avg,
    split_accuracies,
    validation_evaluator,
)
from src.synthetic.network import evaluate_accuracy
from src.synthetic.suite import SyntheticSuite

logger = logging.getLogger(__name__)

DEFAULT_TRUNCATION_KS = (1, 2, 4, 8, 16, 32, 48)
DEFAULT_COMMON_FRACTIONS = (0.1, 0.2, 0.4, 0.6, 0.8, 1.0)
DEFAULT_BETAS = (0.0, 0.25, 0.5, 0.75, 1.0)


def _transform_ta(tasks: Sequence[TaskMatrixSet], layer_fn: Callable[[np.ndarray], np.ndarray], label: str):
    """Apply ``layer_fn`` to every nonzero Task Arithmetic layer; 1-D deltas keep the TA mean."""
    ta = merge_task_arithmetic(tasks).deltas
    matrices = {name: layer_fn(layer) if np.any(layer) else layer for name, layer in ta.matrices.items()}
    return TaskMatrixSet(matrices, ta.vectors, task_label=label)


def _task_nais(suite: SyntheticSuite, merged: TaskMatrixSet, alpha: float, references: ReferenceAccuracies):
    accuracies = split_accuracies(apply_delta(suite.base, merged, alpha), suite)
    return accuracies, [
        safe_nai(acc, references.task[t], references.zero[t], label)
        for t, (acc, label) in enumerate(zip(accuracies, suite.task_labels, strict=True))
    ]


def flatten_study(suite: SyntheticSuite) -> TableReport:
    """Test accuracy of each θ_t before and after flattening its own spectrum."""
    references = ReferenceAccuracies(suite)
    rows = []
    for t, delta in enumerate(suite.task_deltas()):
        flattened = apply_delta(suite.base, flatten_task(delta), 1.0)
        rows.append(
            {
                'task': delta.task_label,
                'acc_original': references.task[t],
                'acc_flattened': evaluate_accuracy(flattened, suite.datasets[t].test),
            }
        )
    return TableReport(rows=rows, header=('task', 'acc_original', 'acc_flattened'))


def pairwise_study(suite: SyntheticSuite, epsilon: float = DEFAULT_EPSILON) -> TableReport:
    """SAR_avg between every ordered pair of tasks."""
    rows = pairwise_alignment(suite.task_deltas(), epsilon)
    return TableReport(rows=rows, header=('task_src', 'task_trg', 'sar_avg'))


def truncation_study(
    suite: SyntheticSuite, ks: Sequence[int] = DEFAULT_TRUNCATION_KS, alpha: float = 1.0
) -> TableReport:
    """Per-task NAI when only the top ``k`` directions of the flattened TA spectrum are kept.

    ``k`` is capped at each layer's ``min(m, n)``.
    """
    references = ReferenceAccuracies(suite)
    tasks = suite.task_deltas()
    rows = []
    for k in ks:
        merged = _transform_ta(tasks, lambda layer, k=k: truncate_isotropic(layer, min(k, min(layer.shape))), f'k={k}')
        _, nais = _task_nais(suite, merged, alpha, references)
        rows.extend({'k': k, 'task': label, 'nai': value} for label, value in zip(suite.task_labels, nais, strict=True))
        logger.debug('Truncation k=%d: mean NAI %.4f', k, nan_mean(nais))
    return TableReport(rows=rows, header=('k', 'task', 'nai'))


def common_fraction_ablation(
    suite: SyntheticSuite,
    fractions: Sequence[float] = DEFAULT_COMMON_FRACTIONS,
    alpha_grid: Sequence[float] = DEFAULT_ALPHA_GRID,
    threads: int = 1,
) -> TableReport:
    """Mean test accuracy and NAI of Iso-CTS for several common-subspace fractions."""
    references = ReferenceAccuracies(suite)
    tasks = suite.task_deltas()
    evaluator = validation_evaluator(suite)
    rows = []
    for fraction in fractions:
        outcome = merge_iso_cts(tasks, common_fraction=fraction, threads=threads)
        alpha = sweep_alpha(suite.base, outcome, alpha_grid, evaluator).best_alpha
        accuracies, nais = _task_nais(suite, outcome.deltas, alpha, references)
        rows.append(
            {
                'common_fraction': fraction,
                'alpha': alpha,
                'mean_acc': float(np.mean(accuracies)),
                'mean_nai': nan_mean(nais),
            }
        )
    return TableReport(rows=rows, header=('common_fraction', 'alpha', 'mean_acc', 'mean_nai'))


def interpolation_study(
    suite: SyntheticSuite,
    betas: Sequence[float] = DEFAULT_BETAS,
    alpha: float = 1.0,
    epsilon: float = DEFAULT_EPSILON,
) -> TableReport:
    """Mean SAR_avg and NAI while the TA spectrum is blended towards the isotropic one."""
    references = ReferenceAccuracies(suite)
    tasks = suite.task_deltas()
    rows = []
    for beta in betas:
        merged = _transform_ta(tasks, lambda layer, beta=beta: interpolate_spectrum(layer, beta), f'beta={beta}')
        _, nais = _task_nais(suite, merged, alpha, references)
        rows.append(
            {
                'beta': beta,
                'mean_sar_avg': nan_mean([safe_sar_avg(task, merged, epsilon) for task in tasks]),
                'mean_nai': nan_mean(nais),
            }
        )
    return TableReport(rows=rows, header=('beta', 'mean_sar_avg', 'mean_nai'))
