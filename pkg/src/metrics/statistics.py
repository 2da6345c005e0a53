"""Scalar statistics over per-task results."""

from collections.abc import Sequence

import numpy as np
from scipy import stats

from src.errors import DegenerateDenominator, LengthMismatch, ZeroVariance


def nai(acc_merged: float, acc_task: float, acc_zero: float) -> float:
    """Normalized accuracy improvement of a merged model over the zero-shot model.

    Not clamped: values below 0 or above 1 are meaningful.

    Raises:
        DegenerateDenominator: If task and zero-shot accuracies differ by less than 1e-12
    """
    denominator = acc_task - acc_zero
    if abs(denominator) < 1e-12:
        raise DegenerateDenominator(f'Task accuracy {acc_task} equals zero-shot accuracy {acc_zero}')
    return (acc_merged - acc_zero) / denominator


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient.

    Raises:
        LengthMismatch: If the inputs differ in length or hold fewer than two values
        ZeroVariance: If either input is constant
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise LengthMismatch(f'Pearson needs equal-length sequences of at least 2 values, got {x.size} and {y.size}')
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ZeroVariance('Pearson correlation is undefined for a constant sequence')
    return float(stats.pearsonr(x, y).statistic)
