"""Selection of the global scaling coefficient α on validation data."""

import logging
from collections.abc import Callable, Sequence

import numpy as np

from src.errors import EmptyGrid, EvaluatorFailure
from src.models.merge_outcome import MergeOutcome
from src.models.tensor_bundle import TensorBundle, apply_delta

logger = logging.getLogger(__name__)

DEFAULT_ALPHA_GRID: tuple[float, ...] = tuple(round(0.5 + 0.1 * step, 10) for step in range(16))

Evaluator = Callable[[TensorBundle], Sequence[float]]


class AlphaSweepResult:
    """Best α and the full (α, mean validation accuracy) table."""

    def __init__(self, best_alpha: float, table: list[tuple[float, float]]):
        """Initialize the result.

        Args:
            best_alpha: α with the highest mean accuracy (smallest α on ties)
            table: (α, mean accuracy) pairs in ascending α order
        """
        self.best_alpha = best_alpha
        self.table = table

    def __repr__(self) -> str:
        return f'<AlphaSweepResult best_alpha={self.best_alpha} over {len(self.table)} values>'


def sweep_alpha(
    base: TensorBundle, outcome: MergeOutcome, grid: Sequence[float], evaluator: Evaluator
) -> AlphaSweepResult:
    """Pick the α that maximizes mean per-task validation accuracy.

    Args:
        base: Pre-trained parameters θ_0
        outcome: Merged deltas
        grid: Candidate α values
        evaluator: Callback returning per-task validation accuracies for a candidate θ

    Returns:
        AlphaSweepResult: Best α and the evaluated table

    Raises:
        EmptyGrid: If ``grid`` is empty
        EvaluatorFailure: If the evaluator raises or returns no finite accuracy
    """
    if len(grid) == 0:
        raise EmptyGrid('The alpha grid is empty')

    table: list[tuple[float, float]] = []
    best_alpha, best_score = None, -np.inf
    for alpha in sorted(float(value) for value in grid):
        candidate = apply_delta(base, outcome, alpha)
        try:
            accuracies = np.asarray(evaluator(candidate), dtype=np.float64)
        except Exception as e:  # pylint: disable=broad-except
            raise EvaluatorFailure(f'Evaluator failed at alpha={alpha}') from e
        if accuracies.size == 0 or not np.isfinite(accuracies).all():
            raise EvaluatorFailure(f'Evaluator returned unusable accuracies at alpha={alpha}: {accuracies}')

        score = float(accuracies.mean())
        table.append((alpha, score))
        if score > best_score:
            best_alpha, best_score = alpha, score

    logger.info('Best alpha %.3g with mean validation accuracy %.4f', best_alpha, best_score)
    return AlphaSweepResult(best_alpha, table)
