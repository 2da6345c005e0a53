"""Abstract base merger with the layer loop shared by every merging method."""

import abc
import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from src.errors import NumericalError
from src.models.merge_outcome import LayerMeta, MergeMethod, MergeOutcome
from src.models.task_matrix import TaskMatrixSet, check_task_alignment

logger = logging.getLogger(__name__)


def sum_over_tasks(stack: Sequence[np.ndarray]) -> np.ndarray:
    """Elementwise sum over tasks, invariant to task order.

    Each entry is summed over its task-sorted values, so permuting the tasks gives the
    same bits for any number of tasks.
    """
    values = np.sort(np.stack(stack), axis=0)
    total = values[0].copy()
    for value in values[1:]:
        total += value
    return total


def mean_over_tasks(stack: Sequence[np.ndarray]) -> np.ndarray:
    """Elementwise mean over tasks using the order-invariant sum."""
    return sum_over_tasks(stack) / len(stack)


class BaseMerger(abc.ABC):
    """Base class for all merging methods.

    Subclasses implement :meth:`merge_layer` for 2-D task matrices; 1-D parameters are
    always merged by averaging their deltas.
    """

    method: MergeMethod

    def __init__(self, threads: int = 1):
        """Initialize the merger.

        Args:
            threads: Number of worker threads used to merge layers concurrently
        """
        self.threads = max(1, int(threads))

    def merge(self, tasks: Sequence[TaskMatrixSet]) -> MergeOutcome:
        """Merge aligned task delta sets layer by layer.

        Args:
            tasks: One delta set per task, all with identical names and shapes

        Returns:
            MergeOutcome: Merged deltas and per-layer metadata, in the first task's layer order

        Raises:
            EmptyTaskList: If ``tasks`` is empty
            NameSetMismatch: If tasks disagree on parameter names
            ShapeMismatch: If tasks disagree on a parameter shape
        """
        check_task_alignment(tasks)
        reference = tasks[0]
        layer_names = list(reference.matrices)
        logger.info(
            'Merging %d tasks with %s: %d matrices, %d vectors',
            len(tasks),
            self.method.value,
            len(layer_names),
            len(reference.vectors),
        )

        def merge_one(name: str) -> tuple[np.ndarray, LayerMeta]:
            try:
                return self.merge_layer(name, [task.matrices[name] for task in tasks])
            except NumericalError as err:
                raise type(err)(f'Layer {name}: {err}') from err

        # Results come back in submission order, so threaded and sequential runs agree.
        if self.threads > 1 and len(layer_names) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(merge_one, layer_names))
        else:
            results = [merge_one(name) for name in layer_names]

        matrices = {}
        per_layer_meta = {}
        for name, (merged, meta) in zip(layer_names, results, strict=True):
            matrices[name] = merged
            per_layer_meta[name] = meta
            logger.debug(
                'Layer %s: sigma_bar=%.6g k=%d s=%d r=%d', name, meta.sigma_bar, meta.k_common, meta.s_per_task, meta.r
            )

        vectors = {name: mean_over_tasks([task.vectors[name] for task in tasks]) for name in reference.vectors}

        deltas = TaskMatrixSet(matrices=matrices, vectors=vectors, task_label=f'merged-{self.method.value}')
        return MergeOutcome(deltas=deltas, per_layer_meta=per_layer_meta, method=self.method)

    @abc.abstractmethod
    def merge_layer(self, name: str, deltas: list[np.ndarray]) -> tuple[np.ndarray, LayerMeta]:
        """Merge the task matrices of one layer.

        This method must be implemented by all merger subclasses.

        Args:
            name: Layer name, used in log and error messages
            deltas: Task matrices of this layer, one per task, in input order

        Returns:
            tuple: Merged matrix and its metadata
        """
        raise NotImplementedError('Subclasses must implement merge_layer method')
