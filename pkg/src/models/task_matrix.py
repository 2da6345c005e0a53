"""Per-task weight deltas split into 2-D task matrices and 1-D delta vectors."""

from collections.abc import Sequence

import numpy as np

from src.errors import EmptyTaskList, NameSetMismatch, ShapeMismatch


class TaskMatrixSet:
    """Task matrices Δ_t (2-D layers) and delta vectors δ_t (1-D parameters) of one task."""

    def __init__(self, matrices=None, vectors=None, task_label=''):
        """Initialize a delta set.

        Args:
            matrices: Ordered map from layer name to 2-D delta
            vectors: Ordered map from parameter name to 1-D delta
            task_label: Name of the task these deltas belong to
        """
        self.matrices: dict[str, np.ndarray] = {
            name: np.asarray(value, dtype=np.float64) for name, value in (matrices or {}).items()
        }
        self.vectors: dict[str, np.ndarray] = {
            name: np.asarray(value, dtype=np.float64) for name, value in (vectors or {}).items()
        }
        self.task_label = task_label

        for name, value in self.matrices.items():
            if value.ndim != 2:
                raise ShapeMismatch(f'Task matrix {name!r} must be 2-D, got shape {value.shape}')
        for name, value in self.vectors.items():
            if value.ndim != 1:
                raise ShapeMismatch(f'Delta vector {name!r} must be 1-D, got shape {value.shape}')
        overlap = set(self.matrices) & set(self.vectors)
        if overlap:
            raise NameSetMismatch(f'Names used both as matrix and vector: {sorted(overlap)}')

    def __getitem__(self, name: str) -> np.ndarray:
        if name in self.matrices:
            return self.matrices[name]
        return self.vectors[name]

    def __repr__(self) -> str:
        return f'<TaskMatrixSet {self.task_label!r}: {len(self.matrices)} matrices, {len(self.vectors)} vectors>'

    @property
    def names(self) -> list[str]:
        """All parameter names, matrices first."""
        return [*self.matrices, *self.vectors]

    def shapes(self) -> dict[str, tuple[int, ...]]:
        """Map each parameter name to its shape."""
        return {name: self[name].shape for name in self.names}

    def scaled(self, factor: float) -> 'TaskMatrixSet':
        """Return a copy with every delta multiplied by ``factor``."""
        return TaskMatrixSet(
            matrices={name: factor * value for name, value in self.matrices.items()},
            vectors={name: factor * value for name, value in self.vectors.items()},
            task_label=self.task_label,
        )

    def flatten(self) -> np.ndarray:
        """Concatenate every delta, in name order, into one task vector."""
        parts = [self[name].ravel() for name in self.names]
        return np.concatenate(parts) if parts else np.zeros(0)


def check_task_alignment(tasks: Sequence[TaskMatrixSet]) -> None:
    """Raise unless every task holds the same matrix and vector names with identical shapes.

    Raises:
        EmptyTaskList: If ``tasks`` is empty
        NameSetMismatch: If name sets differ between tasks
        ShapeMismatch: If any shape differs between tasks
    """
    if not tasks:
        raise EmptyTaskList('At least one task is required')

    reference = tasks[0]
    for task in tasks[1:]:
        for kind, ref_map, other_map in (
            ('matrices', reference.matrices, task.matrices),
            ('vectors', reference.vectors, task.vectors),
        ):
            if set(ref_map) != set(other_map):
                raise NameSetMismatch(
                    f'Task {task.task_label!r} {kind} {sorted(other_map)} differ from '
                    f'task {reference.task_label!r} {kind} {sorted(ref_map)}'
                )
            for name, value in ref_map.items():
                if other_map[name].shape != value.shape:
                    raise ShapeMismatch(
                        f'Parameter {name!r}: task {task.task_label!r} has shape {other_map[name].shape}, '
                        f'task {reference.task_label!r} has {value.shape}'
                    )
