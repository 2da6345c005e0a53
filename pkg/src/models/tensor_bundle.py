"""Named collection of f32 parameters and the bundle arithmetic built on it."""

from collections.abc import Iterable, Iterator, Mapping
from typing import TYPE_CHECKING

import numpy as np

from src.errors import DuplicateName, InvalidTensor, NameSetMismatch, NonFiniteValue, ShapeMismatch
from src.models.task_matrix import TaskMatrixSet

if TYPE_CHECKING:
    from src.models.merge_outcome import MergeOutcome


def _freeze(name: str, value) -> np.ndarray:
    """Validate one parameter and return a read-only f32 copy."""
    if not isinstance(name, str) or not name:
        raise InvalidTensor(f'Parameter names must be non-empty strings, got {name!r}')

    array = np.array(value, dtype=np.float32, order='C')
    if array.ndim not in (1, 2):
        raise InvalidTensor(f'Parameter {name!r} has rank {array.ndim}; only vectors and matrices are supported')
    if 0 in array.shape:
        raise InvalidTensor(f'Parameter {name!r} has an empty dimension: {array.shape}')
    if not np.isfinite(array).all():
        raise NonFiniteValue(f'Parameter {name!r} contains NaN or Inf')

    array.setflags(write=False)
    return array


class TensorBundle:
    """Immutable, ordered set of named model parameters (θ_0, θ_t or a merged θ)."""

    def __init__(self, entries: Mapping[str, np.ndarray] | Iterable[tuple[str, np.ndarray]], meta=None):
        """Initialize a bundle.

        Args:
            entries: Mapping or sequence of (name, array) pairs; order is preserved
            meta: Optional free-form string map stored alongside the parameters

        Raises:
            DuplicateName: If a name appears twice in a sequence of pairs
            InvalidTensor: If a name is empty or a tensor is not rank-1/rank-2 with positive extents
            NonFiniteValue: If a tensor contains NaN or Inf
        """
        items = entries.items() if isinstance(entries, Mapping) else entries
        self._entries: dict[str, np.ndarray] = {}
        for name, value in items:
            if name in self._entries:
                raise DuplicateName(f'Duplicate parameter name: {name!r}')
            self._entries[name] = _freeze(name, value)
        self.meta: dict[str, str] = {str(key): str(val) for key, val in (meta or {}).items()}

    def __getitem__(self, name: str) -> np.ndarray:
        return self._entries[name]

    def __contains__(self, name: object) -> bool:
        return name in self._entries

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TensorBundle):
            return NotImplemented
        return (
            list(self._entries) == list(other._entries)
            and all(
                self[name].shape == other[name].shape and self[name].tobytes() == other[name].tobytes()
                for name in self._entries
            )
            and self.meta == other.meta
        )

    def __repr__(self) -> str:
        return f'<TensorBundle with {len(self)} tensors>'

    @property
    def names(self) -> list[str]:
        """Parameter names in storage order."""
        return list(self._entries)

    def items(self):
        """Iterate over (name, array) pairs in storage order."""
        return self._entries.items()

    def shapes(self) -> dict[str, tuple[int, ...]]:
        """Map each parameter name to its shape."""
        return {name: array.shape for name, array in self._entries.items()}


def check_aligned(expected: Mapping[str, tuple[int, ...]], actual: Mapping[str, tuple[int, ...]], what: str) -> None:
    """Raise unless two name → shape maps agree exactly.

    Args:
        expected: Reference name → shape map
        actual: Name → shape map to check
        what: Label used in error messages

    Raises:
        NameSetMismatch: If the name sets differ
        ShapeMismatch: If any shape differs
    """
    if set(expected) != set(actual):
        missing = sorted(set(expected) - set(actual))
        extra = sorted(set(actual) - set(expected))
        raise NameSetMismatch(f'{what}: parameter names differ (missing {missing}, unexpected {extra})')
    for name, shape in expected.items():
        if tuple(actual[name]) != tuple(shape):
            raise ShapeMismatch(f'{what}: parameter {name!r} has shape {tuple(actual[name])}, expected {tuple(shape)}')


def bundle_delta(fine_tuned: TensorBundle, base: TensorBundle, task_label: str | None = None) -> TaskMatrixSet:
    """Compute the task matrices Δ_t = θ_t − θ_0 for one fine-tuned model.

    Args:
        fine_tuned: Fine-tuned parameters θ_t
        base: Pre-trained parameters θ_0
        task_label: Label for the task; defaults to the ``task`` meta entry of ``fine_tuned``

    Returns:
        TaskMatrixSet: 2-D deltas and 1-D deltas in ``base`` order, held in float64
    """
    check_aligned(base.shapes(), fine_tuned.shapes(), 'bundle_delta')

    matrices: dict[str, np.ndarray] = {}
    vectors: dict[str, np.ndarray] = {}
    for name, theta_0 in base.items():
        delta = fine_tuned[name].astype(np.float64) - theta_0.astype(np.float64)
        if delta.ndim == 2:
            matrices[name] = delta
        else:
            vectors[name] = delta

    label = task_label if task_label is not None else fine_tuned.meta.get('task', '')
    return TaskMatrixSet(matrices=matrices, vectors=vectors, task_label=label)


def apply_delta(base: TensorBundle, merged: 'MergeOutcome | TaskMatrixSet', alpha: float) -> TensorBundle:
    """Build θ_0 + α·Δ for every parameter.

    Args:
        base: Pre-trained parameters θ_0
        merged: Merge outcome (or a bare delta set) aligned with ``base``
        alpha: Global scaling coefficient

    Returns:
        TensorBundle: New f32 bundle in ``base`` order; ``base.meta`` is carried over
    """
    deltas = merged if isinstance(merged, TaskMatrixSet) else merged.deltas
    check_aligned(base.shapes(), deltas.shapes(), 'apply_delta')

    entries = []
    for name, theta_0 in base.items():
        updated = theta_0.astype(np.float64) + alpha * deltas[name]
        entries.append((name, updated.astype(np.float32)))
    return TensorBundle(entries, meta=base.meta)
