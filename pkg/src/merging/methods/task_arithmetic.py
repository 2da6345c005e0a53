"""Task Arithmetic: the sum of task matrices."""

import numpy as np

from src.merging.base_merger import BaseMerger, sum_over_tasks
from src.models.merge_outcome import LayerMeta, MergeMethod


class TaskArithmeticMerger(BaseMerger):
    """Merge by summing the task matrices of every layer (Δ_TA = Σ_t Δ_t)."""

    method = MergeMethod.TA

    def merge_layer(self, name: str, deltas: list[np.ndarray]) -> tuple[np.ndarray, LayerMeta]:
        """Return ``Σ_t Δ_t``."""
        return sum_over_tasks(deltas), LayerMeta(method=self.method, r=min(deltas[0].shape))
