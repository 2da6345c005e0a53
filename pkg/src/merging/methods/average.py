"""Weight averaging: the elementwise mean of task deltas."""

import numpy as np

from src.merging.base_merger import BaseMerger, mean_over_tasks
from src.models.merge_outcome import LayerMeta, MergeMethod


class AverageMerger(BaseMerger):
    """Merge by averaging the task matrices of every layer."""

    method = MergeMethod.AVG

    def merge_layer(self, name: str, deltas: list[np.ndarray]) -> tuple[np.ndarray, LayerMeta]:
        """Return ``(1/T)·Σ_t Δ_t``."""
        return mean_over_tasks(deltas), LayerMeta(method=self.method, r=min(deltas[0].shape))
