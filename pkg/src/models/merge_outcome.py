"""Merged deltas together with the per-layer bookkeeping of the merge."""

from enum import StrEnum

from pydantic import BaseModel, Field

from src.models.task_matrix import TaskMatrixSet


class MergeMethod(StrEnum):
    """Available merging operators, valued by their command-line names."""

    AVG = 'avg'
    TA = 'ta'
    ISO_C = 'iso-c'
    ISO_CTS = 'iso-cts'


class LayerFlag(StrEnum):
    """Conditions that were tolerated while merging a layer."""

    ZERO_SUM = 'zero_sum'
    WHITENING_FALLBACK = 'whitening_fallback'
    DEGENERATE_TO_ISO_C = 'degenerate_to_iso_c'


class LayerMeta(BaseModel):
    """Bookkeeping for one merged 2-D layer."""

    method: MergeMethod
    r: int = Field(ge=0)
    sigma_bar: float = 0.0
    k_common: int = Field(default=0, ge=0)
    s_per_task: int = Field(default=0, ge=0)
    flags: list[LayerFlag] = []


class MergeOutcome:
    """Result of a merge: merged Δ per layer, merged δ per 1-D parameter, and layer metadata."""

    def __init__(self, deltas: TaskMatrixSet, per_layer_meta: dict[str, LayerMeta], method: MergeMethod):
        """Initialize a merge outcome.

        Args:
            deltas: Merged deltas (not yet scaled by α)
            per_layer_meta: Metadata keyed by 2-D layer name
            method: Operator that produced the deltas
        """
        self.deltas = deltas
        self.per_layer_meta = per_layer_meta
        self.method = method
        self.alpha: float | None = None

    def __repr__(self) -> str:
        return f'<MergeOutcome {self.method.value}: {len(self.per_layer_meta)} layers, alpha={self.alpha}>'

    def with_alpha(self, alpha: float) -> 'MergeOutcome':
        """Return a copy that records the chosen α."""
        outcome = MergeOutcome(self.deltas, self.per_layer_meta, self.method)
        outcome.alpha = alpha
        return outcome

    def flagged_layers(self, flag: LayerFlag) -> list[str]:
        """Names of the layers carrying ``flag``."""
        return [name for name, meta in self.per_layer_meta.items() if flag in meta.flags]

    def to_sidecar(self, common_fraction: float | None = None) -> dict:
        """Serializable summary written next to a merged checkpoint."""
        return {
            'method': self.method.value,
            'alpha': self.alpha,
            'common_fraction': common_fraction,
            'layers': {name: meta.model_dump(mode='json') for name, meta in self.per_layer_meta.items()},
        }
