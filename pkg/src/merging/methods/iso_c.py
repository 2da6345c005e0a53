"""Isotropic merging in the common subspace (Iso-C)."""

import logging

import numpy as np

from src.merging.base_merger import BaseMerger, sum_over_tasks
from src.models.merge_outcome import LayerFlag, LayerMeta, MergeMethod
from src.spectral.core import thin_svd

logger = logging.getLogger(__name__)


def isotropic_layer(delta_ta: np.ndarray, name: str = '', method: MergeMethod = MergeMethod.ISO_C):
    """Flatten the spectrum of a summed task matrix to its mean singular value.

    Args:
        delta_ta: Summed task matrix Δ_TA
        name: Layer name for log messages
        method: Method recorded in the returned metadata

    Returns:
        tuple: ``σ̄·U·Vᵀ`` and its metadata; a zero Δ_TA yields a zero layer flagged ``zero_sum``
    """
    r = min(delta_ta.shape)
    if not np.any(delta_ta):
        logger.warning('Layer %s: task matrices sum to zero, emitting a zero delta', name)
        meta = LayerMeta(method=method, r=r, sigma_bar=0.0, k_common=r, flags=[LayerFlag.ZERO_SUM])
        return np.zeros_like(delta_ta), meta

    factors = thin_svd(delta_ta)
    sigma_bar = float(factors.sigma.mean())
    merged = sigma_bar * (factors.U @ factors.V.T)
    return merged, LayerMeta(method=method, r=r, sigma_bar=sigma_bar, k_common=r)


class IsoCMerger(BaseMerger):
    """Merge by replacing the Task Arithmetic spectrum with its mean singular value."""

    method = MergeMethod.ISO_C

    def merge_layer(self, name: str, deltas: list[np.ndarray]) -> tuple[np.ndarray, LayerMeta]:
        """Return ``σ̄·U·Vᵀ`` for the SVD of ``Σ_t Δ_t``."""
        return isotropic_layer(sum_over_tasks(deltas), name)
