"""Isotropic merging in common and task-specific subspaces (Iso-CTS)."""

import logging
import math

import numpy as np

from src.errors import InvalidConfig, RankDeficient
from src.merging.base_merger import BaseMerger, sum_over_tasks
from src.merging.methods.iso_c import isotropic_layer
from src.models.merge_outcome import LayerFlag, LayerMeta, MergeMethod
from src.spectral.core import ORTHONORMAL_TOL, RANK_TOL, SvdFactors, residual_against, thin_svd, whiten_columns

logger = logging.getLogger(__name__)

DEFAULT_COMMON_FRACTION = 0.8


def round_half_away(value: float) -> int:
    """Round to the nearest integer, halves away from zero."""
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


def subspace_budget(r: int, num_tasks: int, common_fraction: float) -> tuple[int, int]:
    """Split ``r`` directions between the common block and ``num_tasks`` task-specific blocks.

    Args:
        r: Rank of the layer's thin SVD
        num_tasks: Number of tasks T
        common_fraction: Requested fraction of common directions

    Returns:
        tuple: ``(k, s)`` with ``k + T·s = r`` and ``k ≥ 1``; the rounding remainder joins the common block
    """
    k0 = max(1, round_half_away(common_fraction * r))
    s = (r - k0) // num_tasks
    return r - num_tasks * s, s


def task_specific_directions(delta: np.ndarray, common: SvdFactors, s: int) -> SvdFactors:
    """Top-``s`` directions of a task matrix outside the common subspace.

    Args:
        delta: Task matrix Δ_t
        common: Top-k factors of Δ_TA
        s: Number of task-specific directions

    Returns:
        SvdFactors: Top-``s`` triplets of ``Δ_t − U^{1:k}(U^{1:k})ᵀΔ_t``

    Raises:
        RankDeficient: If the residual has fewer than ``s`` directions above rounding level, or its
            directions are not orthogonal to the common basis
    """
    specific = thin_svd(residual_against(delta, common.U)).top(s)
    if specific.sigma[-1] <= RANK_TOL * common.sigma[0]:
        raise RankDeficient(
            f'Residual has rank below {s}: sigma_s = {specific.sigma[-1]:.3e}, sigma_1(TA) = {common.sigma[0]:.3e}'
        )
    overlap = float(np.abs(common.U.T @ specific.U).max())
    if overlap > ORTHONORMAL_TOL:
        raise RankDeficient(f'Residual directions overlap the common subspace by {overlap:.3e}')
    return specific


class IsoCTSMerger(BaseMerger):
    """Merge by combining the top common directions with per-task residual directions."""

    method = MergeMethod.ISO_CTS

    def __init__(self, common_fraction: float = DEFAULT_COMMON_FRACTION, threads: int = 1):
        """Initialize the merger.

        Args:
            common_fraction: Fraction k/r of directions taken from the common subspace, in (0, 1]
            threads: Number of worker threads used to merge layers concurrently
        """
        super().__init__(threads=threads)
        if not 0 < common_fraction <= 1:
            raise InvalidConfig(f'common_fraction must lie in (0, 1], got {common_fraction}')
        self.common_fraction = common_fraction

    def merge_layer(self, name: str, deltas: list[np.ndarray]) -> tuple[np.ndarray, LayerMeta]:
        """Return ``σ̄·U_*·V_*ᵀ`` built from whitened common and task-specific bases."""
        num_tasks = len(deltas)
        delta_ta = sum_over_tasks(deltas)
        r = min(delta_ta.shape)
        k, s = subspace_budget(r, num_tasks, self.common_fraction)

        if s == 0:
            merged, meta = isotropic_layer(delta_ta, name, method=self.method)
            meta.flags.append(LayerFlag.DEGENERATE_TO_ISO_C)
            return merged, meta
        if not np.any(delta_ta):
            return isotropic_layer(delta_ta, name, method=self.method)

        common = thin_svd(delta_ta).top(k)
        left_blocks = [common.U]
        right_blocks = [common.V]
        sigma_total = float(common.sigma.sum())
        try:
            for delta in deltas:
                specific = task_specific_directions(delta, common, s)
                left_blocks.append(specific.U)
                right_blocks.append(specific.V)
                sigma_total += float(specific.sigma.sum())
            u_star = whiten_columns(np.hstack(left_blocks))
            v_star = whiten_columns(np.hstack(right_blocks))
        except RankDeficient as err:
            logger.warning('Layer %s: %s; falling back to Iso-C', name, err)
            merged, meta = isotropic_layer(delta_ta, name, method=self.method)
            meta.flags.append(LayerFlag.WHITENING_FALLBACK)
            return merged, meta

        sigma_bar = sigma_total / r
        meta = LayerMeta(method=self.method, r=r, sigma_bar=sigma_bar, k_common=k, s_per_task=s)
        return sigma_bar * (u_star @ v_star.T), meta
