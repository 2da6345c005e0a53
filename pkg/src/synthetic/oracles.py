"""Brute-force reference for the Iso-C layer, computed without an SVD."""

from collections.abc import Sequence

import numpy as np
from scipy import linalg

from src.errors import EmptyTaskList, ShapeMismatch, TooLarge

MAX_ORACLE_EXTENT = 6


def oracle_iso_c(tasks: Sequence[np.ndarray], tol: float = 1e-12) -> np.ndarray:
    """Iso-C of small matrices through the eigendecomposition of Δ_TAᵀΔ_TA.

    V and σ² come from ``scipy.linalg.eigh``; U is rebuilt as ``Δ_TA·V·diag(1/σ)`` on the
    eigenpairs whose σ exceeds ``tol·σ_max``. Directions below that threshold contribute σ̄
    but no column, so rank-deficient sums are only approximated.

    Args:
        tasks: Task matrices of one layer, all of the same shape, at most 6×6
        tol: Relative threshold for treating σ as zero

    Returns:
        np.ndarray: ``σ̄·U·Vᵀ`` with σ̄ the mean of the top ``min(m, n)`` singular values

    Raises:
        TooLarge: If a matrix exceeds 6×6
    """
    if len(tasks) == 0:
        raise EmptyTaskList('The oracle needs at least one task matrix')
    if len({np.shape(task) for task in tasks}) != 1:
        raise ShapeMismatch('Oracle task matrices differ in shape')
    stack = np.stack([np.asarray(task, dtype=np.float64) for task in tasks])
    m, n = stack.shape[1:]
    if m > MAX_ORACLE_EXTENT or n > MAX_ORACLE_EXTENT:
        raise TooLarge(f'The oracle handles at most {MAX_ORACLE_EXTENT}×{MAX_ORACLE_EXTENT}, got {m}×{n}')

    delta_ta = stack.sum(axis=0)
    if not np.any(delta_ta):
        return np.zeros((m, n))

    r = min(m, n)
    eigvals, eigvecs = linalg.eigh(delta_ta.T @ delta_ta)
    order = np.argsort(eigvals)[::-1][:r]
    sigma = np.sqrt(np.clip(eigvals[order], 0.0, None))
    v = eigvecs[:, order]

    keep = sigma > tol * sigma[0]
    u = delta_ta @ v[:, keep] / sigma[keep]
    return sigma.mean() * (u @ v[:, keep].T)
