"""Deterministic thin SVD and the subspace operations built on it.

All routines work in float64. Singular vectors follow a fixed sign convention so that
results do not depend on the LAPACK driver that produced them.
"""

import logging

import numpy as np
import scipy.linalg

from src.errors import (
    BasisNotOrthonormal,
    DimensionMismatch,
    InvalidConfig,
    KOutOfRange,
    NoConvergence,
    NonFinite,
    RankDeficient,
    ZeroMatrix,
)

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.05
ORTHONORMAL_TOL = 1e-8
RANK_TOL = 1e-10


class SvdFactors:
    """Thin SVD ``M = U·diag(sigma)·Vᵀ`` with ``r = min(m, n)`` columns, zeros included."""

    def __init__(self, U: np.ndarray, sigma: np.ndarray, V: np.ndarray):  # pylint: disable=invalid-name
        """Initialize the factors.

        Args:
            U: m×r left singular vectors
            sigma: Length-r singular values, non-increasing
            V: n×r right singular vectors
        """
        self.U = U  # pylint: disable=invalid-name
        self.sigma = sigma
        self.V = V  # pylint: disable=invalid-name

    @property
    def r(self) -> int:
        """Number of singular triplets."""
        return self.sigma.shape[0]

    def reconstruct(self) -> np.ndarray:
        """Return ``U·diag(sigma)·Vᵀ``."""
        return (self.U * self.sigma) @ self.V.T

    def top(self, k: int) -> 'SvdFactors':
        """Keep the first ``k`` triplets."""
        if not 1 <= k <= self.r:
            raise KOutOfRange(f'k={k} outside 1..{self.r}')
        return SvdFactors(self.U[:, :k], self.sigma[:k], self.V[:, :k])


def _as_finite_matrix(M, name: str = 'matrix') -> np.ndarray:  # pylint: disable=invalid-name
    matrix = np.asarray(M, dtype=np.float64)
    if matrix.ndim != 2:
        raise DimensionMismatch(f'{name} must be 2-D, got shape {matrix.shape}')
    if not np.isfinite(matrix).all():
        raise NonFinite(f'{name} contains NaN or Inf')
    return matrix


def _fix_signs(U: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:  # pylint: disable=invalid-name
    """Flip (uᵢ, vᵢ) pairs so the largest-magnitude entry of each uᵢ is non-negative."""
    if U.shape[1] == 0:
        return U, V
    # argmax returns the lowest index among equal magnitudes
    pivots = np.argmax(np.abs(U), axis=0)
    signs = np.where(U[pivots, np.arange(U.shape[1])] < 0, -1.0, 1.0)
    return U * signs, V * signs


def thin_svd(M) -> SvdFactors:  # pylint: disable=invalid-name
    """Compute the deterministic thin SVD of a finite matrix.

    The divide-and-conquer driver is tried first; on failure the QR-iteration driver
    (bounded iterations) is used before giving up.

    Args:
        M: m×n matrix

    Returns:
        SvdFactors: r = min(m, n) triplets with non-increasing singular values

    Raises:
        NonFinite: If ``M`` contains NaN or Inf
        NoConvergence: If neither LAPACK driver converges
    """
    matrix = _as_finite_matrix(M)
    if 0 in matrix.shape:
        raise DimensionMismatch(f'Cannot decompose an empty matrix of shape {matrix.shape}')

    for driver in ('gesdd', 'gesvd'):
        try:
            u, s, vh = scipy.linalg.svd(matrix, full_matrices=False, lapack_driver=driver, check_finite=False)
            break
        except np.linalg.LinAlgError:
            logger.warning('SVD driver %s did not converge on a %dx%d matrix', driver, *matrix.shape)
    else:
        raise NoConvergence(f'SVD did not converge on a {matrix.shape[0]}x{matrix.shape[1]} matrix')

    u, v = _fix_signs(u, vh.T)
    return SvdFactors(u, np.maximum(s, 0.0), v)


def effective_rank_from_sigma(sigma: np.ndarray, epsilon: float = DEFAULT_EPSILON) -> int:
    """Smallest k whose top-k truncation leaves at most ``epsilon`` relative Frobenius residual.

    Args:
        sigma: Non-increasing singular values
        epsilon: Relative tolerance in (0, 1)

    Returns:
        int: Effective rank k in ``1..len(sigma)``
    """
    if not 0 < epsilon < 1:
        raise InvalidConfig(f'epsilon must lie in (0, 1), got {epsilon}')
    energies = np.asarray(sigma, dtype=np.float64) ** 2
    total = float(energies.sum())
    if total == 0.0:
        raise ZeroMatrix('Effective rank is undefined for a zero matrix')

    # tails[k] = sum of σᵢ² for i > k (1-based), so tails[r] = 0
    tails = np.append(np.cumsum(energies[::-1])[::-1], 0.0)[1:]
    threshold = (epsilon * np.sqrt(total)) ** 2
    return int(np.argmax(tails <= threshold)) + 1


def effective_rank(M, epsilon: float = DEFAULT_EPSILON) -> int:  # pylint: disable=invalid-name
    """Effective rank k_M of a nonzero matrix.

    Args:
        M: Matrix to analyse
        epsilon: Relative Frobenius tolerance in (0, 1)

    Returns:
        int: Smallest k with ``‖M − Π_k M‖_F ≤ ε‖M‖_F``

    Raises:
        ZeroMatrix: If ``M`` is zero
    """
    return effective_rank_from_sigma(thin_svd(M).sigma, epsilon)


def project_onto_topk(M, basis: SvdFactors, k: int) -> np.ndarray:  # pylint: disable=invalid-name
    """Project ``M`` onto the span of the first ``k`` left singular vectors of ``basis``.

    Returns:
        np.ndarray: ``U^{1:k}(U^{1:k})ᵀ M``
    """
    matrix = _as_finite_matrix(M)
    if matrix.shape[0] != basis.U.shape[0]:
        raise DimensionMismatch(f'Matrix has {matrix.shape[0]} rows but the basis has {basis.U.shape[0]}')
    if not 1 <= k <= basis.r:
        raise KOutOfRange(f'k={k} outside 1..{basis.r}')
    u_k = basis.U[:, :k]
    return u_k @ (u_k.T @ matrix)


def residual_against(M, basis_topk: np.ndarray) -> np.ndarray:  # pylint: disable=invalid-name
    """Remove from ``M`` its component in the span of an orthonormal basis.

    Args:
        M: m×n matrix
        basis_topk: m×k matrix with orthonormal columns

    Returns:
        np.ndarray: ``M − B·Bᵀ·M``

    Raises:
        DimensionMismatch: If the row counts differ
        BasisNotOrthonormal: If ``BᵀB`` deviates from the identity by more than 1e-8
    """
    matrix = _as_finite_matrix(M)
    basis = _as_finite_matrix(basis_topk, 'basis')
    if matrix.shape[0] != basis.shape[0]:
        raise DimensionMismatch(f'Matrix has {matrix.shape[0]} rows but the basis has {basis.shape[0]}')
    gram_error = np.abs(basis.T @ basis - np.eye(basis.shape[1])).max(initial=0.0)
    if gram_error > ORTHONORMAL_TOL:
        raise BasisNotOrthonormal(f'Basis columns deviate from orthonormality by {gram_error:.3e}')
    return matrix - basis @ (basis.T @ matrix)


def whiten_columns(A) -> np.ndarray:  # pylint: disable=invalid-name
    """Replace ``A`` by its polar factor, the nearest matrix with orthonormal columns.

    Args:
        A: m×r matrix of full column rank

    Returns:
        np.ndarray: ``P·Qᵀ`` where ``A = P·S·Qᵀ`` is the thin SVD

    Raises:
        RankDeficient: If the smallest singular value is at most 1e-10 times the largest
    """
    matrix = _as_finite_matrix(A)
    if matrix.shape[0] < matrix.shape[1]:
        raise RankDeficient(f'A {matrix.shape[0]}x{matrix.shape[1]} matrix cannot have full column rank')
    factors = thin_svd(matrix)
    if factors.sigma[0] == 0.0 or factors.sigma[-1] <= RANK_TOL * factors.sigma[0]:
        raise RankDeficient(
            f'Column rank deficient: smallest/largest singular value = {factors.sigma[-1]:.3e}/{factors.sigma[0]:.3e}'
        )
    return factors.U @ factors.V.T
