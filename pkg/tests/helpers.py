"""Matrix builders shared by the test modules."""

import numpy as np

from src.models.task_matrix import TaskMatrixSet


def random_orthonormal(rng, m, k):
    """Return an m×k matrix with orthonormal columns."""
    q, _ = np.linalg.qr(rng.normal(size=(m, k)))
    return q


def controlled_matrix(rng, m, n, low=0.5, high=2.0):
    """Random m×n matrix whose singular values lie in [low, high]."""
    r = min(m, n)
    sigma = np.sort(rng.uniform(low, high, size=r))[::-1]
    return (random_orthonormal(rng, m, r) * sigma) @ random_orthonormal(rng, n, r).T


def make_task(label, matrices=None, vectors=None):
    """Build a TaskMatrixSet from plain lists."""
    return TaskMatrixSet(
        matrices={name: np.array(value, dtype=np.float64) for name, value in (matrices or {}).items()},
        vectors={name: np.array(value, dtype=np.float64) for name, value in (vectors or {}).items()},
        task_label=label,
    )
