"""Shared fixtures for the numerical tests."""

import numpy as np
import pytest


@pytest.fixture
def rng():
    """Seeded random generator."""
    return np.random.default_rng(1234)
