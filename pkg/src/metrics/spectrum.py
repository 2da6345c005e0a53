"""Spectrum manipulations of Task Arithmetic layers and spectrum reports."""

import re

import numpy as np

from src.errors import InvalidConfig, KOutOfRange, LayerSelectorUnmatched
from src.models.report import SpectrumReport, SpectrumRow
from src.spectral.core import thin_svd


def interpolate_spectrum(ta_layer: np.ndarray, beta: float) -> np.ndarray:
    """Blend a Task Arithmetic spectrum with its isotropic (Iso-C) counterpart.

    Args:
        ta_layer: Summed task matrix Δ_TA
        beta: 0 keeps Δ_TA, 1 gives the Iso-C layer

    Returns:
        np.ndarray: ``U·diag((1−β)σ + β·σ̄)·Vᵀ``
    """
    if not 0 <= beta <= 1:
        raise InvalidConfig(f'beta must lie in [0, 1], got {beta}')
    factors = thin_svd(ta_layer)
    sigma_beta = (1 - beta) * factors.sigma + beta * factors.sigma.mean()
    return (factors.U * sigma_beta) @ factors.V.T


def truncate_isotropic(ta_layer: np.ndarray, k: int) -> np.ndarray:
    """Keep the ``k`` leading directions of the flattened spectrum.

    Args:
        ta_layer: Summed task matrix Δ_TA
        k: Number of directions kept

    Returns:
        np.ndarray: ``σ̄·U^{1:k}·(V^{1:k})ᵀ`` with σ̄ the mean over all r singular values
    """
    factors = thin_svd(ta_layer)
    if not 1 <= k <= factors.r:
        raise KOutOfRange(f'k={k} outside 1..{factors.r}')
    return factors.sigma.mean() * (factors.U[:, :k] @ factors.V[:, :k].T)


def select_layers(names, selector: str | None) -> list[str]:
    """Filter layer names by a regular expression (all names when ``selector`` is empty).

    Raises:
        InvalidConfig: If ``selector`` is not a valid regular expression
        LayerSelectorUnmatched: If nothing matches
    """
    if not selector:
        selected = list(names)
    else:
        try:
            pattern = re.compile(selector)
        except re.error as err:
            raise InvalidConfig(f'Layer selector {selector!r} is not a valid regular expression: {err}') from err
        selected = [name for name in names if pattern.search(name)]
    if not selected:
        raise LayerSelectorUnmatched(f'Layer selector {selector!r} matches no 2-D layer')
    return selected


def spectrum_report(layers: dict[str, np.ndarray], method: str = 'raw', beta: float | None = None) -> SpectrumReport:
    """Singular values of every layer, in layer order then index order (1-based)."""
    rows = []
    for name, layer in layers.items():
        for index, sigma in enumerate(thin_svd(layer).sigma, start=1):
            rows.append(SpectrumRow(layer=name, index=index, sigma=float(sigma)))
    return SpectrumReport(rows=rows, method=method, beta=beta)
