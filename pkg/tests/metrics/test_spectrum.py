"""Tests for spectrum interpolation, truncation and spectrum reports."""

import numpy as np
import pytest

from src.errors import InvalidConfig, KOutOfRange, LayerSelectorUnmatched
from src.merging.methods.iso_c import isotropic_layer
from src.metrics.spectrum import interpolate_spectrum, select_layers, spectrum_report, truncate_isotropic
from tests.helpers import controlled_matrix


@pytest.fixture
def ta_layer(rng):
    """Random 6×4 layer with a spread spectrum."""
    return controlled_matrix(rng, 6, 4, 0.2, 5.0)


def test_interpolation_endpoints(ta_layer):
    """Test that β=0 reconstructs Δ_TA and β=1 gives the Iso-C layer."""
    iso_c, _ = isotropic_layer(ta_layer)

    start = interpolate_spectrum(ta_layer, 0.0)
    end = interpolate_spectrum(ta_layer, 1.0)

    assert np.linalg.norm(start - ta_layer) / np.linalg.norm(ta_layer) <= 1e-8
    np.testing.assert_allclose(end, iso_c, atol=1e-8)


def test_interpolation_midpoint_spectrum():
    """Test σ_TA = (4, 0) at β=0.5 → (3, 1)."""
    sigma = np.linalg.svd(interpolate_spectrum(np.diag([4.0, 0.0]), 0.5), compute_uv=False)

    np.testing.assert_allclose(sigma, [3.0, 1.0], atol=1e-12)


def test_interpolation_is_affine_in_beta(ta_layer):
    """Test output(β) = (1−β)·output(0) + β·output(1)."""
    start, end = interpolate_spectrum(ta_layer, 0.0), interpolate_spectrum(ta_layer, 1.0)

    for beta in (0.25, 0.5, 0.9):
        np.testing.assert_allclose(interpolate_spectrum(ta_layer, beta), (1 - beta) * start + beta * end, atol=1e-9)


def test_interpolation_rejects_beta_outside_unit_interval():
    """Test the β range."""
    with pytest.raises(InvalidConfig):
        interpolate_spectrum(np.eye(2), 1.5)


def test_truncation(ta_layer):
    """Test k=r, the diag(2, 0) example and the output rank."""
    np.testing.assert_allclose(truncate_isotropic(ta_layer, 4), isotropic_layer(ta_layer)[0], atol=1e-12)
    np.testing.assert_allclose(truncate_isotropic(np.diag([2.0, 0.0]), 1), np.diag([1.0, 0.0]), atol=1e-12)
    for k in (1, 2, 3):
        assert np.linalg.matrix_rank(truncate_isotropic(ta_layer, k)) == k


def test_truncation_rejects_k_out_of_range(ta_layer):
    """Test the k range."""
    with pytest.raises(KOutOfRange):
        truncate_isotropic(ta_layer, 5)
    with pytest.raises(KOutOfRange):
        truncate_isotropic(ta_layer, 0)


def test_select_layers():
    """Test regex selection, the empty selector and unmatched selectors."""
    names = ['visual.attn.weight', 'visual.mlp.weight', 'head.weight']

    assert select_layers(names, 'mlp|head') == ['visual.mlp.weight', 'head.weight']
    assert select_layers(names, None) == names
    with pytest.raises(LayerSelectorUnmatched):
        select_layers(names, 'conv')
    with pytest.raises(InvalidConfig, match=r"'\["):
        select_layers(names, '[')


def test_spectrum_report_layout():
    """Test row order, 1-based indices and the recorded method."""
    report = spectrum_report({'b': np.diag([1.0, 3.0]), 'a': np.ones((1, 2))}, method='interpolated', beta=0.5)

    assert [(row.layer, row.index) for row in report.rows] == [('b', 1), ('b', 2), ('a', 1)]
    assert report.layer_sigmas('b') == pytest.approx([3.0, 1.0])
    assert report.rows[2].sigma == pytest.approx(np.sqrt(2))
    assert (report.method, report.beta) == ('interpolated', 0.5)
