"""Tests for the merging operators and the method registry."""

import numpy as np
import pytest

from src.errors import EmptyTaskList, InvalidConfig, NameSetMismatch, NoConvergence, RankDeficient
from src.merging.base_merger import sum_over_tasks
from src.merging.merge_ops import (
    build_merger,
    flatten_task,
    get_available_methods,
    get_merger_class,
    merge_average,
    merge_iso_c,
    merge_iso_cts,
    merge_task_arithmetic,
)
from src.merging.methods.iso_c import IsoCMerger
from src.merging.methods.iso_cts import IsoCTSMerger, round_half_away, subspace_budget, task_specific_directions
from src.models.merge_outcome import LayerFlag, MergeMethod
from src.spectral.core import thin_svd
from src.synthetic.oracles import oracle_iso_c
from tests.helpers import controlled_matrix, make_task, random_orthonormal


@pytest.fixture
def diagonal_tasks():
    """Two tasks with complementary diagonal updates and a bias."""
    return [
        make_task('a', {'w': np.diag([2.0, 0.0])}, {'b': [1.0, 0.0]}),
        make_task('b', {'w': np.diag([0.0, 1.0])}, {'b': [0.0, 1.0]}),
    ]


def _random_tasks(rng, num_tasks, m, n):
    return [
        make_task(f't{t}', {'w': controlled_matrix(rng, m, n)}, {'b': rng.normal(size=m)}) for t in range(num_tasks)
    ]


def test_registry_lists_every_method():
    """Test the registry names and lookup."""
    assert get_available_methods() == ['avg', 'ta', 'iso-c', 'iso-cts']
    assert get_merger_class('iso-c') is IsoCMerger
    assert isinstance(build_merger('iso-cts', common_fraction=0.5), IsoCTSMerger)
    assert build_merger(MergeMethod.ISO_CTS, common_fraction=0.5).common_fraction == 0.5


def test_registry_rejects_unknown_methods():
    """Test that an unknown method lists the available ones."""
    with pytest.raises(InvalidConfig, match='iso-cts'):
        get_merger_class('ties')


def test_merging_requires_tasks():
    """Test the empty task list error."""
    with pytest.raises(EmptyTaskList):
        merge_task_arithmetic([])


def test_merging_requires_aligned_tasks():
    """Test that tasks with different layers cannot be merged."""
    with pytest.raises(NameSetMismatch):
        merge_average([make_task('a', {'w': [[1.0]]}), make_task('b', {'v': [[1.0]]})])


def test_average_merge():
    """Test the mean, the single-task identity and cancellation."""
    halved = merge_average([make_task('a', {'w': [[2.0]]}), make_task('b', {'w': [[0.0]]})])
    np.testing.assert_array_equal(halved.deltas['w'], [[1.0]])
    np.testing.assert_array_equal(merge_average([make_task('a', {'w': [[2.0, 3.0]]})]).deltas['w'], [[2.0, 3.0]])
    cancelled = merge_average([make_task('a', {'w': [[1.5, -2.0]]}), make_task('b', {'w': [[-1.5, 2.0]]})])
    assert not np.any(cancelled.deltas['w'])


def test_task_arithmetic_sums_matrices_and_averages_vectors(diagonal_tasks):
    """Test that TA sums task matrices and averages 1-D deltas."""
    outcome = merge_task_arithmetic(diagonal_tasks)

    np.testing.assert_array_equal(outcome.deltas['w'], np.diag([2.0, 1.0]))
    np.testing.assert_array_equal(outcome.deltas['b'], [0.5, 0.5])
    assert outcome.method is MergeMethod.TA
    assert outcome.deltas.task_label == 'merged-ta'


def test_order_invariance_is_exact(rng):
    """Test that AVG, TA and Iso-C give identical bits for permuted task orders."""
    tasks = _random_tasks(rng, 5, 4, 3)
    permuted = [tasks[i] for i in (3, 0, 4, 2, 1)]

    for merge in (merge_average, merge_task_arithmetic, merge_iso_c):
        assert merge(tasks).deltas['w'].tobytes() == merge(permuted).deltas['w'].tobytes()
        assert merge(tasks).deltas['b'].tobytes() == merge(permuted).deltas['b'].tobytes()


def test_sum_over_tasks_is_elementwise():
    """Test the canonical reduction on a small stack."""
    np.testing.assert_array_equal(sum_over_tasks([np.array([1.0, -2.0]), np.array([3.0, 4.0])]), [4.0, 2.0])


def test_iso_c_flattens_the_diagonal_example(diagonal_tasks):
    """Test Δ_TA = diag(2, 1) → σ̄ = 1.5 → diag(1.5, 1.5)."""
    outcome = merge_iso_c(diagonal_tasks)

    np.testing.assert_allclose(outcome.deltas['w'], np.diag([1.5, 1.5]), atol=1e-12)
    assert outcome.per_layer_meta['w'].sigma_bar == pytest.approx(1.5)
    assert outcome.per_layer_meta['w'].k_common == 2
    np.testing.assert_array_equal(outcome.deltas['b'], [0.5, 0.5])


def test_iso_c_keeps_an_isotropic_task_fixed(rng):
    """Test that an already isotropic Δ = c·Q is returned unchanged."""
    delta = 0.7 * random_orthonormal(rng, 4, 4)

    outcome = merge_iso_c([make_task('a', {'w': delta})])

    np.testing.assert_allclose(outcome.deltas['w'], delta, atol=1e-12)


def test_iso_c_is_positively_homogeneous(rng):
    """Test that scaling every input by c scales the output by c."""
    tasks = _random_tasks(rng, 3, 4, 4)
    scaled = [task.scaled(3.0) for task in tasks]

    np.testing.assert_allclose(merge_iso_c(scaled).deltas['w'], 3.0 * merge_iso_c(tasks).deltas['w'], atol=1e-10)


def test_iso_c_flags_zero_sum_layers():
    """Test that cancelling tasks produce a zero layer flagged zero_sum."""
    outcome = merge_iso_c([make_task('a', {'w': [[1.0, 2.0]]}), make_task('b', {'w': [[-1.0, -2.0]]})])

    assert not np.any(outcome.deltas['w'])
    assert outcome.flagged_layers(LayerFlag.ZERO_SUM) == ['w']


def test_iso_c_matches_the_eigendecomposition_oracle(rng):
    """Test Iso-C against the independent eigendecomposition route on 100 random 3×3 inputs."""
    for _ in range(100):
        matrices = [controlled_matrix(rng, 3, 3) for _ in range(3)]
        merged = merge_iso_c([make_task(str(i), {'w': m}) for i, m in enumerate(matrices)]).deltas['w']

        expected = oracle_iso_c(matrices)

        assert np.linalg.norm(merged - expected) / np.linalg.norm(expected) <= 1e-7


def test_iso_c_output_is_isotropic_on_random_jobs(rng):
    """Test that every singular value of an Iso-C layer equals σ̄ on 50 random jobs up to 64×64 with T ≤ 8."""
    for _ in range(50):
        m, n = rng.integers(1, 65, size=2)
        tasks = [make_task(str(t), {'w': rng.normal(size=(m, n))}) for t in range(rng.integers(1, 9))]

        outcome = merge_iso_c(tasks)

        sigma = np.linalg.svd(outcome.deltas['w'], compute_uv=False)
        assert sigma.shape == (min(m, n),)
        np.testing.assert_allclose(sigma, outcome.per_layer_meta['w'].sigma_bar, rtol=1e-9)


def test_flatten_task_is_single_task_iso_c(rng):
    """Test that flattening one task equals Iso-C with T=1."""
    task = make_task('a', {'w': controlled_matrix(rng, 5, 3)})

    np.testing.assert_array_equal(flatten_task(task).deltas['w'], merge_iso_c([task]).deltas['w'])


def test_round_half_away():
    """Test rounding of halves away from zero."""
    assert [round_half_away(v) for v in (0.5, 1.5, 2.5, 2.4, -0.5)] == [1, 2, 3, 2, -1]


@pytest.mark.parametrize(
    ('r', 'num_tasks', 'fraction', 'expected'),
    [
        (3, 2, 1 / 3, (1, 1)),
        (12, 8, 0.8, (12, 0)),
        (12, 2, 0.5, (6, 3)),
        (10, 3, 0.5, (7, 1)),
        (4, 2, 0.01, (2, 1)),
        (4, 1, 1.0, (4, 0)),
    ],
)
def test_subspace_budget(r, num_tasks, fraction, expected):
    """Test the split of r directions between common and task-specific blocks."""
    k, s = subspace_budget(r, num_tasks, fraction)

    assert (k, s) == expected
    assert k + num_tasks * s == r


def test_iso_cts_sigma_bar_arithmetic():
    """Test σ̄ = (3 + 1 + 2)/3 with one common and two task-specific directions."""
    tasks = [
        make_task('a', {'w': np.diag([1.5, 1.0, 0.0])}),
        make_task('b', {'w': np.diag([1.5, 0.0, 2.0])}),
    ]

    outcome = merge_iso_cts(tasks, common_fraction=1 / 3)
    meta = outcome.per_layer_meta['w']

    assert (meta.k_common, meta.s_per_task, meta.r) == (1, 1, 3)
    assert meta.sigma_bar == pytest.approx(2.0)
    np.testing.assert_allclose(outcome.deltas['w'], 2.0 * np.eye(3), atol=1e-10)


def test_iso_cts_with_full_common_fraction_equals_iso_c(rng):
    """Test that k/r = 1 reproduces Iso-C bit for bit."""
    tasks = _random_tasks(rng, 3, 5, 4)

    iso_cts = merge_iso_cts(tasks, common_fraction=1.0)

    assert iso_cts.deltas['w'].tobytes() == merge_iso_c(tasks).deltas['w'].tobytes()
    assert iso_cts.flagged_layers(LayerFlag.DEGENERATE_TO_ISO_C) == ['w']


def test_iso_cts_is_invariant_to_task_order(rng):
    """Test order invariance on random non-degenerate 8×8 inputs with T=3."""
    tasks = _random_tasks(rng, 3, 8, 8)
    permuted = [tasks[2], tasks[0], tasks[1]]

    first = merge_iso_cts(tasks, common_fraction=0.5).deltas['w']
    second = merge_iso_cts(permuted, common_fraction=0.5).deltas['w']

    assert np.linalg.norm(first - second) / np.linalg.norm(first) <= 1e-6


def test_iso_cts_produces_an_isotropic_layer(rng):
    """Test that all singular values of an Iso-CTS layer equal σ̄."""
    outcome = merge_iso_cts(_random_tasks(rng, 2, 6, 6), common_fraction=0.5)

    sigma = np.linalg.svd(outcome.deltas['w'], compute_uv=False)

    np.testing.assert_allclose(sigma, outcome.per_layer_meta['w'].sigma_bar, rtol=1e-10)


def test_iso_cts_falls_back_when_whitening_fails():
    """Test that identical task-specific directions trigger the Iso-C fallback."""
    delta = np.diag([3.0, 1.0, 0.0, 0.0])
    tasks = [make_task('a', {'w': delta}), make_task('b', {'w': delta})]

    outcome = merge_iso_cts(tasks, common_fraction=0.5)

    assert outcome.flagged_layers(LayerFlag.WHITENING_FALLBACK) == ['w']
    np.testing.assert_allclose(outcome.deltas['w'], merge_iso_c(tasks).deltas['w'], atol=1e-12)


def test_iso_cts_rejects_invalid_fractions():
    """Test the common fraction range."""
    with pytest.raises(InvalidConfig):
        IsoCTSMerger(common_fraction=0.0)
    with pytest.raises(InvalidConfig):
        IsoCTSMerger(common_fraction=1.5)


def test_threaded_merge_matches_sequential(rng):
    """Test that layer-parallel merging returns identical bits."""
    tasks = [
        make_task(f't{t}', {f'w{i}': controlled_matrix(rng, 5, 4) for i in range(4)}, {'b': rng.normal(size=3)})
        for t in range(3)
    ]

    sequential = merge_iso_cts(tasks, common_fraction=0.5, threads=1)
    threaded = merge_iso_cts(tasks, common_fraction=0.5, threads=4)

    assert list(threaded.deltas.matrices) == ['w0', 'w1', 'w2', 'w3']
    for name in sequential.deltas.names:
        assert threaded.deltas[name].tobytes() == sequential.deltas[name].tobytes()


def test_numerical_failures_name_the_layer(mocker):
    """Test that a numerical failure inside a layer reports the layer name."""
    mocker.patch('src.merging.methods.iso_c.thin_svd', side_effect=NoConvergence('SVD did not converge'))

    with pytest.raises(NoConvergence, match='attn.weight'):
        merge_iso_c([make_task('a', {'attn.weight': [[1.0, 2.0]]})])


def test_iso_cts_falls_back_when_residuals_vanish(rng):
    """Test that low-rank tasks covered by the common subspace take the Iso-C fallback."""
    tasks = [make_task(str(t), {'w': np.outer(rng.normal(size=6), rng.normal(size=6))}) for t in range(3)]

    outcome = merge_iso_cts(tasks, common_fraction=0.2)

    assert outcome.flagged_layers(LayerFlag.WHITENING_FALLBACK) == ['w']
    np.testing.assert_allclose(outcome.deltas['w'], merge_iso_c(tasks).deltas['w'], atol=1e-12)


def test_task_specific_directions_are_orthogonal_to_the_common_subspace(rng):
    """Test (U^{1:k})ᵀ·Ū_t ≈ 0 for every task before whitening."""
    matrices = [controlled_matrix(rng, 8, 8) for _ in range(3)]
    k, s = subspace_budget(8, 3, 0.5)
    common = thin_svd(sum_over_tasks(matrices)).top(k)

    for delta in matrices:
        specific = task_specific_directions(delta, common, s)
        assert specific.U.shape == (8, s)
        assert np.abs(common.U.T @ specific.U).max() <= 1e-8


def test_task_specific_directions_reject_an_empty_residual(rng):
    """Test that a task lying inside the common subspace has no task-specific directions."""
    common = thin_svd(controlled_matrix(rng, 5, 5))

    inside = (common.U[:, :2] * common.sigma[:2]) @ common.V[:, :2].T

    with pytest.raises(RankDeficient):
        task_specific_directions(inside, common.top(3), 1)


def test_iso_cts_bases_are_orthonormal(rng):
    """Test that a square Iso-CTS layer divided by σ̄ is an orthogonal matrix."""
    outcome = merge_iso_cts(_random_tasks(rng, 3, 8, 8), common_fraction=0.5)
    meta = outcome.per_layer_meta['w']
    assert meta.s_per_task == 1
    assert not meta.flags

    unit = outcome.deltas['w'] / meta.sigma_bar

    np.testing.assert_allclose(unit.T @ unit, np.eye(8), atol=1e-8)
    np.testing.assert_allclose(unit @ unit.T, np.eye(8), atol=1e-8)


@pytest.mark.parametrize('fraction', [0.25, 0.5, 1.0])
def test_iso_cts_with_one_task_equals_iso_c(rng, fraction):
    """Test that a single task gives Iso-C of that task for every common fraction."""
    task = make_task('a', {'w': controlled_matrix(rng, 6, 4)})

    outcome = merge_iso_cts([task], common_fraction=fraction)

    np.testing.assert_allclose(outcome.deltas['w'], merge_iso_c([task]).deltas['w'], atol=1e-10)
