"""Subspace alignment between task matrices and merged matrices."""

import logging
from collections.abc import Sequence

import numpy as np

from src.errors import DimensionMismatch, KOutOfRange, NoTwoDLayers, ZeroSource, ZeroVector
from src.merging.merge_ops import merge_task_arithmetic
from src.models.merge_outcome import MergeOutcome
from src.models.report import AlignmentReport, AlignmentRow
from src.models.task_matrix import TaskMatrixSet
from src.models.tensor_bundle import check_aligned
from src.spectral.core import DEFAULT_EPSILON, SvdFactors, effective_rank_from_sigma, project_onto_topk, thin_svd

logger = logging.getLogger(__name__)


def _deltas(merged: MergeOutcome | TaskMatrixSet) -> TaskMatrixSet:
    return merged if isinstance(merged, TaskMatrixSet) else merged.deltas


def sar_against_basis(delta_src: np.ndarray, basis: SvdFactors, k_m: int) -> float:
    """Fraction of ``delta_src``'s Frobenius norm captured by the top-``k_m`` left singular vectors of ``basis``."""
    source = np.asarray(delta_src, dtype=np.float64)
    norm = np.linalg.norm(source)
    if norm == 0.0:
        raise ZeroSource('SAR is undefined for a zero source matrix')
    return float(np.linalg.norm(project_onto_topk(source, basis, k_m)) / norm)


def sar(delta_src: np.ndarray, delta_trg: np.ndarray, k_m: int) -> float:
    """Subspace alignment ratio of a source matrix with the dominant subspace of a target.

    Args:
        delta_src: Source matrix
        delta_trg: Target matrix whose left singular vectors span the subspace
        k_m: Number of target directions kept

    Returns:
        float: ``‖Π_{k_m} Δ_src‖_F / ‖Δ_src‖_F`` in [0, 1]

    Raises:
        ZeroSource: If ``delta_src`` is zero
        KOutOfRange: If ``k_m`` is outside ``1..r`` of the target
    """
    source = np.asarray(delta_src, dtype=np.float64)
    target = np.asarray(delta_trg, dtype=np.float64)
    if source.shape[0] != target.shape[0]:
        raise DimensionMismatch(f'Source has {source.shape[0]} rows, target has {target.shape[0]}')
    if not np.any(source):
        raise ZeroSource('SAR is undefined for a zero source matrix')
    if not 1 <= k_m <= min(target.shape):
        raise KOutOfRange(f'k_M={k_m} outside 1..{min(target.shape)}')
    return sar_against_basis(source, thin_svd(target), k_m)


def alignment_rows(
    task: TaskMatrixSet, merged: MergeOutcome | TaskMatrixSet, epsilon: float = DEFAULT_EPSILON
) -> tuple[list[AlignmentRow], dict[str, int]]:
    """Per-layer SAR of one task against a merged model, with k_M chosen per merged layer.

    Layers where the merged or the task matrix is zero are skipped.

    Returns:
        tuple: Alignment rows (one per used 2-D layer) and the k_M used for each layer
    """
    target = _deltas(merged)
    check_aligned(
        {name: value.shape for name, value in target.matrices.items()},
        {name: value.shape for name, value in task.matrices.items()},
        'sar_avg',
    )

    rows, ranks = [], {}
    for name, merged_layer in target.matrices.items():
        task_layer = task.matrices[name]
        if not np.any(merged_layer) or not np.any(task_layer):
            logger.warning('Skipping layer %s for task %r: zero matrix', name, task.task_label)
            continue
        basis = thin_svd(merged_layer)
        k_m = effective_rank_from_sigma(basis.sigma, epsilon)
        ranks[name] = k_m
        rows.append(AlignmentRow(task=task.task_label, layer=name, sar=sar_against_basis(task_layer, basis, k_m)))
    return rows, ranks


def sar_avg(task: TaskMatrixSet, merged: MergeOutcome | TaskMatrixSet, epsilon: float = DEFAULT_EPSILON) -> float:
    """Unweighted mean of per-layer SAR over the 2-D layers.

    Raises:
        NoTwoDLayers: If no usable 2-D layer exists
    """
    rows, _ = alignment_rows(task, merged, epsilon)
    if not rows:
        raise NoTwoDLayers(f'Task {task.task_label!r} shares no nonzero 2-D layer with the merged model')
    return float(np.mean([row.sar for row in rows]))


def alignment_report(
    tasks: Sequence[TaskMatrixSet], merged: MergeOutcome | TaskMatrixSet, epsilon: float = DEFAULT_EPSILON
) -> AlignmentReport:
    """SAR per task and layer plus one ``avg`` row per task."""
    rows, ranks = [], {}
    for task in tasks:
        task_rows, task_ranks = alignment_rows(task, merged, epsilon)
        if not task_rows:
            raise NoTwoDLayers(f'Task {task.task_label!r} shares no nonzero 2-D layer with the merged model')
        rows.extend(task_rows)
        rows.append(AlignmentRow(task=task.task_label, layer='avg', sar=float(np.mean([r.sar for r in task_rows]))))
        ranks.update(task_ranks)
    return AlignmentReport(rows=rows, epsilon=epsilon, k_m=ranks)


def pairwise_alignment(tasks: Sequence[TaskMatrixSet], epsilon: float = DEFAULT_EPSILON) -> list[dict]:
    """SAR_avg between every ordered pair of tasks, using the Task Arithmetic effective rank per layer.

    Returns:
        list: Rows ``{'task_src', 'task_trg', 'sar_avg'}`` in task order
    """
    ta_deltas = merge_task_arithmetic(tasks).deltas
    k_ta = {}
    for name, layer in ta_deltas.matrices.items():
        if np.any(layer):
            k_ta[name] = effective_rank_from_sigma(thin_svd(layer).sigma, epsilon)

    bases = [{name: thin_svd(task.matrices[name]) for name in k_ta} for task in tasks]
    rows = []
    for source in tasks:
        for target, target_bases in zip(tasks, bases, strict=True):
            ratios = []
            for name, k in k_ta.items():
                if not np.any(source.matrices[name]) or not np.any(target.matrices[name]):
                    continue
                ratios.append(sar_against_basis(source.matrices[name], target_bases[name], k))
            if not ratios:
                raise NoTwoDLayers(f'Tasks {source.task_label!r} and {target.task_label!r} share no usable layer')
            rows.append(
                {'task_src': source.task_label, 'task_trg': target.task_label, 'sar_avg': float(np.mean(ratios))}
            )
    return rows


def vec_cosine(delta_a: TaskMatrixSet, delta_b: TaskMatrixSet) -> float:
    """Cosine similarity of two flattened task vectors.

    Raises:
        ZeroVector: If either task vector is zero
    """
    check_aligned(delta_a.shapes(), delta_b.shapes(), 'vec_cosine')
    vec_a = delta_a.flatten()
    vec_b = np.concatenate([delta_b[name].ravel() for name in delta_a.names])
    norm_a, norm_b = np.linalg.norm(vec_a), np.linalg.norm(vec_b)
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector('Cosine similarity is undefined for a zero task vector')
    return float(np.dot(vec_a, vec_b) / (norm_a * norm_b))

