"""Seeded synthetic multi-task suites with tunable subspace overlap."""

import logging
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, Field

from src.errors import InvalidDims
from src.merging.methods.iso_cts import round_half_away
from src.models.task_matrix import TaskMatrixSet
from src.models.tensor_bundle import TensorBundle, bundle_delta
from src.synthetic.network import LEARNING_RATE, TRAINING_STEPS, DataSplit, init_network, train

logger = logging.getLogger(__name__)

CLASS_SEPARATION = 3.0
SPLITS = ('train', 'val', 'test')


class OverlapProfile(StrEnum):
    """How the overlap knob is spread over tasks."""

    UNIFORM = 'uniform'
    GRADED = 'graded'


class SuiteDims(BaseModel):
    """Sizes of a synthetic suite."""

    input_dim: int = Field(default=64, ge=1)
    hidden_dim: int = Field(default=48, ge=1)
    num_classes: int = Field(default=4, ge=2)
    train_size: int = Field(default=64, ge=1)
    val_size: int = Field(default=32, ge=1)
    test_size: int = Field(default=64, ge=1)


class TaskData:
    """Train, validation and test splits of one task."""

    def __init__(self, train: DataSplit, val: DataSplit, test: DataSplit):
        """Initialize the task data.

        Args:
            train: Split used for fine-tuning
            val: Split used for α selection
            test: Split used for reported accuracies
        """
        self.train = train
        self.val = val
        self.test = test

    def split(self, name: str) -> DataSplit:
        """Return the split called ``name``."""
        return getattr(self, name)


class SyntheticSuite:
    """Pre-trained model, fine-tuned models and datasets of a synthetic multi-task setting."""

    def __init__(
        self,
        seed: int,
        dims: SuiteDims,
        overlap: float,
        noise: float,
        base: TensorBundle,
        models: list[TensorBundle],
        datasets: list[TaskData],
        overlap_profile: OverlapProfile = OverlapProfile.UNIFORM,
    ):  # pylint: disable=too-many-arguments,too-many-positional-arguments
        """Initialize the suite.

        Args:
            seed: Seed the suite was generated from
            dims: Sizes used for networks and splits
            overlap: Fraction of class directions drawn from the shared pool
            noise: Standard deviation of points around their class mean
            base: Pre-trained parameters θ_0
            models: Fine-tuned parameters θ_1..θ_T
            datasets: Splits of each task, aligned with ``models``
            overlap_profile: How ``overlap`` is spread over tasks
        """
        self.seed = seed
        self.dims = dims
        self.overlap = overlap
        self.noise = noise
        self.base = base
        self.models = models
        self.datasets = datasets
        self.overlap_profile = overlap_profile

    @property
    def num_tasks(self) -> int:
        """Number of fine-tuned models."""
        return len(self.models)

    @property
    def task_labels(self) -> list[str]:
        """Task labels in suite order."""
        return [model.meta['task'] for model in self.models]

    def task_deltas(self) -> list[TaskMatrixSet]:
        """Task matrices Δ_t = θ_t − θ_0 of every task."""
        return [bundle_delta(model, self.base) for model in self.models]

    def settings(self) -> dict:
        """Generation settings, as written next to an exported suite."""
        return {
            'seed': self.seed,
            'num_tasks': self.num_tasks,
            'dims': self.dims.model_dump(),
            'overlap': self.overlap,
            'noise': self.noise,
            'overlap_profile': self.overlap_profile.value,
            'training': {'steps': TRAINING_STEPS, 'learning_rate': LEARNING_RATE, 'optimizer': 'full-batch gd'},
        }


def task_overlaps(num_tasks: int, overlap: float, profile: OverlapProfile) -> list[float]:
    """Overlap fraction used by each task."""
    if profile is OverlapProfile.GRADED and num_tasks > 1:
        return [overlap * t / (num_tasks - 1) for t in range(num_tasks)]
    return [overlap] * num_tasks


def _unit_vectors(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    vectors = rng.normal(size=(count, dim))
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def _sample_split(rng: np.random.Generator, means: np.ndarray, noise: float, size: int) -> DataSplit:
    num_classes, dim = means.shape
    labels = rng.permutation(np.arange(size) % num_classes)
    features = means[labels] + noise * rng.normal(size=(size, dim))
    return DataSplit(features, labels)


def generate_suite(
    seed: int,
    num_tasks: int,
    dims: SuiteDims | None = None,
    overlap: float = 0.5,
    noise: float = 0.5,
    overlap_profile: OverlapProfile | str = OverlapProfile.UNIFORM,
) -> SyntheticSuite:  # pylint: disable=too-many-arguments,too-many-positional-arguments,too-many-locals
    """Generate a deterministic synthetic suite.

    Each task classifies Gaussian clusters whose means point along class directions. A
    fraction ``overlap`` of every task's class directions comes from a pool shared by all
    tasks; the rest are private to the task. Fine-tuning from θ_0 therefore produces
    task matrices whose dominant directions overlap in a controlled way.

    Args:
        seed: Seed of the single random generator used for everything
        num_tasks: Number of tasks T
        dims: Network and split sizes
        overlap: Shared-direction fraction in [0, 1]
        noise: Cluster standard deviation in [0, 1]
        overlap_profile: ``uniform`` or ``graded`` (task t uses ``overlap·t/(T−1)``)

    Returns:
        SyntheticSuite: θ_0, θ_1..θ_T and the per-task splits

    Raises:
        InvalidDims: If T < 1 or a knob is outside [0, 1]
    """
    dims = dims or SuiteDims()
    if num_tasks < 1:
        raise InvalidDims(f'num_tasks must be at least 1, got {num_tasks}')
    if not 0 <= overlap <= 1:
        raise InvalidDims(f'overlap must lie in [0, 1], got {overlap}')
    if not 0 <= noise <= 1:
        raise InvalidDims(f'noise must lie in [0, 1], got {noise}')
    profile = OverlapProfile(overlap_profile)

    rng = np.random.default_rng(seed)
    base = init_network(rng, dims.input_dim, dims.hidden_dim, dims.num_classes)
    base = TensorBundle(base.items(), meta={'role': 'base', 'seed': str(seed)})
    shared_pool = _unit_vectors(rng, dims.num_classes, dims.input_dim)

    models, datasets = [], []
    for t, task_overlap in enumerate(task_overlaps(num_tasks, overlap, profile)):
        n_shared = round_half_away(task_overlap * dims.num_classes)
        private = _unit_vectors(rng, dims.num_classes, dims.input_dim)
        directions = np.vstack([shared_pool[:n_shared], private[n_shared:]])
        means = CLASS_SEPARATION * directions

        data = TaskData(*(_sample_split(rng, means, noise, getattr(dims, f'{name}_size')) for name in SPLITS))
        label = f'task_{t:02d}'
        tuned = train(base, data.train)
        tuned = TensorBundle(
            tuned.items(),
            meta={'task': label, 'seed': str(seed), 'steps': str(TRAINING_STEPS), 'learning_rate': str(LEARNING_RATE)},
        )

        unchanged = [name for name, value in tuned.items() if value.ndim == 2 and np.array_equal(value, base[name])]
        if unchanged:
            raise InvalidDims(f'Training left layers {unchanged} of {label} unchanged; increase the split sizes')

        models.append(tuned)
        datasets.append(data)
        logger.debug('Generated %s with %d shared class directions', label, n_shared)

    logger.info('Generated suite: seed=%d T=%d overlap=%.3g (%s) noise=%.3g', seed, num_tasks, overlap, profile, noise)
    return SyntheticSuite(seed, dims, overlap, noise, base, models, datasets, overlap_profile=profile)
