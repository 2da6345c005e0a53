"""Job configuration assembled from command-line arguments and the environment."""

import os
from enum import StrEnum
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field, ValidationError, field_validator

from src.errors import InvalidConfig
from src.merging.alpha_sweep import DEFAULT_ALPHA_GRID
from src.merging.methods.iso_cts import DEFAULT_COMMON_FRACTION
from src.models.merge_outcome import MergeMethod
from src.spectral.core import DEFAULT_EPSILON
from src.synthetic.suite import OverlapProfile, SuiteDims

THREADS_ENV = 'ISO_MERGE_THREADS'
LOG_LEVEL_ENV = 'ISO_MERGE_LOG_LEVEL'
DEFAULT_LOG_LEVEL = 'WARNING'


class Command(StrEnum):
    """Subcommands of the ``iso-merge`` tool."""

    MERGE = 'merge'
    ANALYZE = 'analyze'
    SPECTRUM = 'spectrum'
    SYNTH = 'synth'
    SWEEP_ALPHA = 'sweep-alpha'
    STUDY = 'study'


class StudyKind(StrEnum):
    """Studies available through ``iso-merge study``."""

    FLATTEN = 'flatten'
    PAIRWISE = 'pairwise'
    TRUNCATION = 'truncation'
    FRACTION = 'fraction'
    INTERPOLATION = 'interpolation'


def default_threads() -> int:
    """Number of available cores."""
    return os.cpu_count() or 1


def resolve_threads(flag: int | None) -> int:
    """Thread count: ``ISO_MERGE_THREADS`` wins over the flag, which wins over the core count.

    Raises:
        InvalidConfig: If the environment value is not a positive integer
    """
    env_value = os.environ.get(THREADS_ENV)
    if env_value:
        try:
            threads = int(env_value)
        except ValueError as err:
            raise InvalidConfig(f'{THREADS_ENV} must be a positive integer, got {env_value!r}') from err
        if threads < 1:
            raise InvalidConfig(f'{THREADS_ENV} must be a positive integer, got {env_value!r}')
        return threads
    return flag if flag is not None else default_threads()


def resolve_log_level(flag: str | None) -> str:
    """Log level: the flag, else ``ISO_MERGE_LOG_LEVEL``, else WARNING."""
    return (flag or os.environ.get(LOG_LEVEL_ENV) or DEFAULT_LOG_LEVEL).upper()


class JobConfig(BaseModel):
    """Validated options of one command invocation."""

    command: Command
    method: MergeMethod | None = None
    methods: list[MergeMethod] = Field(default_factory=lambda: list(MergeMethod))
    kind: StudyKind | None = None

    base: Path | None = None
    tasks: list[Path] = []
    merged: Path | None = None
    input: Path | None = None
    suite: Path | None = None
    accuracies: Path | None = None
    out: Path | None = None
    out_dir: Path = Path('.')
    layers: str | None = None

    alpha: float | None = Field(default=None, gt=0)
    alpha_grid: list[float] = Field(default_factory=lambda: list(DEFAULT_ALPHA_GRID), min_length=1)
    epsilon: float = Field(default=DEFAULT_EPSILON, gt=0, lt=1)
    common_fraction: float = Field(default=DEFAULT_COMMON_FRACTION, gt=0, le=1)
    beta: float | None = Field(default=None, ge=0, le=1)
    k: int | None = Field(default=None, ge=1)
    ks: list[int] | None = None
    fractions: list[float] | None = None
    betas: list[float] | None = None

    seed: int = Field(default=0, ge=0)
    num_tasks: int = Field(default=8, ge=1)
    overlap: float = Field(default=0.5, ge=0, le=1)
    noise: float = Field(default=0.5, ge=0, le=1)
    overlap_profile: OverlapProfile = OverlapProfile.UNIFORM
    input_dim: int = Field(default=64, ge=1)
    hidden_dim: int = Field(default=48, ge=1)
    num_classes: int = Field(default=4, ge=2)

    threads: int = Field(default_factory=default_threads, ge=1)
    deterministic: Literal[True] = True

    @field_validator('alpha_grid')
    @classmethod
    def _positive_grid(cls, grid: list[float]) -> list[float]:
        if any(alpha <= 0 for alpha in grid):
            raise ValueError('every alpha must be positive')
        return grid

    @field_validator('ks')
    @classmethod
    def _positive_ks(cls, ks: list[int] | None) -> list[int] | None:
        if ks is not None and (not ks or any(k < 1 for k in ks)):
            raise ValueError('k values must be positive integers')
        return ks

    @field_validator('fractions')
    @classmethod
    def _fractions_in_range(cls, fractions: list[float] | None) -> list[float] | None:
        if fractions is not None and (not fractions or any(not 0 < f <= 1 for f in fractions)):
            raise ValueError('common fractions must lie in (0, 1]')
        return fractions

    @field_validator('betas')
    @classmethod
    def _betas_in_range(cls, betas: list[float] | None) -> list[float] | None:
        if betas is not None and (not betas or any(not 0 <= b <= 1 for b in betas)):
            raise ValueError('beta values must lie in [0, 1]')
        return betas

    def suite_dims(self) -> SuiteDims:
        """Network sizes of a generated suite."""
        return SuiteDims(input_dim=self.input_dim, hidden_dim=self.hidden_dim, num_classes=self.num_classes)

    @classmethod
    def from_options(cls, **options) -> 'JobConfig':
        """Build a config, dropping unset options and translating validation failures.

        Raises:
            InvalidConfig: If an option is out of range; the message names the option
        """
        options = {key: value for key, value in options.items() if value is not None}
        options['threads'] = resolve_threads(options.get('threads'))
        try:
            return cls(**options)
        except ValidationError as err:
            problems = '; '.join(
                f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}" for error in err.errors()
            )
            raise InvalidConfig(f'Invalid option: {problems}') from err
