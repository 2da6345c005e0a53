"""Tabular diagnostics destined for CSV files."""

from typing import ClassVar

from pydantic import BaseModel, model_validator

from src.models.merge_outcome import MergeMethod

SAR_SLACK = 1e-9


class AlignmentRow(BaseModel):
    """Alignment ratio of one task on one layer (``layer='avg'`` for the layer mean)."""

    task: str
    layer: str
    sar: float

    @model_validator(mode='after')
    def _check_range(self):
        if not -SAR_SLACK <= self.sar <= 1 + SAR_SLACK:
            raise ValueError(f'SAR {self.sar} of task {self.task!r} on {self.layer!r} lies outside [0, 1]')
        return self


class SpectrumRow(BaseModel):
    """One singular value of one layer."""

    layer: str
    index: int
    sigma: float


class NaiRow(BaseModel):
    """Normalized accuracy improvement of one task."""

    task: str
    acc_merged: float
    acc_task: float
    acc_zero: float
    nai: float


class CorrelationRow(BaseModel):
    """Pearson correlation between two per-task metrics."""

    metric_x: str
    metric_y: str
    pearson: float


class BenchmarkRow(BaseModel):
    """Test accuracy, NAI and SAR_avg of one task under one merging method."""

    method: MergeMethod
    alpha: float
    task: str
    acc: float
    nai: float
    sar_avg: float


class Report(BaseModel):
    """Base for reports: an ordered list of rows plus the CSV header they are written with."""

    columns: ClassVar[tuple[str, ...]] = ()
    rows: list

    def csv_header(self) -> tuple[str, ...]:
        """Column names written as the first CSV line."""
        return self.columns

    def csv_rows(self) -> list[list]:
        """Row values in ``columns`` order."""
        return [[getattr(row, column) for column in self.columns] for row in self.rows]


class AlignmentReport(Report):
    """SAR per task and layer, with the effective ranks used for each layer."""

    columns: ClassVar[tuple[str, ...]] = ('task', 'layer', 'sar')
    rows: list[AlignmentRow]
    epsilon: float
    k_m: dict[str, int] = {}

    def sar_avg(self, task: str) -> float:
        """The ``avg`` row of ``task``."""
        return next(row.sar for row in self.rows if row.task == task and row.layer == 'avg')


class SpectrumReport(Report):
    """Singular values per layer, optionally after spectrum interpolation or truncation."""

    columns: ClassVar[tuple[str, ...]] = ('layer', 'index', 'sigma')
    rows: list[SpectrumRow]
    method: str = 'raw'
    beta: float | None = None

    @model_validator(mode='after')
    def _check_sorted(self):
        previous: dict[str, float] = {}
        for row in self.rows:
            # f32-level slack: spectra of stored checkpoints carry rounding noise
            if row.layer in previous and row.sigma > previous[row.layer] * (1 + 1e-6) + 1e-12:
                raise ValueError(f'Spectrum of layer {row.layer!r} increases at index {row.index}')
            previous[row.layer] = row.sigma
        return self

    def layer_sigmas(self, layer: str) -> list[float]:
        """Singular values of one layer in index order."""
        return [row.sigma for row in self.rows if row.layer == layer]


class NaiReport(Report):
    """NAI per task."""

    columns: ClassVar[tuple[str, ...]] = ('task', 'acc_merged', 'acc_task', 'acc_zero', 'nai')
    rows: list[NaiRow]


class CorrelationReport(Report):
    """Correlations between per-task metrics."""

    columns: ClassVar[tuple[str, ...]] = ('metric_x', 'metric_y', 'pearson')
    rows: list[CorrelationRow]


class BenchmarkReport(Report):
    """Per-task benchmark results; each method block ends with a ``task='mean'`` row."""

    columns: ClassVar[tuple[str, ...]] = ('method', 'alpha', 'task', 'acc', 'nai', 'sar_avg')
    rows: list[BenchmarkRow]

    def csv_rows(self) -> list[list]:
        """Row values with the method written by its command-line name."""
        return [[row.method.value, row.alpha, row.task, row.acc, row.nai, row.sar_avg] for row in self.rows]


class TableReport(Report):
    """Free-form table used by the studies; each row is a mapping keyed by column name."""

    rows: list[dict]
    header: tuple[str, ...]

    def csv_header(self) -> tuple[str, ...]:
        """Column names given at construction."""
        return self.header

    def csv_rows(self) -> list[list]:
        """Row values in ``header`` order."""
        return [[row[column] for column in self.header] for row in self.rows]
