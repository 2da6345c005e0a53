"""Functional entry points for the merging operators and the method registry."""

from collections.abc import Sequence

from src.errors import InvalidConfig
from src.merging.base_merger import BaseMerger
from src.merging.methods.average import AverageMerger
from src.merging.methods.iso_c import IsoCMerger
from src.merging.methods.iso_cts import DEFAULT_COMMON_FRACTION, IsoCTSMerger
from src.merging.methods.task_arithmetic import TaskArithmeticMerger
from src.models.merge_outcome import MergeMethod, MergeOutcome
from src.models.task_matrix import TaskMatrixSet

MERGER_CLASSES: dict[MergeMethod, type[BaseMerger]] = {
    MergeMethod.AVG: AverageMerger,
    MergeMethod.TA: TaskArithmeticMerger,
    MergeMethod.ISO_C: IsoCMerger,
    MergeMethod.ISO_CTS: IsoCTSMerger,
}


def get_available_methods() -> list[str]:
    """Return the command-line names of all merging methods."""
    return [method.value for method in MERGER_CLASSES]


def get_merger_class(method: str | MergeMethod) -> type[BaseMerger]:
    """Return the merger class for a method name such as ``iso-c``."""
    try:
        return MERGER_CLASSES[MergeMethod(method)]
    except ValueError as e:
        raise InvalidConfig(
            f"No merging method named '{method}'. Available methods: {', '.join(get_available_methods())}"
        ) from e


def build_merger(
    method: str | MergeMethod, common_fraction: float = DEFAULT_COMMON_FRACTION, threads: int = 1
) -> BaseMerger:
    """Instantiate a merger; ``common_fraction`` only applies to Iso-CTS."""
    merger_class = get_merger_class(method)
    if merger_class is IsoCTSMerger:
        return IsoCTSMerger(common_fraction=common_fraction, threads=threads)
    return merger_class(threads=threads)


def merge_average(tasks: Sequence[TaskMatrixSet], threads: int = 1) -> MergeOutcome:
    """Weight averaging of task deltas."""
    return AverageMerger(threads=threads).merge(tasks)


def merge_task_arithmetic(tasks: Sequence[TaskMatrixSet], threads: int = 1) -> MergeOutcome:
    """Task Arithmetic: sum of task matrices, mean of 1-D deltas."""
    return TaskArithmeticMerger(threads=threads).merge(tasks)


def merge_iso_c(tasks: Sequence[TaskMatrixSet], threads: int = 1) -> MergeOutcome:
    """Iso-C: isotropic spectrum over the Task Arithmetic subspace."""
    return IsoCMerger(threads=threads).merge(tasks)


def merge_iso_cts(
    tasks: Sequence[TaskMatrixSet], common_fraction: float = DEFAULT_COMMON_FRACTION, threads: int = 1
) -> MergeOutcome:
    """Iso-CTS: isotropic spectrum over common plus task-specific subspaces."""
    return IsoCTSMerger(common_fraction=common_fraction, threads=threads).merge(tasks)


def flatten_task(task: TaskMatrixSet) -> MergeOutcome:
    """Flatten the spectrum of a single task's matrices (Iso-C with one task)."""
    return merge_iso_c([task])
