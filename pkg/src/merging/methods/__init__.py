"""Merging method implementations."""

from src.merging.methods.average import AverageMerger
from src.merging.methods.iso_c import IsoCMerger
from src.merging.methods.iso_cts import IsoCTSMerger
from src.merging.methods.task_arithmetic import TaskArithmeticMerger

__all__ = ['AverageMerger', 'TaskArithmeticMerger', 'IsoCMerger', 'IsoCTSMerger']
