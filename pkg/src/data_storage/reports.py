"""Writing reports and sidecar metadata to disk."""

import csv
import json
import logging
import math
from pathlib import Path

import numpy as np

from src.errors import IoFailure
from src.models.report import Report

logger = logging.getLogger(__name__)


def format_value(value) -> str:
    """Render one CSV cell: floats with 9 significant digits, everything else as text."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float | np.floating):
        return 'nan' if math.isnan(value) else format(float(value), '.9g')
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(filepath: str | Path, header, rows) -> Path:
    """Write an RFC-4180 CSV file with LF line endings.

    Args:
        filepath: Destination path; parent directories are created
        header: Column names
        rows: Sequence of row value sequences

    Returns:
        Path: The written path

    Raises:
        IoFailure: If the file cannot be written
    """
    filepath = Path(filepath)
    try:
        filepath.parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(value) for value in row])
    except OSError as err:
        raise IoFailure(f'Cannot write {filepath}: {err}') from err
    logger.info('Wrote %s', filepath)
    return filepath


def write_report(report: Report, filepath: str | Path) -> Path:
    """Write a report with its own header."""
    return write_csv(filepath, report.csv_header(), report.csv_rows())


def read_csv(filepath: str | Path) -> list[dict[str, str]]:
    """Read a CSV file with a header line into a list of row mappings."""
    with open(filepath, encoding='utf-8', newline='') as f:
        return list(csv.DictReader(f))


def write_json(filepath: str | Path, payload: dict) -> Path:
    """Write a JSON document with sorted keys and a trailing newline.

    Raises:
        IoFailure: If the file cannot be written
    """
    filepath = Path(filepath)
    try:
        filepath.parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, 'w', encoding='utf-8') as f:
            json.dump(payload, f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write('\n')
    except OSError as err:
        raise IoFailure(f'Cannot write {filepath}: {err}') from err
    return filepath
