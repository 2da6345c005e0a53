"""Exporting and importing synthetic suites as ISOT bundles plus CSV datasets."""

import json
import logging
from collections import defaultdict
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from src.data_storage.persistence import load_all_bundles, load_bundle, save_bundle
from src.data_storage.reports import read_csv, write_csv, write_json
from src.errors import BundleNotFound, HeaderMalformed
from src.synthetic.network import DataSplit
from src.synthetic.suite import SPLITS, OverlapProfile, SuiteDims, SyntheticSuite, TaskData

logger = logging.getLogger(__name__)

BASE_FILE = 'base.isot'
DATASETS_FILE = 'datasets.csv'
SETTINGS_FILE = 'suite.json'


def task_file(index: int) -> str:
    """File name of the ``index``-th fine-tuned model."""
    return f'task_{index:02d}.isot'


def save_suite(suite: SyntheticSuite, directory: str | Path) -> Path:
    """Write a suite to ``directory``.

    Args:
        suite: Suite to export
        directory: Destination directory, created if missing

    Returns:
        Path: The directory
    """
    directory = Path(directory)
    save_bundle(suite.base, directory / BASE_FILE)
    for t, model in enumerate(suite.models):
        save_bundle(model, directory / task_file(t))

    header = ['task', 'split', *(f'f{i}' for i in range(suite.dims.input_dim)), 'label']
    rows = []
    for label, data in zip(suite.task_labels, suite.datasets, strict=True):
        for split_name in SPLITS:
            split = data.split(split_name)
            for features, target in zip(split.features, split.labels, strict=True):
                rows.append([label, split_name, *(float(value) for value in features), int(target)])
    write_csv(directory / DATASETS_FILE, header, rows)
    write_json(directory / SETTINGS_FILE, suite.settings())

    logger.info('Exported suite with %d tasks to %s', suite.num_tasks, directory)
    return directory


def load_suite(directory: str | Path) -> SyntheticSuite:
    """Read a suite written by ``save_suite``.

    Raises:
        BundleNotFound: If a suite file is missing
        HeaderMalformed: If ``suite.json`` or ``datasets.csv`` cannot be parsed
    """
    directory = Path(directory)
    settings_path = directory / SETTINGS_FILE
    try:
        settings = json.loads(settings_path.read_text(encoding='utf-8'))
        dims = SuiteDims.model_validate(settings['dims'])
        num_tasks = int(settings['num_tasks'])
        seed = int(settings['seed'])
        overlap = float(settings['overlap'])
        noise = float(settings['noise'])
        profile = OverlapProfile(settings.get('overlap_profile', OverlapProfile.UNIFORM))
    except FileNotFoundError as err:
        raise BundleNotFound(f'Suite settings not found: {settings_path}') from err
    except (json.JSONDecodeError, KeyError, TypeError, ValueError, ValidationError) as err:
        raise HeaderMalformed(f'{settings_path}: invalid suite settings: {err}') from err

    base = load_bundle(directory / BASE_FILE)
    models = load_all_bundles([directory / task_file(t) for t in range(num_tasks)])

    datasets_path = directory / DATASETS_FILE
    if not datasets_path.exists():
        raise BundleNotFound(f'Suite datasets not found: {datasets_path}')
    grouped: dict[tuple[str, str], list[dict[str, str]]] = defaultdict(list)
    for row in read_csv(datasets_path):
        grouped[(row['task'], row['split'])].append(row)

    feature_columns = [f'f{i}' for i in range(dims.input_dim)]
    datasets = []
    for model in models:
        splits = []
        for split_name in SPLITS:
            rows = grouped.get((model.meta['task'], split_name), [])
            try:
                features = np.array([[float(row[c]) for c in feature_columns] for row in rows], dtype=np.float32)
                labels = np.array([int(row['label']) for row in rows], dtype=np.int64)
            except (KeyError, ValueError) as err:
                raise HeaderMalformed(f'{datasets_path}: invalid row for {model.meta["task"]}: {err}') from err
            splits.append(DataSplit(features.reshape(len(rows), dims.input_dim), labels))
        datasets.append(TaskData(*splits))

    logger.info('Loaded suite with %d tasks from %s', num_tasks, directory)
    return SyntheticSuite(
        seed=seed,
        dims=dims,
        overlap=overlap,
        noise=noise,
        base=base,
        models=models,
        datasets=datasets,
        overlap_profile=profile,
    )
