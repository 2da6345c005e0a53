#!/usr/bin/env python3
"""Command-line front end for isotropic model merging.

Usage: uv run -m src.scripts.iso_merge <command> [options]
"""

import argparse
import logging
import sys
from collections.abc import Callable
from pathlib import Path

import numpy as np

from src.config import Command, JobConfig, StudyKind, resolve_log_level
from src.data_storage.persistence import load_all_bundles, load_bundle, save_bundle
from src.data_storage.reports import read_csv, write_csv, write_json, write_report
from src.data_storage.suite_storage import load_suite, save_suite
from src.errors import InputError, InvalidConfig, LengthMismatch, NumericalError, ZeroVariance
from src.merging.alpha_sweep import sweep_alpha
from src.merging.merge_ops import build_merger, get_available_methods
from src.metrics.alignment import alignment_report
from src.metrics.spectrum import interpolate_spectrum, select_layers, spectrum_report, truncate_isotropic
from src.metrics.statistics import pearson
from src.models.merge_outcome import LayerFlag, MergeMethod
from src.models.report import CorrelationReport, CorrelationRow, NaiReport, NaiRow, TableReport
from src.models.tensor_bundle import apply_delta, bundle_delta
from src.synthetic.benchmark import run_benchmark, safe_nai, validation_evaluator
from src.synthetic.studies import (
    DEFAULT_BETAS,
    DEFAULT_COMMON_FRACTIONS,
    DEFAULT_TRUNCATION_KS,
    common_fraction_ablation,
    flatten_study,
    interpolation_study,
    pairwise_study,
    truncation_study,
)
from src.synthetic.suite import OverlapProfile, SyntheticSuite, generate_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
DEFAULT_MERGE_ALPHA = 1.0
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def _float_list(text: str) -> list[float]:
    try:
        return [float(item) for item in text.split(',') if item.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f'expected comma-separated numbers, got {text!r}') from err


def _int_list(text: str) -> list[int]:
    try:
        return [int(item) for item in text.split(',') if item.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f'expected comma-separated integers, got {text!r}') from err


def _method_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(',') if item.strip()]


def sidecar_path(out: Path) -> Path:
    """Path of the metadata JSON written next to a merged checkpoint."""
    return out.with_name(f'{out.name}.meta.json')


def cmd_merge(config: JobConfig) -> int:
    """Merge task checkpoints into θ_0 + α·Δ and write the checkpoint plus its sidecar."""
    base = load_bundle(config.base)
    tasks = [bundle_delta(bundle, base) for bundle in load_all_bundles(config.tasks)]

    merger = build_merger(config.method, common_fraction=config.common_fraction, threads=config.threads)
    alpha = config.alpha if config.alpha is not None else DEFAULT_MERGE_ALPHA
    outcome = merger.merge(tasks).with_alpha(alpha)
    for flag in LayerFlag:
        flagged = outcome.flagged_layers(flag)
        if flagged:
            logger.warning('Layers flagged %s: %s', flag.value, ', '.join(flagged))

    save_bundle(apply_delta(base, outcome, alpha), config.out)
    common_fraction = config.common_fraction if config.method is MergeMethod.ISO_CTS else None
    write_json(sidecar_path(config.out), outcome.to_sidecar(common_fraction))
    return EXIT_OK


def _read_accuracies(path: Path, labels: list[str]) -> list[NaiRow]:
    if not path.exists():
        raise InvalidConfig(f'Accuracy table not found: {path}')
    by_task = {row.get('task'): row for row in read_csv(path)}
    rows = []
    for label in labels:
        if label not in by_task:
            raise InvalidConfig(f'Accuracy table {path} has no row for task {label!r}')
        row = by_task[label]
        try:
            acc_merged, acc_task, acc_zero = (float(row[key]) for key in ('acc_merged', 'acc_task', 'acc_zero'))
        except (KeyError, TypeError, ValueError) as err:
            raise InvalidConfig(f'Accuracy table {path}: invalid row for task {label!r}: {err}') from err
        rows.append(
            NaiRow(
                task=label,
                acc_merged=acc_merged,
                acc_task=acc_task,
                acc_zero=acc_zero,
                nai=safe_nai(acc_merged, acc_task, acc_zero, label),
            )
        )
    return rows


def _correlation(metric_x: str, xs: list[float], metric_y: str, ys: list[float]) -> CorrelationRow:
    pairs = [(x, y) for x, y in zip(xs, ys, strict=True) if np.isfinite(x) and np.isfinite(y)]
    try:
        value = pearson([x for x, _ in pairs], [y for _, y in pairs])
    except (LengthMismatch, ZeroVariance) as err:
        logger.warning('Correlation of %s and %s undefined: %s', metric_x, metric_y, err)
        value = float('nan')
    return CorrelationRow(metric_x=metric_x, metric_y=metric_y, pearson=value)


def cmd_analyze(config: JobConfig) -> int:
    """Write SAR per task and layer, and NAI plus correlations when an accuracy table is given."""
    base = load_bundle(config.base)
    tasks = [bundle_delta(bundle, base) for bundle in load_all_bundles(config.tasks)]
    merged = bundle_delta(load_bundle(config.merged), base, task_label='merged')

    report = alignment_report(tasks, merged, config.epsilon)
    write_report(report, config.out_dir / 'alignment.csv')
    if config.accuracies is None:
        return EXIT_OK

    labels = [task.task_label for task in tasks]
    nai_rows = _read_accuracies(config.accuracies, labels)
    write_report(NaiReport(rows=nai_rows), config.out_dir / 'nai.csv')

    sar_avgs = [report.sar_avg(label) for label in labels]
    correlations = [
        _correlation('sar_avg', sar_avgs, 'nai', [row.nai for row in nai_rows]),
        _correlation('sar_avg', sar_avgs, 'acc_merged', [row.acc_merged for row in nai_rows]),
    ]
    write_report(CorrelationReport(rows=correlations), config.out_dir / 'correlation.csv')
    return EXIT_OK


def cmd_spectrum(config: JobConfig) -> int:
    """Write the singular values of the selected layers, optionally interpolated or truncated."""
    bundle = load_bundle(config.input)
    if config.base is not None:
        layers = bundle_delta(bundle, load_bundle(config.base)).matrices
    else:
        layers = {name: value.astype(np.float64) for name, value in bundle.items() if value.ndim == 2}
    selected = {name: layers[name] for name in select_layers(list(layers), config.layers)}

    method = 'raw'
    if config.beta is not None:
        selected = {name: interpolate_spectrum(layer, config.beta) for name, layer in selected.items()}
        method = 'interpolated'
    elif config.k is not None:
        k = config.k
        selected = {name: truncate_isotropic(layer, min(k, min(layer.shape))) for name, layer in selected.items()}
        method = 'truncated'

    write_report(spectrum_report(selected, method=method, beta=config.beta), config.out_dir / 'spectrum.csv')
    return EXIT_OK


def _suite(config: JobConfig) -> SyntheticSuite:
    if config.suite is not None:
        return load_suite(config.suite)
    return generate_suite(
        config.seed,
        config.num_tasks,
        config.suite_dims(),
        overlap=config.overlap,
        noise=config.noise,
        overlap_profile=config.overlap_profile,
    )


def cmd_synth(config: JobConfig) -> int:
    """Generate a suite, export it and benchmark the requested methods on it."""
    suite = _suite(config)
    save_suite(suite, config.out_dir / 'suite')
    result = run_benchmark(
        suite,
        config.methods,
        alpha_grid=config.alpha_grid,
        common_fraction=config.common_fraction,
        epsilon=config.epsilon,
        threads=config.threads,
    )
    write_report(result.report, config.out_dir / 'benchmark.csv')
    write_csv(
        config.out_dir / 'benchmark_summary.csv',
        ('method', 'alpha', 'mean_acc', 'mean_nai', 'mean_normalized_acc'),
        [
            [s.method.value, s.alpha, s.mean_acc, s.mean_nai, s.mean_normalized_acc]
            for s in result.summaries.values()
        ],
    )
    return EXIT_OK


def cmd_sweep_alpha(config: JobConfig) -> int:
    """Write the validation accuracy of every α in the grid for one method on a saved suite."""
    suite = load_suite(config.suite)
    merger = build_merger(config.method, common_fraction=config.common_fraction, threads=config.threads)
    outcome = merger.merge(suite.task_deltas())
    result = sweep_alpha(suite.base, outcome, config.alpha_grid, validation_evaluator(suite))
    write_csv(config.out_dir / 'alpha_sweep.csv', ('alpha', 'mean_acc'), result.table)
    logger.info('Best alpha for %s: %s', outcome.method, result.best_alpha)
    return EXIT_OK


def cmd_study(config: JobConfig) -> int:
    """Run one study on a saved or freshly generated suite."""
    suite = _suite(config)
    studies: dict[StudyKind, Callable[[], TableReport]] = {
        StudyKind.FLATTEN: lambda: flatten_study(suite),
        StudyKind.PAIRWISE: lambda: pairwise_study(suite, config.epsilon),
        StudyKind.TRUNCATION: lambda: truncation_study(
            suite, config.ks or DEFAULT_TRUNCATION_KS, alpha=config.alpha or DEFAULT_MERGE_ALPHA
        ),
        StudyKind.FRACTION: lambda: common_fraction_ablation(
            suite, config.fractions or DEFAULT_COMMON_FRACTIONS, config.alpha_grid, threads=config.threads
        ),
        StudyKind.INTERPOLATION: lambda: interpolation_study(
            suite, config.betas or DEFAULT_BETAS, alpha=config.alpha or DEFAULT_MERGE_ALPHA, epsilon=config.epsilon
        ),
    }
    write_report(studies[config.kind](), config.out_dir / f'{config.kind.value}.csv')
    return EXIT_OK


COMMANDS: dict[Command, Callable[[JobConfig], int]] = {
    Command.MERGE: cmd_merge,
    Command.ANALYZE: cmd_analyze,
    Command.SPECTRUM: cmd_spectrum,
    Command.SYNTH: cmd_synth,
    Command.SWEEP_ALPHA: cmd_sweep_alpha,
    Command.STUDY: cmd_study,
}


def _add_suite_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--tasks', dest='num_tasks', type=int, help='Number of tasks T (default: 8)')
    parser.add_argument('--seed', type=int, help='Random seed (default: 0)')
    parser.add_argument('--overlap', type=float, help='Shared-direction fraction in [0, 1] (default: 0.5)')
    parser.add_argument('--noise', type=float, help='Cluster standard deviation in [0, 1] (default: 0.5)')
    parser.add_argument(
        '--overlap-profile', choices=[profile.value for profile in OverlapProfile], help='How overlap varies over tasks'
    )
    parser.add_argument('--input-dim', type=int, help='Input dimension d (default: 64)')
    parser.add_argument('--hidden-dim', type=int, help='Hidden dimension h (default: 48)')
    parser.add_argument('--classes', dest='num_classes', type=int, help='Number of classes c (default: 4)')


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one subparser per command."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--threads', type=int, help='Worker threads (default: all cores; ISO_MERGE_THREADS overrides)')
    common.add_argument(
        '--log-level',
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
        type=str.upper,
        help='Logging verbosity (default: WARNING or ISO_MERGE_LOG_LEVEL)',
    )
    common.add_argument('--epsilon', type=float, help='Residual tolerance of the effective rank (default: 0.05)')
    common.add_argument('--common-frac', dest='common_fraction', type=float, help='Iso-CTS common fraction')
    common.add_argument('--alpha-grid', type=_float_list, help='Comma-separated α candidates (default: 0.5..2.0)')

    outputs = argparse.ArgumentParser(add_help=False)
    outputs.add_argument('--out-dir', type=Path, help='Directory for the CSV outputs (default: .)')

    parser = argparse.ArgumentParser(prog='iso-merge', description='Isotropic merging of fine-tuned checkpoints')
    subparsers = parser.add_subparsers(dest='command', required=True)

    merge = subparsers.add_parser('merge', parents=[common], help='Merge task checkpoints')
    merge.add_argument('--method', required=True, choices=get_available_methods())
    merge.add_argument('--base', type=Path, required=True, help='Pre-trained checkpoint θ_0')
    merge.add_argument('--tasks', type=Path, nargs='+', required=True, help='Fine-tuned checkpoints')
    merge.add_argument('--alpha', type=float, help='Scaling coefficient (default: 1.0)')
    merge.add_argument('--out', type=Path, required=True, help='Merged checkpoint to write')

    analyze = subparsers.add_parser('analyze', parents=[common, outputs], help='Subspace alignment and NAI')
    analyze.add_argument('--base', type=Path, required=True)
    analyze.add_argument('--tasks', type=Path, nargs='+', required=True)
    analyze.add_argument('--merged', type=Path, required=True)
    analyze.add_argument('--accuracies', type=Path, help='CSV with task,acc_merged,acc_task,acc_zero')

    spectrum = subparsers.add_parser('spectrum', parents=[common, outputs], help='Singular value spectra')
    spectrum.add_argument('--input', type=Path, required=True, help='Checkpoint whose spectra are reported')
    spectrum.add_argument('--base', type=Path, help='Subtract this checkpoint first')
    spectrum.add_argument('--layers', help='Regular expression selecting layers')
    transform = spectrum.add_mutually_exclusive_group()
    transform.add_argument('--beta', type=float, help='Interpolate towards the isotropic spectrum')
    transform.add_argument('--k', type=int, help='Keep the top k directions of the isotropic spectrum')

    synth = subparsers.add_parser('synth', parents=[common, outputs], help='Generate and benchmark a synthetic suite')
    _add_suite_options(synth)
    synth.add_argument('--methods', type=_method_list, help='Comma-separated methods (default: all)')

    sweep = subparsers.add_parser('sweep-alpha', parents=[common, outputs], help='α sweep on a saved suite')
    sweep.add_argument('--suite', type=Path, required=True, help='Directory written by synth')
    sweep.add_argument('--method', required=True, choices=get_available_methods())

    study = subparsers.add_parser('study', parents=[common, outputs], help='Spectrum and subspace studies')
    study.add_argument('--kind', required=True, choices=[kind.value for kind in StudyKind])
    study.add_argument('--suite', type=Path, help='Directory written by synth (default: generate one)')
    _add_suite_options(study)
    study.add_argument('--alpha', type=float, help='Fixed α of the truncation and interpolation studies')
    study.add_argument('--ks', type=_int_list, help='Comma-separated k values of the truncation study')
    study.add_argument('--fractions', type=_float_list, help='Comma-separated fractions of the ablation')
    study.add_argument('--betas', type=_float_list, help='Comma-separated β values of the interpolation study')

    return parser


def configure_logging(level: str) -> None:
    """Send log records to stderr at ``level``."""
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    """Parse arguments, run the command and map failures to exit codes."""
    args = build_parser().parse_args(argv)
    configure_logging(resolve_log_level(args.log_level))

    options = {key: value for key, value in vars(args).items() if key != 'log_level'}
    try:
        config = JobConfig.from_options(**options)
        return COMMANDS[config.command](config)
    except InputError as e:
        print(f'iso-merge: error: {e}', file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as e:
        print(f'iso-merge: numerical failure: {e}', file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == '__main__':
    sys.exit(main())
