"""Tests for the job configuration."""

from pathlib import Path

import pytest

from src.config import (
    LOG_LEVEL_ENV,
    THREADS_ENV,
    Command,
    JobConfig,
    StudyKind,
    resolve_log_level,
    resolve_threads,
)
from src.errors import InvalidConfig
from src.models.merge_outcome import MergeMethod


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Remove the tool's environment variables."""
    monkeypatch.delenv(THREADS_ENV, raising=False)
    monkeypatch.delenv(LOG_LEVEL_ENV, raising=False)


def test_defaults():
    """Test the default options of a merge job."""
    config = JobConfig.from_options(command='merge', method='iso-cts', threads=2)

    assert config.command is Command.MERGE
    assert config.method is MergeMethod.ISO_CTS
    assert config.methods == list(MergeMethod)
    assert (config.epsilon, config.common_fraction, config.threads) == (0.05, 0.8, 2)
    assert config.alpha_grid[0] == 0.5 and config.alpha_grid[-1] == 2.0
    assert config.out_dir == Path('.')
    assert config.deterministic is True


def test_unset_options_are_dropped():
    """Test that None values fall back to the defaults."""
    config = JobConfig.from_options(command='study', kind='truncation', epsilon=None, ks=[1, 4], threads=1)

    assert config.kind is StudyKind.TRUNCATION
    assert config.epsilon == 0.05
    assert config.ks == [1, 4]


@pytest.mark.parametrize(
    ('options', 'option_name'),
    [
        ({'epsilon': 1.0}, 'epsilon'),
        ({'common_fraction': 0.0}, 'common_fraction'),
        ({'alpha': -1.0}, 'alpha'),
        ({'alpha_grid': []}, 'alpha_grid'),
        ({'alpha_grid': [1.0, 0.0]}, 'alpha_grid'),
        ({'beta': 1.5}, 'beta'),
        ({'k': 0}, 'k'),
        ({'num_tasks': 0}, 'num_tasks'),
        ({'overlap': 2.0}, 'overlap'),
        ({'fractions': [0.5, 1.5]}, 'fractions'),
        ({'betas': [-0.5]}, 'betas'),
        ({'ks': [0]}, 'ks'),
        ({'method': 'ties'}, 'method'),
    ],
)
def test_invalid_options_name_the_option(options, option_name):
    """Test that validation failures become InvalidConfig naming the option."""
    with pytest.raises(InvalidConfig, match=option_name):
        JobConfig.from_options(command='merge', threads=1, **options)


def test_suite_dims():
    """Test that suite sizes come from the options."""
    dims = JobConfig.from_options(command='synth', input_dim=5, hidden_dim=4, num_classes=3, threads=1).suite_dims()

    assert (dims.input_dim, dims.hidden_dim, dims.num_classes) == (5, 4, 3)


def test_environment_threads_override_the_flag(monkeypatch):
    """Test the ISO_MERGE_THREADS override."""
    monkeypatch.setenv(THREADS_ENV, '3')

    assert resolve_threads(8) == 3
    assert JobConfig.from_options(command='merge', threads=8).threads == 3


def test_threads_fall_back_to_the_flag_and_the_core_count(mocker):
    """Test the flag and the core-count default."""
    mocker.patch('src.config.os.cpu_count', return_value=6)

    assert resolve_threads(2) == 2
    assert resolve_threads(None) == 6


@pytest.mark.parametrize('value', ['zero', '0', '-2'])
def test_invalid_environment_threads(monkeypatch, value):
    """Test that a malformed ISO_MERGE_THREADS is rejected."""
    monkeypatch.setenv(THREADS_ENV, value)

    with pytest.raises(InvalidConfig, match=THREADS_ENV):
        resolve_threads(None)


def test_log_level_resolution(monkeypatch):
    """Test flag, environment and default log levels."""
    assert resolve_log_level(None) == 'WARNING'
    monkeypatch.setenv(LOG_LEVEL_ENV, 'debug')
    assert resolve_log_level(None) == 'DEBUG'
    assert resolve_log_level('info') == 'INFO'
