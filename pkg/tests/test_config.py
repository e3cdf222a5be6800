#!/usr/bin/env python3
"""
Unit tests for the YAML configuration loader
"""

import sys
import os
import logging
import pytest

# load code living in the parent dir ../src/operasim
THIS_SCRIPT_DIR = os.path.dirname(os.path.realpath(__file__))
SRC_DIR = os.path.realpath(THIS_SCRIPT_DIR + "/../src")
sys.path.append(SRC_DIR)

from operasim.config import Config, ConfigError  # noqa: E402

EXAMPLE_CONFIG = os.path.realpath(THIS_SCRIPT_DIR + "/../operasim.yaml")


def write(tmp_path, text: str) -> str:
    path = tmp_path / "operasim.yaml"
    path.write_text(text)
    return str(path)


def test_defaults_without_any_file(tmp_path, monkeypatch):
    monkeypatch.setattr(Config, "get_default_config_file_name", staticmethod(lambda: [str(tmp_path / "none.yaml")]))
    cfg = Config()
    cfg.load()
    assert cfg.filename is None
    assert cfg.config["run"] == Config.DEFAULT_RUN
    assert cfg.config["limits"]["max_steps"] == Config.DEFAULT_MAX_STEPS
    assert cfg.config["logging"]["level"] == "WARNING"


def test_first_default_location_wins(tmp_path, monkeypatch):
    first = write(tmp_path, "run:\n  seed: 5\n")
    monkeypatch.setattr(Config, "get_default_config_file_name", staticmethod(lambda: [first, "/nonexistent/operasim.yaml"]))
    cfg = Config()
    cfg.load()
    assert cfg.filename == first
    assert cfg.config["run"]["seed"] == 5


def test_explicit_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        Config().load(str(tmp_path / "missing.yaml"))


def test_empty_file_selects_defaults(tmp_path):
    cfg = Config()
    cfg.load(write(tmp_path, ""))
    assert cfg.config["run"]["mode"] == "max"
    assert cfg.config["run"]["format"] == "text"


def test_partial_sections_are_completed(tmp_path):
    cfg = Config()
    cfg.load(write(tmp_path, "run:\n  mode: arb\n  death_releases_objects: true\n"))
    assert cfg.config["run"]["mode"] == "arb"
    assert cfg.config["run"]["death_releases_objects"] is True
    assert cfg.config["run"]["steps"] == 10
    assert cfg.config["limits"]["max_steps"] == Config.DEFAULT_MAX_STEPS


@pytest.mark.parametrize(
    "text",
    [
        "run:\n  mode: greedy\n",
        "run:\n  steps: -1\n",
        "logging:\n  level: LOUD\n",
        "limits:\n  max_steps: 0\n",
        "unknown_section: 1\n",
        "run: [\n",
    ],
)
def test_invalid_content(tmp_path, text):
    with pytest.raises(ConfigError):
        Config().load(write(tmp_path, text))


def test_steps_above_limit(tmp_path):
    with pytest.raises(ConfigError):
        Config().load(write(tmp_path, "run:\n  steps: 20\nlimits:\n  max_steps: 10\n"))


def test_example_file_is_valid():
    cfg = Config()
    cfg.load(EXAMPLE_CONFIG)
    assert cfg.config["run"] == Config.DEFAULT_RUN
    assert cfg.config["limits"]["max_steps"] == Config.DEFAULT_MAX_STEPS


@pytest.mark.parametrize(
    "level, verbose, expected",
    [
        ("INFO", False, logging.INFO),
        ("WARN", False, logging.WARNING),
        ("ERR", False, logging.ERROR),
        ("ERROR", True, logging.DEBUG),
    ],
)
def test_logging_level(tmp_path, level, verbose, expected):
    cfg = Config()
    cfg.load(write(tmp_path, f"logging:\n  level: {level}\n"))
    cfg.apply_logging_config(verbose)
    assert logging.getLogger().level == expected
