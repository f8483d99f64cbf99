from __future__ import annotations

import logging
import os
from pathlib import Path

from heleshaw.environment import log_level, resolve_out_dir


def test_resolve_out_dir_defaults_to_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert resolve_out_dir() == Path.cwd()
    assert resolve_out_dir("") == Path.cwd()


def test_resolve_out_dir_expands(tmp_path, monkeypatch):
    monkeypatch.setenv("HELE_TEST_ROOT", str(tmp_path))
    assert resolve_out_dir("$HELE_TEST_ROOT/out") == tmp_path / "out"
    assert resolve_out_dir("~").is_absolute()
    assert str(resolve_out_dir("~/runs")).startswith(os.path.expanduser("~"))


def test_resolve_out_dir_makes_relative_paths_absolute(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert resolve_out_dir("results") == tmp_path / "results"


def test_log_level():
    assert log_level(None) == logging.WARNING
    assert log_level("debug") == logging.DEBUG
    assert log_level("INFO") == logging.INFO
    assert log_level(logging.ERROR) == logging.ERROR
    assert log_level("chatty") == logging.WARNING
