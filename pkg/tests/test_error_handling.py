"""
Tests for the exception hierarchy and exit-code mapping.
"""

# Standard library imports
import logging

# Local imports
from utils.error_handling import (
    EXIT_DATA,
    EXIT_MODEL,
    EXIT_USAGE,
    CheckpointError,
    ConfigError,
    MalformedRecord,
    ShapeMismatch,
    ValidationError,
    exit_code_for,
    handle_cli_error,
    safe_execute,
)


def test_exit_codes_follow_error_class():
    assert exit_code_for(MalformedRecord("bad tag", 3)) == EXIT_DATA
    assert exit_code_for(CheckpointError("missing")) == EXIT_MODEL
    assert exit_code_for(ShapeMismatch("2x3 vs 3x2")) == EXIT_MODEL
    assert exit_code_for(ValidationError("seed")) == EXIT_USAGE
    assert exit_code_for(ConfigError("no file")) == EXIT_USAGE
    assert exit_code_for(RuntimeError("boom")) == EXIT_USAGE


def test_malformed_record_carries_line_number():
    error = MalformedRecord("missing [GS_aligned]", 7)
    assert error.line_number == 7
    assert "7" in str(error)


def test_handle_cli_error_reports_on_stderr(capsys, caplog):
    with caplog.at_level(logging.WARNING):
        code = handle_cli_error(CheckpointError("params.bin not found"), "Command failed")
    assert code == EXIT_MODEL
    assert "Model error: params.bin not found" in capsys.readouterr().err
    assert "params.bin not found" in caplog.text


def test_safe_execute_returns_default_on_failure(caplog):
    def explode():
        raise OSError("disk full")

    with caplog.at_level(logging.WARNING):
        assert safe_execute(explode, error_message="Could not write charts", default_return="skipped") == "skipped"
    assert "Could not write charts: disk full" in caplog.text
    assert safe_execute(max, 2, 5) == 5
