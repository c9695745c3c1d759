"""
Utility functions for consistent error handling and logging across the toolkit.
"""

# Standard library imports
import logging
import traceback
from typing import Callable, Optional, TypeVar, Union, cast

# Third-party imports
import click

# Type variables for generic function signatures
T = TypeVar("T")
R = TypeVar("R")

# Process exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_MODEL = 3


# Define application-specific exceptions
class AppError(Exception):
    """Base exception for application-specific errors."""

    pass


class DataError(AppError):
    """Exception raised for malformed or unusable input data."""

    pass


class ConfigError(AppError):
    """Exception raised for configuration-related errors."""

    pass


class ModelError(AppError):
    """Exception raised for model, tensor and checkpoint errors."""

    pass


class MalformedRecord(DataError):
    """An aligned-corpus record is missing a tag or violates the length invariant."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class EmptyReference(DataError):
    """A gold-standard string is empty where a metric needs its length."""

    pass


class LengthMismatch(DataError):
    """Two sequences that must be parallel have different lengths."""

    pass


class EmptyMatrix(DataError):
    """A confusion matrix holds no counts."""

    pass


class InvalidRule(DataError):
    """A rewrite rule or exception entry cannot be loaded."""

    def __init__(self, message: str, source: str = "", line_number: Optional[int] = None):
        location = source
        if line_number is not None:
            location = f"{source}:{line_number}" if source else f"line {line_number}"
        super().__init__(f"{location}: {message}" if location else message)
        self.source = source
        self.line_number = line_number


class DegenerateData(DataError):
    """Training data cannot support the requested fit (e.g. a single class)."""

    pass


class GapInGroups(DataError):
    """Sub-token groups do not cover token indices 0..n-1 exactly once."""

    pass


class NotAnError(DataError):
    """Error-type classification was asked about two identical tokens."""

    pass


class EmptyInput(DataError):
    """A sequence model received an empty input sequence."""

    pass


class CheckpointError(ModelError):
    """A checkpoint is missing, truncated or incompatible."""

    pass


class ShapeMismatch(ModelError):
    """Tensor shapes are incompatible for the requested operation."""

    pass


class NonFiniteValue(ModelError):
    """A tensor operation produced NaN or infinity."""

    pass


class NotScalar(ModelError):
    """Backpropagation was started from a non-scalar tensor."""

    pass


class ValidationError(ConfigError):
    """A configuration document or referenced path failed validation."""

    pass


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the process exit code contract."""
    if isinstance(error, DataError):
        return EXIT_DATA
    if isinstance(error, ModelError):
        return EXIT_MODEL
    return EXIT_USAGE


def handle_cli_error(
    error: Exception,
    error_message: str,
    log_level: int = logging.ERROR,
    show_traceback: bool = False,
) -> int:
    """
    Consistently log an error, report it on stderr and return the exit code.

    Args:
        error: The exception that was raised
        error_message: Human-readable context for the failure
        log_level: Logging level to use
        show_traceback: Whether to include the traceback in the log

    Returns:
        Exit code matching the error class
    """
    # Adjust log level and message based on exception type
    if isinstance(error, ValidationError):
        if log_level == logging.ERROR:
            log_level = logging.WARNING
        user_message = f"Invalid configuration: {error}"
    elif isinstance(error, ConfigError):
        user_message = f"Configuration error: {error}"
    elif isinstance(error, DataError):
        user_message = f"Data error: {error}"
    elif isinstance(error, ModelError):
        user_message = f"Model error: {error}"
    else:
        user_message = f"{error_message}: {error}"
        show_traceback = True

    detailed_message = f"{error_message}: {error}"
    if show_traceback:
        detailed_message += "\n" + traceback.format_exc()
    logging.log(log_level, detailed_message)

    click.echo(user_message, err=True)
    return exit_code_for(error)


def safe_execute(
    func: Callable[..., R],
    *args,
    error_message: str = "Operation failed",
    default_return: Optional[T] = None,
    log_level: int = logging.WARNING,
    **kwargs,
) -> Union[R, T]:
    """
    Execute an optional side task, logging any exception instead of raising.

    Args:
        func: Function to execute
        *args: Args to pass to the function
        error_message: Message to log on error
        default_return: Value to return on error
        log_level: Logging level to use for errors
        **kwargs: Keyword args to pass to the function

    Returns:
        Function result or default_return on error
    """
    try:
        return func(*args, **kwargs)
    except Exception as e:
        logging.log(log_level, f"{error_message}: {e}")
        return cast(T, default_return)
