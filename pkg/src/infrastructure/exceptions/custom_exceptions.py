"""
Custom Exception Classes for the Identity Cleaner

This module defines the exception hierarchy for the identity cleaner,
providing specific error types for different failure scenarios. Every
exception carries the process exit code the command line maps it to.
"""

from typing import Any, List, Optional


class IdentityCleanerException(Exception):
    """Base exception for all identity cleaner errors.

    This is the root exception class from which all other identity cleaner
    exceptions inherit. It provides a consistent interface for error handling
    throughout the system.
    """

    exit_code = 1

    def __init__(self, message: str, details: Optional[str] = None):
        """Initialize the exception.

        Args:
            message: The main error message
            details: Optional additional details about the error
        """
        self.message = message
        self.details = details
        super().__init__(self.message)

    def __str__(self) -> str:
        """Return a string representation of the exception."""
        if self.details:
            return f"{self.message} - Details: {self.details}"
        return self.message


def _join_details(*pairs: Any) -> Optional[str]:
    details = [f"{name}: {value}" for name, value in pairs if value is not None]
    return " | ".join(details) if details else None


class ConfigurationException(IdentityCleanerException):
    """Raised when configuration is invalid or missing.

    This exception is used when a config file is unreadable, names an
    unknown setting, or carries a value outside its documented range.
    """

    exit_code = 2

    def __init__(self, message: str, config_file: Optional[str] = None, setting: Optional[str] = None):
        """Initialize the configuration exception.

        Args:
            message: The main error message
            config_file: The configuration file that is problematic
            setting: The specific setting that is invalid
        """
        self.config_file = config_file
        self.setting = setting
        super().__init__(message, _join_details(("Config file", config_file), ("Setting", setting)))


class DataValidationException(IdentityCleanerException):
    """Raised when a domain value fails validation.

    This exception is used when input data does not meet the required
    validation criteria, such as non-finite features or empty labels.
    """

    exit_code = 3

    def __init__(self, message: str, field: Optional[str] = None, value: Optional[str] = None):
        """Initialize the data validation exception.

        Args:
            message: The main error message
            field: The field that failed validation
            value: The invalid value that was provided
        """
        self.field = field
        self.value = value
        super().__init__(message, _join_details(("Field", field), ("Value", value)))


class ParseException(IdentityCleanerException):
    """Raised when a row of an input file cannot be parsed."""

    exit_code = 3

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message, _join_details(("Path", path)))


class DimensionMismatchException(IdentityCleanerException):
    """Raised when vector dimensions disagree.

    Used both for inconsistent feature dimensions inside a dataset file and
    for mismatched operands of embedding operations.
    """

    exit_code = 3

    def __init__(self, message: str, expected: Optional[int] = None,
                 actual: Optional[int] = None, line: Optional[int] = None):
        self.expected = expected
        self.actual = actual
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message, _join_details(("Expected", expected), ("Actual", actual)))


class DataIntegrityException(IdentityCleanerException):
    """Raised when a dataset breaks a structural invariant.

    Duplicate record ids, unknown labels and empty inputs all land here.
    """

    exit_code = 3

    def __init__(self, message: str, record_id: Optional[int] = None, label: Optional[str] = None):
        self.record_id = record_id
        self.label = label
        super().__init__(message, _join_details(("Record", record_id), ("Label", label)))


class StorageAccessException(IdentityCleanerException):
    """Raised when file operations fail.

    This exception is used when the system cannot read or write a dataset,
    model, report or manifest file.
    """

    exit_code = 3

    def __init__(self, message: str, path: Optional[str] = None, operation: Optional[str] = None):
        """Initialize the storage access exception.

        Args:
            message: The main error message
            path: The path that failed
            operation: The operation that was being attempted
        """
        self.path = path
        self.operation = operation
        super().__init__(message, _join_details(("Path", path), ("Operation", operation)))


class NumericalFailureException(IdentityCleanerException):
    """Base class for numerical failures (collapse, degenerate embeddings)."""

    exit_code = 4


class DegenerateEmbeddingException(NumericalFailureException):
    """Raised when a vector is zero before L2 normalization.

    A zero head output means the head has collapsed for that input; mapping
    it to an arbitrary unit vector would hide the problem.
    """

    def __init__(self, message: str = "degenerate embedding", record_id: Optional[int] = None):
        self.record_id = record_id
        super().__init__(message, _join_details(("Record", record_id)))


class TrainingCollapseException(NumericalFailureException):
    """Raised when SGD drives the head into a degenerate or non-finite state."""

    def __init__(self, message: str, iteration: Optional[int] = None, cause: Optional[Exception] = None):
        self.iteration = iteration
        self.cause = cause
        super().__init__(message, _join_details(("Iteration", iteration), ("Cause", cause)))


class CalibrationException(NumericalFailureException):
    """Raised when no swept threshold reaches the target precision.

    Carries the best achievable (precision, threshold) so callers can
    report how far off the target was.
    """

    def __init__(self, message: str, best_precision: Optional[float] = None,
                 best_threshold: Optional[float] = None):
        self.best_precision = best_precision
        self.best_threshold = best_threshold
        super().__init__(message, _join_details(("Best precision", best_precision),
                                                ("Best threshold", best_threshold)))


class PipelineAbortedException(NumericalFailureException):
    """Raised when an iteration fails; keeps the runs completed before it.

    The exit code follows the cause, so a data error inside an iteration
    still exits 3.
    """

    def __init__(self, message: str, runs: Optional[List[Any]] = None,
                 iteration: Optional[int] = None, cause: Optional[Exception] = None):
        self.runs = list(runs or [])
        self.iteration = iteration
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", NumericalFailureException.exit_code)
        super().__init__(message, _join_details(("Iteration", iteration),
                                                ("Completed runs", len(self.runs)),
                                                ("Cause", cause)))
