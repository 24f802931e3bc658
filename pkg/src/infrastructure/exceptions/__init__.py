"""
Exception Infrastructure
Custom exception hierarchy for the identity cleaner.
"""

from .custom_exceptions import (
    IdentityCleanerException,
    ConfigurationException,
    DataValidationException,
    ParseException,
    DimensionMismatchException,
    DataIntegrityException,
    StorageAccessException,
    NumericalFailureException,
    DegenerateEmbeddingException,
    TrainingCollapseException,
    CalibrationException,
    PipelineAbortedException,
)

__all__ = [
    "IdentityCleanerException",
    "ConfigurationException",
    "DataValidationException",
    "ParseException",
    "DimensionMismatchException",
    "DataIntegrityException",
    "StorageAccessException",
    "NumericalFailureException",
    "DegenerateEmbeddingException",
    "TrainingCollapseException",
    "CalibrationException",
    "PipelineAbortedException",
]
