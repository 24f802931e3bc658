"""
Repository package for file access.

This package contains the repository implementations for reading and writing
datasets, cleaned sets, models, reports and configuration with consistent
error translation.
"""

from .base_repository import BaseRepository
from .dataset_repository import DatasetRepository, FileDatasetRepository
from .cleaned_repository import FileCleanedRepository
from .model_repository import FileModelRepository
from .report_repository import FileReportRepository
from .config_repository import CleanerConfig, ConfigRepository, FileConfigRepository, derive_seed

__all__ = [
    'BaseRepository',
    'DatasetRepository',
    'FileDatasetRepository',
    'FileCleanedRepository',
    'FileModelRepository',
    'FileReportRepository',
    'CleanerConfig',
    'ConfigRepository',
    'FileConfigRepository',
    'derive_seed',
]
