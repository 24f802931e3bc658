"""
Logging Infrastructure
Centralized logging framework for the identity cleaner.
"""

from .logger import CleanerLogger, get_logger, StageTimer

__all__ = ["CleanerLogger", "get_logger", "StageTimer"]
