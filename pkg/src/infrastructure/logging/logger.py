"""
Logging Framework for the Identity Cleaner

This module provides a centralized logging framework with console and optional
rotating file handlers, stage timing for pipeline runs, and structured logging
with appropriate levels.
"""

import logging
import logging.handlers
import time
from pathlib import Path
from typing import Any, Dict, Optional


class CleanerLogger:
    """Centralized logging framework for the identity cleaner.

    Configures a named stdlib logger once. Child loggers created with
    ``logging.getLogger(__name__)`` inside ``src`` propagate into it, so
    configuring ``get_logger("src")`` covers every service.
    """

    LOG_FILENAME = "identity_cleaner.log"

    def __init__(self, name: str, log_level: str = "INFO", log_dir: Optional[str] = None):
        """Initialize the logger.

        Args:
            name: Logger name (typically a package or module name)
            log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
            log_dir: Directory for the rotating log file; console only when None
        """
        self.name = name
        self.logger = logging.getLogger(name)
        self.log_dir = Path(log_dir) if log_dir else None
        self.setup_logging(log_level)

    def setup_logging(self, log_level: str) -> None:
        """Configure console and file handlers.

        Args:
            log_level: The minimum logging level to capture
        """
        self.logger.handlers.clear()
        level = getattr(logging, log_level.upper(), logging.INFO)
        self.logger.setLevel(level)

        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )

        console_handler = logging.StreamHandler()
        console_handler.setLevel(level)
        console_handler.setFormatter(formatter)
        self.logger.addHandler(console_handler)

        if self.log_dir is None:
            return

        try:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            file_handler = logging.handlers.RotatingFileHandler(
                self.log_dir / self.LOG_FILENAME,
                maxBytes=10 * 1024 * 1024,  # 10MB
                backupCount=5
            )
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(formatter)
            self.logger.addHandler(file_handler)
        except (OSError, PermissionError) as e:
            self.logger.warning(f"Could not set up file logging: {e}")

    def log_stage(self, stage: str, success: bool, duration: float,
                  details: Optional[Dict[str, Any]] = None,
                  slow_seconds: float = 60.0) -> None:
        """Log a pipeline stage with its wall-clock duration.

        Args:
            stage: The stage name (e.g. 'calibrate', 'train_head')
            success: Whether the stage completed
            duration: Stage duration in seconds
            details: Optional additional details about the stage
            slow_seconds: Duration above which the stage is reported as slow
        """
        status = "SUCCESS" if success else "FAILED"
        message = f"Stage {stage}: {status} (Duration: {duration:.3f}s)"

        if details:
            detail_str = ", ".join(f"{k}={v}" for k, v in details.items())
            message += f" - {detail_str}"

        if not success:
            self.logger.error(message)
        elif duration > slow_seconds:
            self.logger.warning(f"SLOW: {message}")
        else:
            self.logger.info(message)

    def debug(self, message: str, **kwargs) -> None:
        """Log a debug message."""
        self.logger.debug(message, **kwargs)

    def info(self, message: str, **kwargs) -> None:
        """Log an info message."""
        self.logger.info(message, **kwargs)

    def warning(self, message: str, **kwargs) -> None:
        """Log a warning message."""
        self.logger.warning(message, **kwargs)

    def error(self, message: str, exception: Optional[Exception] = None, **kwargs) -> None:
        """Log an error message.

        Args:
            message: The error message
            exception: Optional exception object for stack trace
        """
        if exception:
            self.logger.error(message, exc_info=exception, **kwargs)
        else:
            self.logger.error(message, **kwargs)


_logger_registry: Dict[str, CleanerLogger] = {}


def get_logger(name: str, log_level: str = "INFO", log_dir: Optional[str] = None) -> CleanerLogger:
    """Get or create a logger instance.

    Only one CleanerLogger exists per name; level and directory apply when
    the logger is first created.

    Args:
        name: Logger name
        log_level: Logging level (only used for new loggers)
        log_dir: Directory for log files (only used for new loggers)

    Returns:
        CleanerLogger instance
    """
    if name not in _logger_registry:
        _logger_registry[name] = CleanerLogger(name, log_level, log_dir)
    return _logger_registry[name]


class StageTimer:
    """Context manager for timing pipeline stages and automatic logging.

    Usage:
        timings = {}
        with StageTimer(logger, "clean", timings):
            cleaned = service.clean_dataset(ds, model, params)
    """

    def __init__(self, logger: CleanerLogger, stage: str,
                 timings: Optional[Dict[str, float]] = None,
                 auto_log: bool = True, details: Optional[Dict[str, Any]] = None):
        """Initialize the stage timer.

        Args:
            logger: Logger instance to use
            stage: Name of the stage being timed
            timings: Optional dict receiving ``stage -> seconds``
            auto_log: Whether to automatically log the result
            details: Optional additional details for logging
        """
        self.logger = logger
        self.stage = stage
        self.timings = timings
        self.auto_log = auto_log
        self.details = details or {}
        self.start_time: Optional[float] = None
        self.duration: Optional[float] = None
        self.success = False

    def __enter__(self) -> 'StageTimer':
        """Start timing the stage."""
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        """End timing, record the duration and optionally log the result."""
        if self.start_time is None:
            return
        self.duration = time.perf_counter() - self.start_time
        self.success = exc_type is None
        if self.timings is not None:
            self.timings[self.stage] = self.timings.get(self.stage, 0.0) + self.duration
        if self.auto_log:
            self.logger.log_stage(self.stage, self.success, self.duration, self.details)
