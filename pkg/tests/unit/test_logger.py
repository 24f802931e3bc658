"""
Unit tests for the logging framework and stage timer.
"""

import unittest
import tempfile
import shutil
import logging
import sys
import os
from pathlib import Path
from unittest.mock import Mock

# Add the src directory to the path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..'))

from src.infrastructure.logging.logger import CleanerLogger, StageTimer, get_logger


class TestCleanerLogger(unittest.TestCase):
    """Test cases for CleanerLogger."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        logging.getLogger("test.cleaner.file").handlers.clear()
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_console_only_by_default(self):
        logger = CleanerLogger("test.cleaner.console", "DEBUG")
        self.assertEqual(len(logger.logger.handlers), 1)
        self.assertEqual(logger.logger.level, logging.DEBUG)

    def test_file_handler_with_log_dir(self):
        logger = CleanerLogger("test.cleaner.file", "INFO", self.temp_dir)
        logger.info("hello")
        for handler in logger.logger.handlers:
            handler.flush()

        self.assertEqual(len(logger.logger.handlers), 2)
        log_file = Path(self.temp_dir) / CleanerLogger.LOG_FILENAME
        self.assertIn("hello", log_file.read_text(encoding="utf-8"))

    def test_reconfiguring_replaces_handlers(self):
        logger = CleanerLogger("test.cleaner.reconfigure")
        logger.setup_logging("WARNING")
        self.assertEqual(len(logger.logger.handlers), 1)
        self.assertEqual(logger.logger.level, logging.WARNING)

    def test_get_logger_returns_same_instance(self):
        self.assertIs(get_logger("test.cleaner.registry"), get_logger("test.cleaner.registry"))

    def test_log_stage_levels(self):
        logger = CleanerLogger("test.cleaner.stage")
        logger.logger = Mock()

        logger.log_stage("clean", True, 0.5)
        logger.logger.info.assert_called_once()
        logger.log_stage("train_head", True, 120.0)
        logger.logger.warning.assert_called_once()
        logger.log_stage("calibrate", False, 0.1, {"target": 0.99})
        message = logger.logger.error.call_args[0][0]
        self.assertIn("FAILED", message)
        self.assertIn("target=0.99", message)


class TestStageTimer(unittest.TestCase):
    """Test cases for StageTimer."""

    def setUp(self):
        self.logger = Mock(spec=CleanerLogger)

    def test_records_duration(self):
        timings = {}
        with StageTimer(self.logger, "clean", timings) as timer:
            pass

        self.assertIn("clean", timings)
        self.assertGreaterEqual(timings["clean"], 0.0)
        self.assertTrue(timer.success)
        self.logger.log_stage.assert_called_once_with("clean", True, timer.duration, {})

    def test_accumulates_repeated_stage(self):
        timings = {"clean": 1.0}
        with StageTimer(self.logger, "clean", timings, auto_log=False):
            pass
        self.assertGreaterEqual(timings["clean"], 1.0)
        self.logger.log_stage.assert_not_called()

    def test_failure_logged_and_propagated(self):
        timings = {}
        with self.assertRaises(RuntimeError):
            with StageTimer(self.logger, "train_head", timings) as timer:
                raise RuntimeError("boom")

        self.assertFalse(timer.success)
        self.assertIn("train_head", timings)
        self.assertFalse(self.logger.log_stage.call_args[0][1])


if __name__ == '__main__':
    unittest.main()
