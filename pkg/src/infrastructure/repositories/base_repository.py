"""
Base repository interface and common functionality.

Provides the abstract base class that all file repositories implement,
along with JSON and JSONL helpers that translate low-level errors into the
identity cleaner's exception types.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Generic, Iterable, Iterator, Optional, Tuple, TypeVar, Union
from pathlib import Path
import json
import logging

from ...infrastructure.exceptions import (
    DataValidationException,
    ParseException,
    StorageAccessException,
)

T = TypeVar('T')

PathLike = Union[str, Path]


class BaseRepository(ABC, Generic[T]):
    """Abstract base class for all repository implementations.

    Provides common functionality for file persistence including error
    translation, last-error tracking and logging.
    """

    def __init__(self, logger: Optional[logging.Logger] = None):
        """Initialize the repository with optional logger.

        Args:
            logger: Optional logger instance for operation logging
        """
        self.logger = logger or logging.getLogger(self.__class__.__name__)
        self._last_error: Optional[Exception] = None

    @abstractmethod
    def load(self, path: PathLike) -> T:
        """Load an entity from a file.

        Raises:
            StorageAccessException: When the file is inaccessible
            ParseException: When the file content is malformed
        """
        pass

    @abstractmethod
    def save(self, entity: T, path: PathLike) -> Path:
        """Save an entity to a file.

        Returns:
            The path written

        Raises:
            StorageAccessException: When the file cannot be written
        """
        pass

    def exists(self, path: PathLike) -> bool:
        """Check if the file exists and is readable."""
        try:
            return Path(path).is_file()
        except OSError:
            return False

    def get_last_error(self) -> Optional[Exception]:
        """Get the last error that occurred during repository operations.

        Returns:
            The last exception that occurred, or None if no errors
        """
        return self._last_error

    def _set_error(self, error: Exception) -> None:
        """Set the last error and log it."""
        self._last_error = error
        self.logger.error(f"Repository error in {self.__class__.__name__}: {error}")

    def _fail(self, error: Exception) -> Exception:
        self._set_error(error)
        return error

    def _load_json_file(self, file_path: PathLike) -> Any:
        """Load and parse a JSON file.

        Raises:
            StorageAccessException: When the file cannot be read
            ParseException: When the JSON is malformed
        """
        file_path = Path(file_path)
        self.logger.debug(f"Loading JSON file: {file_path}")
        try:
            with open(file_path, 'rb') as file:
                raw = file.read()
            data = json.loads(raw.decode('utf-8'))
        except UnicodeDecodeError as e:
            raise self._fail(ParseException(f"Invalid UTF-8: {e.reason}", path=str(file_path),
                                            line=raw[:e.start].count(b"\n") + 1))
        except json.JSONDecodeError as e:
            raise self._fail(ParseException(f"Invalid JSON: {e.msg}", path=str(file_path), line=e.lineno))
        except FileNotFoundError:
            raise self._fail(StorageAccessException(f"File not found: {file_path}",
                                                    path=str(file_path), operation="read"))
        except OSError as e:
            raise self._fail(StorageAccessException(f"Failed to read file: {e}",
                                                    path=str(file_path), operation="read"))
        self.logger.debug(f"Successfully loaded JSON file: {file_path}")
        return data

    def _save_json_file(self, file_path: PathLike, data: Any) -> Path:
        """Write data as indented JSON with a trailing newline.

        Raises:
            StorageAccessException: When the file cannot be written
            DataValidationException: When the data cannot be serialized
        """
        file_path = Path(file_path)
        try:
            content = json.dumps(data, indent=2, ensure_ascii=False, allow_nan=False) + "\n"
        except (TypeError, ValueError) as e:
            raise self._fail(DataValidationException(f"Data serialization failed for {file_path}: {e}"))
        self._write_text(file_path, content)
        return file_path

    def _iter_jsonl(self, file_path: PathLike) -> Iterator[Tuple[int, Any]]:
        """Yield (line number, parsed object) for every non-blank line.

        Raises:
            StorageAccessException: When the file cannot be read
            ParseException: On a line that is not valid UTF-8 or not valid JSON
        """
        file_path = Path(file_path)
        self.logger.debug(f"Reading JSONL file: {file_path}")
        try:
            with open(file_path, 'rb') as file:
                for line_no, raw in enumerate(file, start=1):
                    try:
                        line = raw.decode('utf-8')
                    except UnicodeDecodeError as e:
                        raise self._fail(ParseException(f"Invalid UTF-8: {e.reason}",
                                                        path=str(file_path), line=line_no))
                    if not line.strip():
                        continue
                    try:
                        yield line_no, json.loads(line)
                    except json.JSONDecodeError as e:
                        raise self._fail(ParseException(f"Malformed row: {e.msg}",
                                                        path=str(file_path), line=line_no))
        except FileNotFoundError:
            raise self._fail(StorageAccessException(f"File not found: {file_path}",
                                                    path=str(file_path), operation="read"))
        except OSError as e:
            raise self._fail(StorageAccessException(f"Failed to read file: {e}",
                                                    path=str(file_path), operation="read"))

    def _save_jsonl_file(self, file_path: PathLike, rows: Iterable[Dict[str, Any]]) -> Path:
        """Write one compact JSON object per line."""
        file_path = Path(file_path)
        try:
            content = "".join(json.dumps(row, ensure_ascii=False, allow_nan=False) + "\n" for row in rows)
        except (TypeError, ValueError) as e:
            raise self._fail(DataValidationException(f"Data serialization failed for {file_path}: {e}"))
        self._write_text(file_path, content)
        return file_path

    def _write_text(self, file_path: Path, content: str) -> None:
        try:
            file_path.parent.mkdir(parents=True, exist_ok=True)
            with open(file_path, 'w', encoding='utf-8', newline='\n') as file:
                file.write(content)
        except OSError as e:
            raise self._fail(StorageAccessException(f"Failed to write file: {e}",
                                                    path=str(file_path), operation="write"))
        self.logger.debug(f"Successfully wrote file: {file_path}")
