"""
Cleaned dataset repository.

A cleaned file is JSONL: a header line carrying the producing iteration and
threshold, then one row per kept record sorted by (weak_label, record_id).
"""

from pathlib import Path
from typing import Optional
import logging

from .base_repository import BaseRepository, PathLike
from ...domain.models.cleaned_dataset import CleanedDataset
from ...infrastructure.exceptions import ParseException

CLEANED_FORMAT = "cleaned-v1"


class FileCleanedRepository(BaseRepository[CleanedDataset]):
    """File-based repository for cleaned datasets."""

    def __init__(self, logger: Optional[logging.Logger] = None):
        super().__init__(logger)

    def load(self, path: PathLike) -> CleanedDataset:
        return self.load_cleaned(path)

    def save(self, entity: CleanedDataset, path: PathLike) -> Path:
        return self.save_cleaned(entity, path)

    def save_cleaned(self, cleaned: CleanedDataset, path: PathLike) -> Path:
        """Write ``cleaned``; an empty kept mapping writes only the header."""
        header = {"header": {
            "format": CLEANED_FORMAT,
            "iteration": cleaned.iteration,
            "threshold_used": cleaned.threshold_used,
        }}
        written = self._save_jsonl_file(path, [header, *cleaned.rows()])
        self.logger.info(f"Saved {cleaned.kept_count} kept records to {written}")
        return written

    def load_cleaned(self, path: PathLike) -> CleanedDataset:
        """Read a cleaned file written by ``save_cleaned``.

        Raises:
            ParseException: On a missing header or malformed row
        """
        iteration: Optional[int] = None
        threshold = 0.0
        rows = []
        for line_no, row in self._iter_jsonl(path):
            if iteration is None:
                header = row.get("header") if isinstance(row, dict) else None
                if not isinstance(header, dict) or header.get("format") != CLEANED_FORMAT:
                    raise self._fail(ParseException(f"missing '{CLEANED_FORMAT}' header",
                                                    path=str(path), line=line_no))
                iteration = int(header.get("iteration", 0))
                threshold = float(header.get("threshold_used", 0.0))
                continue
            if (not isinstance(row, dict) or not isinstance(row.get("weak_label"), str)
                    or not isinstance(row.get("record_id"), int)):
                raise self._fail(ParseException("row needs 'weak_label' and 'record_id'",
                                                path=str(path), line=line_no))
            rows.append(row)
        if iteration is None:
            raise self._fail(ParseException(f"missing '{CLEANED_FORMAT}' header", path=str(path), line=1))
        return CleanedDataset.from_rows(rows, iteration=iteration, threshold_used=threshold)
