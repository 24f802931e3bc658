"""
Dataset repository for weakly labeled records.

Reads datasets from JSONL (canonical) or CSV (features-only import) and
writes the canonical JSONL form. Also reads precomputed embeddings.
"""

from abc import abstractmethod
from pathlib import Path
from typing import Dict, List, Optional
import logging

import numpy as np
import pandas as pd

from .base_repository import BaseRepository, PathLike
from ...domain.models.face_record import FaceRecord
from ...domain.models.weak_dataset import WeakDataset
from ...infrastructure.exceptions import (
    ConfigurationException,
    DataIntegrityException,
    DataValidationException,
    DimensionMismatchException,
    ParseException,
    StorageAccessException,
)

FORMATS = ("jsonl", "csv")


class DatasetRepository(BaseRepository[WeakDataset]):
    """Abstract repository for dataset files."""

    @abstractmethod
    def load_dataset(self, path: PathLike, format: Optional[str] = None) -> WeakDataset:
        """Load a dataset; ``format`` is inferred from the suffix when None."""
        pass

    @abstractmethod
    def save_dataset(self, ds: WeakDataset, path: PathLike) -> Path:
        """Write a dataset as JSONL."""
        pass

    @abstractmethod
    def load_embeddings(self, path: PathLike) -> Dict[int, np.ndarray]:
        """Load precomputed embeddings keyed by record_id."""
        pass


class FileDatasetRepository(DatasetRepository):
    """File-based dataset repository."""

    CSV_REQUIRED = ("record_id", "weak_label")

    def __init__(self, logger: Optional[logging.Logger] = None):
        super().__init__(logger)

    def load(self, path: PathLike) -> WeakDataset:
        return self.load_dataset(path)

    def save(self, entity: WeakDataset, path: PathLike) -> Path:
        return self.save_dataset(entity, path)

    def load_dataset(self, path: PathLike, format: Optional[str] = None) -> WeakDataset:
        """Load a dataset file.

        Args:
            path: Dataset file
            format: "jsonl" or "csv"; inferred from the suffix when None

        Returns:
            The dataset with groups built by weak label

        Raises:
            ParseException: On a malformed row, naming its line
            DimensionMismatchException: When a row's dimension differs from the first
            DataIntegrityException: On duplicate record ids or an empty file ("no records")
        """
        path = Path(path)
        format = (format or path.suffix.lstrip(".") or "jsonl").lower()
        if format not in FORMATS:
            raise ConfigurationException(f"unknown dataset format '{format}'", setting="format")

        records = self._read_csv(path) if format == "csv" else self._read_jsonl(path)
        if not records:
            raise self._fail(DataIntegrityException(f"no records in {path}"))

        ds = WeakDataset.from_records(records)
        self.logger.info(f"Loaded {len(ds)} records in {len(ds.groups)} groups from {path}")
        return ds

    def _read_jsonl(self, path: Path) -> List[FaceRecord]:
        records: List[FaceRecord] = []
        seen: Dict[int, int] = {}
        dim: Optional[int] = None
        for line_no, row in self._iter_jsonl(path):
            try:
                record = FaceRecord.from_dict(row)
            except DataValidationException as e:
                raise self._fail(ParseException(e.message, path=str(path), line=line_no))
            dim = self._check_row(record, dim, seen, line_no)
            records.append(record)
        return records

    def _read_csv(self, path: Path) -> List[FaceRecord]:
        try:
            frame = pd.read_csv(path, dtype={"weak_label": str, "truth_label": str})
        except pd.errors.EmptyDataError:
            return []
        except pd.errors.ParserError as e:
            raise self._fail(ParseException(f"Malformed CSV: {e}", path=str(path)))
        except UnicodeDecodeError as e:
            raise self._fail(ParseException(f"Invalid UTF-8: {e.reason}", path=str(path)))
        except FileNotFoundError:
            raise self._fail(StorageAccessException(f"File not found: {path}",
                                                    path=str(path), operation="read"))
        except OSError as e:
            raise self._fail(StorageAccessException(f"Failed to read file: {e}",
                                                    path=str(path), operation="read"))

        missing = [c for c in self.CSV_REQUIRED if c not in frame.columns]
        if missing:
            raise self._fail(ParseException(f"CSV header lacks column '{missing[0]}'", path=str(path), line=1))
        feature_columns = [c for c in frame.columns if c not in (*self.CSV_REQUIRED, "truth_label")]
        if not feature_columns:
            raise self._fail(ParseException("CSV has no feature columns", path=str(path), line=1))

        values = frame[feature_columns].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
        truth = frame["truth_label"] if "truth_label" in frame.columns else None
        expected = len(feature_columns)

        records: List[FaceRecord] = []
        seen: Dict[int, int] = {}
        for position, (record_id, weak_label) in enumerate(zip(frame["record_id"], frame["weak_label"])):
            line_no = position + 2  # header is line 1
            row = values[position]
            present = int(np.sum(~np.isnan(row)))
            if present != expected:
                raise self._fail(DimensionMismatchException(
                    "row has missing or non-numeric feature values",
                    expected=expected, actual=present, line=line_no))
            label = None
            if truth is not None and not pd.isna(truth.iloc[position]):
                label = str(truth.iloc[position])
            try:
                record = FaceRecord(int(record_id), str(weak_label), row, label)
            except (DataValidationException, ValueError, TypeError) as e:
                raise self._fail(ParseException(f"Invalid row: {e}", path=str(path), line=line_no))
            self._check_row(record, expected, seen, line_no)
            records.append(record)
        return records

    def _check_row(self, record: FaceRecord, dim: Optional[int], seen: Dict[int, int], line_no: int) -> int:
        if dim is not None and record.dim != dim:
            raise self._fail(DimensionMismatchException(
                f"record {record.record_id} has dimension {record.dim}",
                expected=dim, actual=record.dim, line=line_no))
        if record.record_id in seen:
            raise self._fail(DataIntegrityException(
                f"duplicate record_id {record.record_id} at line {line_no} "
                f"(first seen at line {seen[record.record_id]})",
                record_id=record.record_id))
        seen[record.record_id] = line_no
        return record.dim

    def save_dataset(self, ds: WeakDataset, path: PathLike) -> Path:
        """Write ``ds`` as JSONL, one record per line in record_id order."""
        written = self._save_jsonl_file(path, (record.to_dict() for record in ds))
        self.logger.info(f"Saved {len(ds)} records to {written}")
        return written

    def load_embeddings(self, path: PathLike) -> Dict[int, np.ndarray]:
        """Load ``{"record_id", "embedding"}`` rows.

        Raises:
            ParseException: On a malformed row
            DimensionMismatchException: When embedding lengths differ
            DataIntegrityException: On a duplicate record_id
        """
        embeddings: Dict[int, np.ndarray] = {}
        dim: Optional[int] = None
        for line_no, row in self._iter_jsonl(path):
            if not isinstance(row, dict) or "record_id" not in row or "embedding" not in row:
                raise self._fail(ParseException("row needs 'record_id' and 'embedding'",
                                                path=str(path), line=line_no))
            try:
                vector = np.asarray(row["embedding"], dtype=np.float64)
                record_id = int(row["record_id"])
            except (TypeError, ValueError) as e:
                raise self._fail(ParseException(f"Invalid row: {e}", path=str(path), line=line_no))
            if vector.ndim != 1 or vector.size == 0 or not np.all(np.isfinite(vector)):
                raise self._fail(ParseException("embedding must be a finite non-empty vector",
                                                path=str(path), line=line_no))
            if dim is not None and vector.size != dim:
                raise self._fail(DimensionMismatchException("embedding dimension differs",
                                                            expected=dim, actual=vector.size, line=line_no))
            if record_id in embeddings:
                raise self._fail(DataIntegrityException(f"duplicate record_id {record_id} at line {line_no}",
                                                        record_id=record_id))
            dim = vector.size
            embeddings[record_id] = vector
        self.logger.info(f"Loaded {len(embeddings)} precomputed embeddings from {path}")
        return embeddings
