"""
WeakDataset Domain Model

Records grouped by weak label: the contaminated input of the cleaning
process. Datasets are immutable after construction and safe to share
read-only across worker threads.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from .face_record import FaceRecord
from ...infrastructure.exceptions import (
    DataIntegrityException,
    DataValidationException,
    DimensionMismatchException,
)


@dataclass(frozen=True, eq=False)
class WeakDataset:
    """A weakly labeled dataset.

    Labels iterate in sorted order and record ids inside a group are sorted
    ascending, so every derived computation is independent of file order.

    Attributes:
        records: Records sorted by record_id
        dim: Feature dimension shared by every record
        groups: weak_label -> sorted tuple of record_ids
    """

    records: Tuple[FaceRecord, ...]
    dim: int
    groups: Dict[str, Tuple[int, ...]] = field(default_factory=dict)
    _index: Dict[int, int] = field(default_factory=dict, repr=False)
    _matrix: np.ndarray = field(default=None, repr=False)

    @classmethod
    def from_records(cls, records: Iterable[FaceRecord], dim: Optional[int] = None) -> 'WeakDataset':
        """Build a dataset, grouping records by weak label.

        Args:
            records: The records, in any order
            dim: Expected feature dimension; inferred from the first record when None

        Raises:
            DataIntegrityException: On duplicate record ids
            DimensionMismatchException: When a record's dimension differs
        """
        ordered = sorted(records, key=lambda r: r.record_id)
        if dim is None:
            if not ordered:
                raise DataIntegrityException("no records")
            dim = ordered[0].dim

        index: Dict[int, int] = {}
        grouped: Dict[str, List[int]] = {}
        for position, record in enumerate(ordered):
            if record.record_id in index:
                raise DataIntegrityException(
                    f"duplicate record_id {record.record_id}",
                    record_id=record.record_id
                )
            if record.dim != dim:
                raise DimensionMismatchException(
                    f"record {record.record_id} has dimension {record.dim}",
                    expected=dim,
                    actual=record.dim
                )
            index[record.record_id] = position
            grouped.setdefault(record.weak_label, []).append(record.record_id)

        groups = {label: tuple(grouped[label]) for label in sorted(grouped)}
        if ordered:
            matrix = np.vstack([r.features for r in ordered])
        else:
            matrix = np.zeros((0, dim), dtype=np.float64)
        matrix.setflags(write=False)
        return cls(records=tuple(ordered), dim=int(dim), groups=groups, _index=index, _matrix=matrix)

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise DataValidationException("dimension must be positive", field="dim", value=str(self.dim))
        if self._matrix is None:
            rebuilt = WeakDataset.from_records(self.records, self.dim)
            object.__setattr__(self, "groups", rebuilt.groups)
            object.__setattr__(self, "_index", rebuilt._index)
            object.__setattr__(self, "_matrix", rebuilt._matrix)

    # -- access ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[FaceRecord]:
        return iter(self.records)

    def __contains__(self, record_id: object) -> bool:
        return record_id in self._index

    @property
    def labels(self) -> List[str]:
        """Weak labels in sorted order."""
        return list(self.groups)

    @property
    def record_ids(self) -> List[int]:
        return [r.record_id for r in self.records]

    @property
    def matrix(self) -> np.ndarray:
        """Feature matrix, one row per record in record_id order (read-only)."""
        return self._matrix

    def record(self, record_id: int) -> FaceRecord:
        try:
            return self.records[self._index[record_id]]
        except KeyError:
            raise DataIntegrityException(f"unknown record_id {record_id}", record_id=record_id)

    def group(self, label: str) -> Tuple[int, ...]:
        try:
            return self.groups[label]
        except KeyError:
            raise DataIntegrityException(f"unknown weak label '{label}'", label=label)

    def rows(self, record_ids: Sequence[int]) -> np.ndarray:
        """Row positions of the given record ids in ``matrix``."""
        try:
            return np.fromiter((self._index[int(rid)] for rid in record_ids), dtype=np.intp,
                               count=len(record_ids))
        except KeyError as e:
            raise DataIntegrityException(f"unknown record_id {e.args[0]}", record_id=e.args[0])

    def features_for(self, record_ids: Sequence[int]) -> np.ndarray:
        """Feature matrix of the given records, in the given order."""
        return self._matrix[self.rows(record_ids)]

    @property
    def is_labeled(self) -> bool:
        """True when every record carries a ground-truth label."""
        return bool(self.records) and all(r.is_labeled for r in self.records)

    def correct_count(self) -> int:
        """Number of records whose weak label names their true identity."""
        return sum(1 for r in self.records if r.is_correct)

    # -- derivation -------------------------------------------------------

    def subset(self, labels: Iterable[str]) -> 'WeakDataset':
        """Dataset holding only the named groups."""
        wanted = set(labels)
        unknown = sorted(wanted - set(self.groups))
        if unknown:
            raise DataIntegrityException(f"unknown weak label '{unknown[0]}'", label=unknown[0])
        return WeakDataset.from_records(
            (r for r in self.records if r.weak_label in wanted), self.dim)

    def restrict(self, kept: Mapping[str, Set[int]]) -> 'WeakDataset':
        """The cleaned training set: only kept records, under their weak labels."""
        keep_ids = {rid for ids in kept.values() for rid in ids}
        return WeakDataset.from_records(
            (r for r in self.records if r.record_id in keep_ids), self.dim)

    def with_features(self, features: Mapping[int, Sequence[float]]) -> 'WeakDataset':
        """Replace every record's features (precomputed embeddings).

        Raises:
            DataIntegrityException: When a record has no replacement vector
        """
        missing = [r.record_id for r in self.records if r.record_id not in features]
        if missing:
            raise DataIntegrityException(
                f"no embedding supplied for record_id {missing[0]}", record_id=missing[0])
        return WeakDataset.from_records(r.with_features(features[r.record_id]) for r in self.records)

    def filter_min_size(self, min_size: int) -> 'WeakDataset':
        """Drop groups with fewer than ``min_size`` records."""
        return self.subset(label for label, ids in self.groups.items() if len(ids) >= min_size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeakDataset):
            return NotImplemented
        return self.dim == other.dim and self.records == other.records

    def __repr__(self) -> str:
        return f"WeakDataset(records={len(self.records)}, groups={len(self.groups)}, dim={self.dim})"


def holdout_split(ds: WeakDataset, labels: Iterable[str]) -> Tuple[WeakDataset, WeakDataset]:
    """Split a dataset into (train, eval) by weak label.

    Args:
        ds: The dataset to split
        labels: Labels moved into the evaluation part

    Returns:
        (train, eval) with eval holding exactly the named groups

    Raises:
        DataIntegrityException: If a label is not a group of ``ds``
    """
    held = set(labels)
    for label in sorted(held):
        if label not in ds.groups:
            raise DataIntegrityException(f"unknown weak label '{label}'", label=label)
    train = [r for r in ds.records if r.weak_label not in held]
    evaluation = [r for r in ds.records if r.weak_label in held]
    return WeakDataset.from_records(train, ds.dim), WeakDataset.from_records(evaluation, ds.dim)
