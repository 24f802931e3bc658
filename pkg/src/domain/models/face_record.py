"""
FaceRecord Domain Model

Represents one observation of a weakly labeled dataset: a raw feature vector,
the weak label it was collected under and, for evaluation subsets, the
ground-truth identity.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np

from ...infrastructure.exceptions import DataValidationException


@dataclass(frozen=True, eq=False)
class FaceRecord:
    """A single weakly labeled observation.

    Attributes:
        record_id: Unique non-negative integer within a dataset
        weak_label: The query name the record was collected under (opaque string)
        features: Raw feature vector, float64, read-only
        truth_label: Ground-truth identity, present only for evaluation subsets
    """

    record_id: int
    weak_label: str
    features: np.ndarray
    truth_label: Optional[str] = None

    def __post_init__(self) -> None:
        """Validate and freeze the record after initialization."""
        features = np.array(self.features, dtype=np.float64)
        features.setflags(write=False)
        object.__setattr__(self, "features", features)
        self._validate()

    def _validate(self) -> None:
        """Validate record fields."""
        if isinstance(self.record_id, bool) or not isinstance(self.record_id, (int, np.integer)):
            raise DataValidationException(
                "record_id must be an integer",
                field="record_id",
                value=str(self.record_id)
            )
        if self.record_id < 0:
            raise DataValidationException(
                "record_id must be non-negative",
                field="record_id",
                value=str(self.record_id)
            )
        object.__setattr__(self, "record_id", int(self.record_id))

        if not isinstance(self.weak_label, str) or not self.weak_label:
            raise DataValidationException(
                "weak_label must be a non-empty string",
                field="weak_label",
                value=str(self.weak_label)
            )

        if self.features.ndim != 1 or self.features.size == 0:
            raise DataValidationException(
                "features must be a non-empty vector",
                field="features",
                value=str(self.features.shape)
            )
        if not np.all(np.isfinite(self.features)):
            raise DataValidationException(
                f"features of record {self.record_id} contain non-finite values",
                field="features"
            )

        if self.truth_label is not None and not isinstance(self.truth_label, str):
            raise DataValidationException(
                "truth_label must be a string or null",
                field="truth_label",
                value=str(self.truth_label)
            )

    @property
    def dim(self) -> int:
        """Dimension of the raw feature vector."""
        return int(self.features.shape[0])

    @property
    def is_labeled(self) -> bool:
        """True when a ground-truth label is attached."""
        return self.truth_label is not None

    @property
    def is_correct(self) -> bool:
        """True when the weak label names the record's true identity."""
        return self.truth_label == self.weak_label

    def with_features(self, features: Sequence[float]) -> 'FaceRecord':
        """Return a copy carrying different features (e.g. precomputed embeddings)."""
        return FaceRecord(self.record_id, self.weak_label, np.asarray(features), self.truth_label)

    def to_dict(self) -> Dict[str, Any]:
        """Convert the record to its JSONL representation."""
        return {
            "record_id": self.record_id,
            "weak_label": self.weak_label,
            "features": self.features.tolist(),
            "truth_label": self.truth_label,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'FaceRecord':
        """Create a record from its JSONL representation.

        Raises:
            DataValidationException: If required fields are missing or invalid
        """
        if not isinstance(data, dict):
            raise DataValidationException(
                "Record data must be a dictionary",
                field="data",
                value=str(type(data))
            )
        for key in ("record_id", "weak_label", "features"):
            if key not in data:
                raise DataValidationException(
                    f"Record data must contain '{key}' field",
                    field=key,
                    value="missing"
                )
        features = data["features"]
        if not isinstance(features, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in features):
            raise DataValidationException(
                "features must be a list of numbers",
                field="features"
            )
        return cls(
            record_id=data["record_id"],
            weak_label=data["weak_label"],
            features=np.asarray(features, dtype=np.float64),
            truth_label=data.get("truth_label")
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FaceRecord):
            return NotImplemented
        return (self.record_id == other.record_id
                and self.weak_label == other.weak_label
                and self.truth_label == other.truth_label
                and np.array_equal(self.features, other.features))

    def __hash__(self) -> int:
        return hash((self.record_id, self.weak_label, self.truth_label))

    def __repr__(self) -> str:
        """Developer representation of the record."""
        return (f"FaceRecord(record_id={self.record_id}, weak_label='{self.weak_label}', "
                f"dim={self.dim}, truth_label={self.truth_label!r})")
