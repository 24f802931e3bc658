"""
CleanedDataset Domain Model

The output of one filtering pass: for every weak label, the record ids kept
as correctly labeled.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional

from .weak_dataset import WeakDataset
from ...infrastructure.exceptions import DataIntegrityException, DataValidationException


@dataclass(frozen=True)
class CleanedDataset:
    """Kept record ids per weak label.

    Labels with an empty kept set are dropped, so two cleaned datasets that
    keep the same records compare equal however they were produced.

    Attributes:
        kept: weak_label -> frozenset of kept record_ids
        iteration: Pipeline pass that produced the set (1-based; 0 for ad-hoc runs)
        threshold_used: Distance threshold T of the match graphs
    """

    kept: Mapping[str, FrozenSet[int]] = field(default_factory=dict)
    iteration: int = 0
    threshold_used: float = 0.0

    def __post_init__(self) -> None:
        canonical = {
            label: frozenset(int(rid) for rid in ids)
            for label, ids in sorted(self.kept.items())
            if ids
        }
        object.__setattr__(self, "kept", canonical)
        self._validate()

    def _validate(self) -> None:
        if self.iteration < 0:
            raise DataValidationException(
                "iteration must be non-negative", field="iteration", value=str(self.iteration))
        if not self.threshold_used >= 0.0:
            raise DataValidationException(
                "threshold_used must be non-negative", field="threshold_used",
                value=str(self.threshold_used))

    @property
    def kept_count(self) -> int:
        return sum(len(ids) for ids in self.kept.values())

    @property
    def kept_ids(self) -> FrozenSet[int]:
        return frozenset(rid for ids in self.kept.values() for rid in ids)

    def kept_for(self, label: str) -> FrozenSet[int]:
        return self.kept.get(label, frozenset())

    def check_against(self, ds: WeakDataset) -> None:
        """Verify that every kept set lies inside its source group.

        Raises:
            DataIntegrityException: On a label or record outside ``ds``
        """
        for label, ids in self.kept.items():
            group = set(ds.group(label))
            stray = sorted(ids - group)
            if stray:
                raise DataIntegrityException(
                    f"kept record {stray[0]} is not in group '{label}'",
                    record_id=stray[0], label=label)

    def rows(self) -> List[Dict[str, Any]]:
        """JSONL rows sorted by (label, record_id)."""
        return [
            {"weak_label": label, "record_id": rid, "iteration": self.iteration}
            for label, ids in self.kept.items()
            for rid in sorted(ids)
        ]

    @classmethod
    def from_rows(cls, rows: Iterable[Mapping[str, Any]], iteration: int = 0,
                  threshold_used: float = 0.0) -> 'CleanedDataset':
        kept: Dict[str, set] = {}
        for row in rows:
            kept.setdefault(row["weak_label"], set()).add(int(row["record_id"]))
        return cls(kept=kept, iteration=iteration, threshold_used=threshold_used)

    def __str__(self) -> str:
        return (f"CleanedDataset(iteration={self.iteration}, T={self.threshold_used:.6g}, "
                f"kept={self.kept_count} in {len(self.kept)} groups)")
