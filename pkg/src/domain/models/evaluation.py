"""
Evaluation Domain Types

Precision/recall points of cleaned sets, verification pairs and the
cross-validated verification report.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional

from ...infrastructure.exceptions import ConfigurationException, DataValidationException


class PrecisionRecall(NamedTuple):
    """Purity and recall of a cleaned set; None marks an undefined ratio."""

    precision: Optional[float]
    recall: Optional[float]


@dataclass(frozen=True)
class PurityCounts:
    """Integer counts behind a PrecisionRecall."""

    kept: int
    correct_kept: int
    correct_total: int

    @property
    def precision(self) -> Optional[float]:
        return self.correct_kept / self.kept if self.kept else None

    @property
    def recall(self) -> Optional[float]:
        if self.correct_total == 0:
            return None
        return self.correct_kept / self.correct_total


@dataclass(frozen=True)
class PrPoint:
    """One point of a precision-recall sweep.

    ``precision`` is None when nothing was kept at this threshold.
    """

    threshold: float
    precision: Optional[float]
    recall: Optional[float]
    kept_count: int

    def __post_init__(self) -> None:
        if self.kept_count < 0:
            raise DataValidationException("kept_count must be non-negative", field="kept_count",
                                          value=str(self.kept_count))
        for name in ("precision", "recall"):
            value = getattr(self, name)
            if value is not None and not (0.0 <= value <= 1.0):
                raise DataValidationException(f"{name} must lie in [0, 1]", field=name, value=str(value))
        if self.precision is not None:
            correct = self.precision * self.kept_count
            if abs(correct - round(correct)) > 1e-9:
                raise DataValidationException("precision is not a ratio over kept_count",
                                              field="precision", value=str(self.precision))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "threshold": self.threshold,
            "precision": self.precision,
            "recall": self.recall,
            "kept_count": self.kept_count,
        }


@dataclass(frozen=True)
class VerificationPair:
    """A same/different pair for the verification protocol."""

    a: int
    b: int
    same: bool

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise DataValidationException("a pair needs two different records", field="b", value=str(self.b))

    def to_dict(self) -> Dict[str, Any]:
        return {"a": self.a, "b": self.b, "same": self.same}


@dataclass(frozen=True)
class VerificationReport:
    """Cross-validated verification accuracy."""

    mean_accuracy: float
    std_accuracy: float
    fold_accuracies: List[float] = field(default_factory=list)
    thresholds: List[float] = field(default_factory=list)
    n_pairs: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "fold_accuracies": list(self.fold_accuracies),
            "thresholds": list(self.thresholds),
            "n_pairs": self.n_pairs,
        }

    def __str__(self) -> str:
        return f"accuracy {self.mean_accuracy:.4f} ± {self.std_accuracy:.4f} over {len(self.fold_accuracies)} folds"


@dataclass(frozen=True)
class EvalConfig:
    """Settings of the evaluation commands.

    Attributes:
        n_pos: Positive verification pairs
        n_neg: Negative verification pairs
        folds: Cross-validation folds
        sweep_points: Thresholds of a PR sweep
        sweep_min: Lowest swept threshold
        sweep_max: Highest swept threshold
        seed: Seed of pair sampling and fold assignment
    """

    n_pos: int = 1000
    n_neg: int = 1000
    folds: int = 10
    sweep_points: int = 50
    sweep_min: float = 0.01
    sweep_max: float = 2.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_pos < 0 or self.n_neg < 0:
            raise ConfigurationException("pair counts must be non-negative", setting="n_pos/n_neg")
        if self.folds < 2:
            raise ConfigurationException("folds must be at least 2", setting="folds")
        if self.sweep_points < 1:
            raise ConfigurationException("sweep_points must be positive", setting="sweep_points")
        if not (0.0 < self.sweep_min <= self.sweep_max):
            raise ConfigurationException("sweep range must satisfy 0 < min <= max",
                                         setting="sweep_min/sweep_max")
        if self.seed < 0:
            raise ConfigurationException("seed must be unsigned", setting="seed")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "folds": self.folds,
            "sweep_points": self.sweep_points,
            "sweep_min": self.sweep_min,
            "sweep_max": self.sweep_max,
            "seed": self.seed,
        }
