"""
Pipeline Domain Types

Configuration of the iterative clean -> train -> re-clean loop, the
threshold calibration result and the record of one completed iteration.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .cleaned_dataset import CleanedDataset
from .embedding_model import EmbeddingModel
from .evaluation import PrPoint, VerificationReport
from .identity_graph import CleanParams
from .triplet import TrainConfig, TrainStep
from ...infrastructure.exceptions import ConfigurationException


@dataclass(frozen=True)
class IterationConfig:
    """Settings of the iterative cleaning pipeline.

    ``min_recall_gain`` is an early-stop rule of this implementation: after
    iteration i the loop stops when the recall gained over iteration i-1 (or
    over 0 for the first pass) is below it, or when less than that much
    recall is left to gain.

    Attributes:
        max_iterations: Filtering passes to run at most
        target_precision: Precision every pass is calibrated to
        min_recall_gain: Early-stop gain, 0 disables it
        clean_params: Component rule and size gate; the threshold is recalibrated
        train_config: Head training between passes
        refit_pca: Refit PCA on the cleaned set's head outputs after training
        pca_dim: PCA output dimension; None means min(32, e)
        filter_with_pca: Filter with post-PCA embeddings when a PCA is fitted
        sweep_points: Candidate thresholds of each calibration
    """

    max_iterations: int = 2
    target_precision: float = 0.99
    min_recall_gain: float = 0.0
    clean_params: CleanParams = field(default_factory=lambda: CleanParams(threshold=1.0))
    train_config: TrainConfig = field(default_factory=TrainConfig)
    refit_pca: bool = True
    pca_dim: Optional[int] = None
    filter_with_pca: bool = True
    sweep_points: int = 100

    def __post_init__(self) -> None:
        self._validate()

    def _validate(self) -> None:
        if self.max_iterations < 1:
            raise ConfigurationException("max_iterations must be positive", setting="max_iterations")
        if not (0.0 < self.target_precision <= 1.0):
            raise ConfigurationException(
                f"target_precision must lie in (0, 1], got {self.target_precision}",
                setting="target_precision")
        if not self.min_recall_gain >= 0.0:
            raise ConfigurationException("min_recall_gain must be non-negative", setting="min_recall_gain")
        if self.pca_dim is not None and self.pca_dim < 1:
            raise ConfigurationException("pca_dim must be positive", setting="pca_dim")
        if self.sweep_points < 2:
            raise ConfigurationException("sweep_points must be at least 2", setting="sweep_points")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "max_iterations": self.max_iterations,
            "target_precision": self.target_precision,
            "min_recall_gain": self.min_recall_gain,
            "clean_params": self.clean_params.to_dict(),
            "train_config": self.train_config.to_dict(),
            "refit_pca": self.refit_pca,
            "pca_dim": self.pca_dim,
            "filter_with_pca": self.filter_with_pca,
            "sweep_points": self.sweep_points,
        }


@dataclass(frozen=True)
class Calibration:
    """The calibrated threshold and the sweep it was read from."""

    threshold: float
    precision: float
    recall: Optional[float]
    curve: List[PrPoint] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "threshold": self.threshold,
            "precision": self.precision,
            "recall": self.recall,
            "curve": [point.to_dict() for point in self.curve],
        }


@dataclass(frozen=True, eq=False)
class CleanRun:
    """One completed pipeline iteration.

    ``precision`` and ``recall`` are measured on the filtered dataset and are
    None when it carries no ground truth; the validation figures are always
    present since calibration needs them.

    Attributes:
        iteration: 1-based pass number
        cleaned: Kept records of the original dataset
        model: Model that produced the filtering embeddings
        threshold: Calibrated T
        precision: Precision on the filtered dataset, when labeled
        recall: Recall on the filtered dataset, when labeled
        calibration: Validation sweep behind ``threshold``
        trace: Loss trace of the training that produced ``model``
        verification: Verification report of ``model``, when requested
    """

    iteration: int
    cleaned: CleanedDataset
    model: EmbeddingModel
    threshold: float
    precision: Optional[float]
    recall: Optional[float]
    calibration: Calibration
    trace: List[TrainStep] = field(default_factory=list)
    verification: Optional[VerificationReport] = None

    @property
    def effective_recall(self) -> Optional[float]:
        """Recall the early-stop rule reads: dataset recall, else validation recall."""
        return self.recall if self.recall is not None else self.calibration.recall

    def to_dict(self) -> Dict[str, Any]:
        """Manifest entry; artifacts paths are added by the writer."""
        return {
            "iteration": self.iteration,
            "threshold": self.threshold,
            "precision": self.precision,
            "recall": self.recall,
            "kept_count": self.cleaned.kept_count,
            "validation_precision": self.calibration.precision,
            "validation_recall": self.calibration.recall,
            "train_steps": len(self.trace),
            "verification": None if self.verification is None else self.verification.to_dict(),
        }

    def __str__(self) -> str:
        recall = "n/a" if self.recall is None else f"{self.recall:.4f}"
        return (f"iteration {self.iteration}: T={self.threshold:.6g}, "
                f"kept={self.cleaned.kept_count}, recall={recall}")
