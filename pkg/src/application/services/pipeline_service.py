"""
Pipeline Service - Threshold calibration and the iterative cleaning loop.

Iteration 1 filters the dataset with the base model. Every later iteration
trains the head on the previous cleaned set, recalibrates the threshold at
the same target precision and re-filters the original dataset.
"""

from dataclasses import replace
from typing import Callable, List, Optional, Sequence
import logging

import numpy as np

from .embedding_service import pca_fit
from .match_graph_service import GroupDistances, MatchGraphService
from .metrics_service import purity_counts, verification_accuracy
from .triplet_service import TripletTrainer
from ...domain.models.clean_run import Calibration, CleanRun, IterationConfig
from ...domain.models.embedding_model import EmbeddingModel
from ...domain.models.evaluation import PrPoint, VerificationPair
from ...domain.models.identity_graph import CleanParams
from ...domain.models.weak_dataset import WeakDataset
from ...infrastructure.exceptions import (
    CalibrationException,
    ConfigurationException,
    DataIntegrityException,
    IdentityCleanerException,
    PipelineAbortedException,
)

DEFAULT_PCA_DIM = 32


def candidate_thresholds(distances: GroupDistances, sweep_points: int) -> np.ndarray:
    """Distinct quantiles of the within-group distances, each raised one ulp.

    Raising by one ulp makes an edge at exactly the quantile distance count
    under the strict "distance < T" rule. Capped at 2.
    """
    values = distances.within_group()
    if values.size == 0:
        return np.array([2.0])
    quantiles = np.quantile(values, np.linspace(0.0, 1.0, sweep_points))
    return np.unique(np.minimum(np.nextafter(quantiles, np.inf), 2.0))


def recall_at_precision(curve: Sequence[PrPoint], target: float) -> Optional[float]:
    """Best recall among curve points whose precision reaches ``target``."""
    recalls = [p.recall for p in curve
               if p.precision is not None and p.precision >= target and p.recall is not None]
    return max(recalls) if recalls else None


def calibrate_threshold(model: EmbeddingModel, validation: WeakDataset, target_precision: float,
                        params: Optional[CleanParams] = None, sweep_points: int = 100,
                        service: Optional[MatchGraphService] = None,
                        logger: Optional[logging.Logger] = None) -> Calibration:
    """Largest threshold whose validation precision reaches the target.

    Raises:
        ConfigurationException: When target_precision is outside (0, 1]
        DataIntegrityException: When a validation record lacks a truth label
        CalibrationException: When no candidate reaches the target; carries the best (precision, T)
    """
    logger = logger or logging.getLogger(__name__)
    if not (0.0 < target_precision <= 1.0):
        raise ConfigurationException(f"target_precision must lie in (0, 1], got {target_precision}",
                                     setting="target_precision")
    if not validation.is_labeled:
        raise DataIntegrityException("calibration needs a truth label on every validation record")
    params = params or CleanParams(threshold=1.0)
    service = service or MatchGraphService(logger=logger)

    distances = GroupDistances(validation, model)
    curve = []
    for threshold in candidate_thresholds(distances, sweep_points):
        counts = purity_counts(service.clean_distances(distances, params, threshold=float(threshold)), validation)
        curve.append(PrPoint(float(threshold), counts.precision, counts.recall, counts.kept))

    passing = [p for p in curve if p.precision is not None and p.precision >= target_precision]
    if not passing:
        defined = [p for p in curve if p.precision is not None]
        best = max(defined, key=lambda p: (p.precision, p.threshold)) if defined else None
        raise CalibrationException(
            f"no threshold reaches precision {target_precision}",
            best_precision=None if best is None else best.precision,
            best_threshold=None if best is None else best.threshold)
    chosen = max(passing, key=lambda p: p.threshold)
    logger.info(f"Calibrated T={chosen.threshold:.6g} (precision {chosen.precision:.4f}, recall {chosen.recall})")
    return Calibration(threshold=chosen.threshold, precision=chosen.precision,
                       recall=chosen.recall, curve=curve)


def iteration_seed(seed: int, iteration: int) -> int:
    """Training seed of one pipeline iteration."""
    state = np.random.SeedSequence(seed, spawn_key=(iteration,)).generate_state(1, dtype=np.uint32)
    return int(state[0])


class CleaningPipeline:
    """Service running the iterative clean -> train -> re-clean loop.

    This service handles:
    - Threshold calibration against a labeled validation subset
    - Head training on each cleaned set and PCA refitting
    - Re-filtering the original dataset with each new model
    - Early stopping on small recall gains
    """

    def __init__(self, match_service: Optional[MatchGraphService] = None,
                 trainer: Optional[TripletTrainer] = None,
                 logger: Optional[logging.Logger] = None):
        """Initialize the pipeline.

        Args:
            match_service: Filtering service (carries the worker count)
            trainer: Head trainer
            logger: Optional logger instance
        """
        self.logger = logger or logging.getLogger(__name__)
        self.match_service = match_service or MatchGraphService(logger=self.logger)
        self.trainer = trainer or TripletTrainer(self.logger)

    def run(self, ds: WeakDataset, base_model: EmbeddingModel, validation: WeakDataset,
            cfg: IterationConfig, pairs: Optional[Sequence[VerificationPair]] = None,
            pairs_ds: Optional[WeakDataset] = None, folds: int = 10, pair_seed: int = 0,
            on_iteration: Optional[Callable[[CleanRun], None]] = None) -> List[CleanRun]:
        """Run the pipeline.

        Args:
            ds: Dataset to clean (training labels only)
            base_model: Model of the first pass
            validation: Labeled subset with labels disjoint from ``ds``
            cfg: Pipeline settings
            pairs: Verification pairs; every iteration's model is scored on them when given
            pairs_ds: Dataset holding the pair records (``validation`` when None)
            folds: Verification folds
            pair_seed: Seed of the fold assignment
            on_iteration: Called with each completed run

        Returns:
            One CleanRun per completed iteration

        Raises:
            DataIntegrityException: When validation labels overlap the dataset's
            PipelineAbortedException: When any step of an iteration fails; carries the
                completed runs and takes its exit code from the cause
        """
        overlap = sorted(set(ds.labels) & set(validation.labels))
        if overlap:
            raise DataIntegrityException(f"validation label '{overlap[0]}' also appears in the dataset",
                                         label=overlap[0])

        runs: List[CleanRun] = []
        previous_recall = 0.0
        for iteration in range(1, cfg.max_iterations + 1):
            try:
                if iteration == 1:
                    model, trace = base_model, []
                else:
                    model, trace = self._update_model(ds, runs[-1], cfg, iteration)
                run = self._filter(ds, model, validation, cfg, iteration, trace)
                if pairs is not None:
                    run = replace(run, verification=verification_accuracy(
                        pairs, run.model, pairs_ds if pairs_ds is not None else validation, folds, pair_seed))
            except (IdentityCleanerException, np.linalg.LinAlgError) as e:
                raise PipelineAbortedException(f"iteration {iteration} failed", runs=runs,
                                               iteration=iteration, cause=e) from e
            runs.append(run)
            self.logger.info(str(run))
            if on_iteration is not None:
                on_iteration(run)

            recall = run.effective_recall or 0.0
            gain, previous_recall = recall - previous_recall, recall
            if cfg.min_recall_gain > 0.0 and (gain < cfg.min_recall_gain or 1.0 - recall < cfg.min_recall_gain):
                self.logger.info(f"Stopping after iteration {iteration}: recall gain {gain:.4f}")
                break
        return runs

    def _update_model(self, ds: WeakDataset, previous: CleanRun, cfg: IterationConfig, iteration: int):
        train_cfg = cfg.train_config
        if train_cfg.iterations == 0:
            return previous.model, []
        train_ds = ds.restrict(previous.cleaned.kept)
        result = self.trainer.train_head(
            train_ds, previous.model, train_cfg.with_seed(iteration_seed(train_cfg.seed, iteration)))
        model = result.model
        if cfg.refit_pca:
            k = cfg.pca_dim or min(DEFAULT_PCA_DIM, model.head_dim)
            k = min(k, model.head_dim, len(train_ds))
            model = model.with_pca(pca_fit(model.head_outputs(train_ds.matrix), k))
            self.logger.debug(f"Refit PCA to {k} dimensions on {len(train_ds)} cleaned records")
        return model, result.trace

    def _filter(self, ds: WeakDataset, model: EmbeddingModel, validation: WeakDataset,
                cfg: IterationConfig, iteration: int, trace) -> CleanRun:
        filter_model = model if cfg.filter_with_pca else model.with_pca(None)
        calibration = calibrate_threshold(filter_model, validation, cfg.target_precision,
                                          cfg.clean_params, cfg.sweep_points, self.match_service,
                                          self.logger)
        params = cfg.clean_params.with_threshold(calibration.threshold)
        cleaned = self.match_service.clean_dataset(ds, filter_model, params, iteration=iteration)
        precision = recall = None
        if ds.is_labeled:
            counts = purity_counts(cleaned, ds)
            precision, recall = counts.precision, counts.recall
        return CleanRun(iteration=iteration, cleaned=cleaned, model=model,
                        threshold=calibration.threshold, precision=precision, recall=recall,
                        calibration=calibration, trace=list(trace))


def run_pipeline(ds: WeakDataset, base_model: EmbeddingModel, validation: WeakDataset,
                 cfg: IterationConfig, workers: int = 1,
                 logger: Optional[logging.Logger] = None) -> List[CleanRun]:
    return CleaningPipeline(MatchGraphService(workers, logger), logger=logger).run(
        ds, base_model, validation, cfg)
