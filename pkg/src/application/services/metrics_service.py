"""
Metrics Service - Purity, recall and verification accuracy.

Precision and recall of cleaned sets are ratios of integer counts; the
verification protocol is a seeded, stratified k-fold cross-validation of a
distance threshold over same/different pairs.
"""

from itertools import combinations
from typing import List, Optional, Sequence
import logging

import numpy as np
from sklearn.model_selection import StratifiedKFold

from .embedding_service import embed_many
from .match_graph_service import GroupDistances, MatchGraphService
from ...domain.models.cleaned_dataset import CleanedDataset
from ...domain.models.embedding_model import EmbeddingModel
from ...domain.models.evaluation import (
    PrecisionRecall,
    PrPoint,
    PurityCounts,
    VerificationPair,
    VerificationReport,
)
from ...domain.models.identity_graph import CleanParams
from ...domain.models.weak_dataset import WeakDataset
from ...infrastructure.exceptions import (
    ConfigurationException,
    DataIntegrityException,
    DataValidationException,
)

logger = logging.getLogger(__name__)

MIN_VERIFICATION_PAIRS = 10

# Above this many records negatives are drawn by rejection instead of enumerated
ENUMERATE_LIMIT = 2000


def _require_truth(ds: WeakDataset) -> None:
    for record in ds:
        if not record.is_labeled:
            raise DataIntegrityException("record has no truth label", record_id=record.record_id,
                                         label=record.weak_label)


def purity_counts(cleaned: CleanedDataset, ds: WeakDataset) -> PurityCounts:
    """Integer counts behind precision and recall.

    A kept record is correct iff its truth label equals its weak label.

    Raises:
        DataIntegrityException: When a record lacks a truth label or a kept record is outside ``ds``
    """
    _require_truth(ds)
    cleaned.check_against(ds)
    kept = cleaned.kept_ids
    correct_kept = sum(1 for rid in kept if ds.record(rid).is_correct)
    return PurityCounts(kept=len(kept), correct_kept=correct_kept, correct_total=ds.correct_count())


def precision_recall(cleaned: CleanedDataset, ds: WeakDataset) -> PrecisionRecall:
    """(precision, recall) of ``cleaned``; None marks an undefined ratio."""
    counts = purity_counts(cleaned, ds)
    return PrecisionRecall(counts.precision, counts.recall)


def pr_curve(ds: WeakDataset, model: EmbeddingModel, params: CleanParams, thresholds: Sequence[float],
             service: Optional[MatchGraphService] = None,
             distances: Optional[GroupDistances] = None) -> List[PrPoint]:
    """One PrPoint per threshold.

    Raises:
        DataValidationException: When thresholds are not sorted ascending
    """
    thresholds = [float(t) for t in thresholds]
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise DataValidationException("thresholds must be sorted ascending", field="thresholds")
    _require_truth(ds)
    service = service or MatchGraphService()
    distances = distances or GroupDistances(ds, model)
    curve = []
    for threshold in thresholds:
        cleaned = service.clean_distances(distances, params, threshold=threshold)
        counts = purity_counts(cleaned, ds)
        curve.append(PrPoint(threshold, counts.precision, counts.recall, counts.kept))
    return curve


def make_pairs(eval_ds: WeakDataset, n_pos: int, n_neg: int, rng: np.random.Generator) -> List[VerificationPair]:
    """Sample same-identity and different-identity pairs by truth label.

    Pairs are distinct (a < b) and shuffled together.

    Raises:
        DataIntegrityException: When a record lacks a truth label or fewer than 2 identities exist
        ConfigurationException: When more pairs are requested than exist
    """
    _require_truth(eval_ds)
    ids = np.asarray(eval_ds.record_ids, dtype=np.int64)
    truth = np.array([r.truth_label for r in eval_ds])
    identities = np.unique(truth)
    if identities.size < 2:
        raise DataIntegrityException("verification pairs need at least 2 truth identities")

    positives = np.array([pair for identity in identities
                          for pair in combinations(ids[truth == identity].tolist(), 2)],
                         dtype=np.int64).reshape(-1, 2)
    n_total = ids.size * (ids.size - 1) // 2
    available_neg = n_total - len(positives)
    if n_pos > len(positives):
        raise ConfigurationException(f"requested {n_pos} positive pairs, only {len(positives)} exist",
                                     setting="n_pos")
    if n_neg > available_neg:
        raise ConfigurationException(f"requested {n_neg} negative pairs, only {available_neg} exist",
                                     setting="n_neg")

    chosen_pos = positives[rng.choice(len(positives), size=n_pos, replace=False)]
    if ids.size <= ENUMERATE_LIMIT or 2 * n_neg > available_neg:
        i, j = np.triu_indices(ids.size, k=1)
        different = truth[i] != truth[j]
        candidates = np.stack([ids[i[different]], ids[j[different]]], axis=1)
        chosen_neg = candidates[rng.choice(len(candidates), size=n_neg, replace=False)]
    else:
        chosen_neg = _rejection_negatives(ids, truth, n_neg, rng)

    pairs = [VerificationPair(int(a), int(b), True) for a, b in chosen_pos]
    pairs += [VerificationPair(int(a), int(b), False) for a, b in chosen_neg]
    order = rng.permutation(len(pairs))
    return [pairs[k] for k in order]


def _rejection_negatives(ids: np.ndarray, truth: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    seen = set()
    chosen = []
    while len(chosen) < n:
        i = rng.integers(ids.size, size=2 * n)
        j = rng.integers(ids.size, size=2 * n)
        for a, b in zip(i.tolist(), j.tolist()):
            if truth[a] == truth[b]:
                continue
            key = (min(a, b), max(a, b))
            if key in seen:
                continue
            seen.add(key)
            chosen.append((ids[key[0]], ids[key[1]]))
            if len(chosen) == n:
                break
    return np.array(chosen, dtype=np.int64).reshape(-1, 2)


def pair_distances(pairs: Sequence[VerificationPair], model: EmbeddingModel, ds: WeakDataset) -> np.ndarray:
    """Embedding distance of every pair."""
    a = np.array([p.a for p in pairs], dtype=np.int64)
    b = np.array([p.b for p in pairs], dtype=np.int64)
    ids = np.unique(np.concatenate([a, b]))
    embeddings = embed_many(model, ds.features_for(ids), ids)
    return np.linalg.norm(embeddings[np.searchsorted(ids, a)] - embeddings[np.searchsorted(ids, b)], axis=1)


def best_threshold(distances: np.ndarray, same: np.ndarray):
    """Threshold maximizing training accuracy of "same iff distance < threshold".

    Candidates are the midpoints of consecutive distinct distances plus one
    sentinel above the maximum; the lowest threshold wins ties. Returns
    (threshold, cut) where ``cut`` is the largest training distance judged
    "same" (infinite for the sentinel).
    """
    values = np.unique(distances)
    cuts = np.append(values[:-1], np.inf)
    thresholds = np.append((values[:-1] + values[1:]) / 2.0, values[-1] + 1.0)
    predicted = distances[np.newaxis, :] <= cuts[:, np.newaxis]
    accuracy = np.mean(predicted == same[np.newaxis, :], axis=1)
    best = int(np.argmax(accuracy))
    return float(thresholds[best]), float(cuts[best])


def verification_accuracy(pairs: Sequence[VerificationPair], model: EmbeddingModel, ds: WeakDataset,
                          folds: int = 10, seed: int = 0) -> VerificationReport:
    """Cross-validated same/different accuracy.

    For every fold the threshold is chosen on the other folds and accuracy
    is measured on the held-out fold. Held-out distances inside the chosen
    gap between two training distances count as "different", so results
    depend only on the order of distances.

    Raises:
        DataValidationException: With fewer than 10 pairs (or fewer than ``folds``)
    """
    pairs = list(pairs)
    _check_pair_count(len(pairs), folds)
    same = np.array([p.same for p in pairs], dtype=bool)
    report = cross_validate(pair_distances(pairs, model, ds), same, folds, seed)
    logger.info(f"Verification: {report}")
    return report


def _check_pair_count(n: int, folds: int) -> None:
    needed = max(MIN_VERIFICATION_PAIRS, folds)
    if n < needed:
        raise DataValidationException(f"verification needs at least {needed} pairs",
                                      field="pairs", value=str(n))


def cross_validate(distances: np.ndarray, same: np.ndarray, folds: int = 10, seed: int = 0) -> VerificationReport:
    """Stratified k-fold accuracy of a distance threshold over labeled pair distances."""
    distances = np.asarray(distances, dtype=np.float64)
    same = np.asarray(same, dtype=bool)
    _check_pair_count(distances.size, folds)
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)

    accuracies, thresholds = [], []
    for train_index, test_index in splitter.split(distances, same):
        threshold, cut = best_threshold(distances[train_index], same[train_index])
        predicted = distances[test_index] <= cut
        accuracies.append(float(np.mean(predicted == same[test_index])))
        thresholds.append(threshold)

    return VerificationReport(
        mean_accuracy=float(np.mean(accuracies)),
        std_accuracy=float(np.std(accuracies)),
        fold_accuracies=accuracies,
        thresholds=thresholds,
        n_pairs=int(distances.size),
    )


def correctness_rate(ds: WeakDataset) -> float:
    """Fraction of records whose weak label is correct."""
    _require_truth(ds)
    return ds.correct_count() / len(ds) if len(ds) else 0.0

