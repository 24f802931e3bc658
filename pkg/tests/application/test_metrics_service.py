"""
Test suite for the metrics service.

Precision and recall are checked on hand-counted instances; verification
accuracy on separable pairs and under monotone transforms of the distances.
"""

import unittest
import sys
import os

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..'))

from src.application.services.metrics_service import (
    best_threshold,
    correctness_rate,
    cross_validate,
    make_pairs,
    pair_distances,
    pr_curve,
    precision_recall,
    purity_counts,
    verification_accuracy,
)
from src.application.services.synth_service import generate
from src.domain.models.cleaned_dataset import CleanedDataset
from src.domain.models.embedding_model import EmbeddingModel
from src.domain.models.face_record import FaceRecord
from src.domain.models.identity_graph import CleanParams
from src.domain.models.synth_config import SynthConfig
from src.domain.models.weak_dataset import WeakDataset
from src.infrastructure.exceptions import (
    ConfigurationException,
    DataIntegrityException,
    DataValidationException,
)


def labeled_dataset(rng, n_identities, size, dim=4, spread=10.0, noise=0.1, swaps=0):
    """Well separated identities; the first ``swaps`` records of each group carry the next identity."""
    centers = spread * rng.standard_normal((n_identities, dim))
    records = []
    record_id = 0
    for index in range(n_identities):
        for position in range(size):
            record_id += 1
            truth = (index + 1) % n_identities if position < swaps else index
            records.append(FaceRecord(record_id, f"id_{index:03d}",
                                      centers[truth] + noise * rng.standard_normal(dim),
                                      f"id_{truth:03d}"))
    return WeakDataset.from_records(records)


class TestPrecisionRecall(unittest.TestCase):
    """Test cases for purity counts."""

    def setUp(self):
        self.ds = WeakDataset.from_records([
            FaceRecord(1, "alice", [1.0, 0.0], "alice"),
            FaceRecord(2, "alice", [0.9, 0.1], "alice"),
            FaceRecord(3, "alice", [0.0, 1.0], "bob"),
            FaceRecord(4, "bob", [0.0, 1.0], "bob"),
            FaceRecord(5, "bob", [1.0, 1.0], "carol"),
        ])

    def test_hand_counted(self):
        cleaned = CleanedDataset(kept={"alice": {1, 3}, "bob": {4}})
        counts = purity_counts(cleaned, self.ds)

        self.assertEqual((counts.kept, counts.correct_kept, counts.correct_total), (3, 2, 3))
        self.assertEqual(precision_recall(cleaned, self.ds), (2 / 3, 2 / 3))

    def test_keep_everything(self):
        cleaned = CleanedDataset(kept={label: set(self.ds.group(label)) for label in self.ds.labels})
        self.assertEqual(precision_recall(cleaned, self.ds), (3 / 5, 1.0))
        self.assertEqual(correctness_rate(self.ds), 3 / 5)

    def test_nothing_kept(self):
        self.assertEqual(precision_recall(CleanedDataset(), self.ds), (None, 0.0))

    def test_no_correct_records(self):
        ds = WeakDataset.from_records([FaceRecord(1, "alice", [1.0], "bob")])
        self.assertEqual(precision_recall(CleanedDataset(kept={"alice": {1}}), ds), (0.0, None))

    def test_requires_truth_labels(self):
        ds = WeakDataset.from_records([FaceRecord(1, "alice", [1.0], "alice"), FaceRecord(2, "alice", [2.0])])
        with self.assertRaises(DataIntegrityException) as context:
            purity_counts(CleanedDataset(kept={"alice": {1}}), ds)
        self.assertEqual(context.exception.record_id, 2)

    def test_kept_record_outside_group(self):
        with self.assertRaises(DataIntegrityException):
            purity_counts(CleanedDataset(kept={"alice": {4}}), self.ds)


class TestPrCurve(unittest.TestCase):
    """Test cases for threshold sweeps."""

    def setUp(self):
        self.ds = labeled_dataset(np.random.default_rng(6), 4, 6, dim=16, swaps=1)
        self.model = EmbeddingModel.identity(16)
        self.params = CleanParams(threshold=0.5)

    def test_sweep_end_points(self):
        curve = pr_curve(self.ds, self.model, self.params, [1e-9, 2.01])
        low, high = curve

        self.assertEqual(low.kept_count, len(self.ds.labels))
        self.assertEqual(high.kept_count, len(self.ds))
        self.assertEqual(high.recall, 1.0)
        self.assertAlmostEqual(high.precision, correctness_rate(self.ds))

    def test_separated_groups_are_cleaned(self):
        point = pr_curve(self.ds, self.model, self.params, [0.5])[0]
        self.assertEqual(point.precision, 1.0)
        self.assertEqual(point.recall, 1.0)

    def test_points_follow_thresholds(self):
        thresholds = np.linspace(0.05, 2.0, 9)
        curve = pr_curve(self.ds, self.model, self.params, thresholds)
        self.assertEqual([p.threshold for p in curve], thresholds.tolist())

    def test_unsorted_thresholds(self):
        with self.assertRaises(DataValidationException):
            pr_curve(self.ds, self.model, self.params, [0.5, 0.2])

    def test_benchmark_sweep_recall_is_non_decreasing(self):
        ds = generate(SynthConfig(seed=7)).dataset
        thresholds = np.linspace(0.04, 2.0, 50)
        curve = pr_curve(ds, EmbeddingModel.identity(ds.dim), CleanParams(threshold=0.5), thresholds)

        recalls = [point.recall for point in curve]
        self.assertEqual(len(recalls), 50)
        self.assertTrue(all(b >= a for a, b in zip(recalls, recalls[1:])), recalls)
        self.assertEqual(recalls[-1], 1.0)


class TestMakePairs(unittest.TestCase):
    """Test cases for verification pair sampling."""

    def setUp(self):
        self.ds = labeled_dataset(np.random.default_rng(2), 5, 8)

    def check_pairs(self, ds, pairs, n_pos, n_neg):
        self.assertEqual(sum(p.same for p in pairs), n_pos)
        self.assertEqual(sum(not p.same for p in pairs), n_neg)
        self.assertEqual(len({(p.a, p.b) for p in pairs}), len(pairs))
        for pair in pairs:
            self.assertLess(pair.a, pair.b)
            same = ds.record(pair.a).truth_label == ds.record(pair.b).truth_label
            self.assertEqual(pair.same, same)

    def test_counts_and_labels(self):
        pairs = make_pairs(self.ds, 50, 70, np.random.default_rng(0))
        self.check_pairs(self.ds, pairs, 50, 70)

    def test_all_positive_pairs(self):
        pairs = make_pairs(self.ds, 5 * 28, 0, np.random.default_rng(0))
        self.assertEqual(len(pairs), 140)

    def test_deterministic_for_seed(self):
        first = make_pairs(self.ds, 20, 20, np.random.default_rng(5))
        second = make_pairs(self.ds, 20, 20, np.random.default_rng(5))
        self.assertEqual(first, second)

    def test_over_request(self):
        with self.assertRaises(ConfigurationException):
            make_pairs(self.ds, 141, 0, np.random.default_rng(0))
        with self.assertRaises(ConfigurationException):
            make_pairs(self.ds, 0, 5 * 8 * 32 // 2 + 1, np.random.default_rng(0))

    def test_single_identity(self):
        ds = labeled_dataset(np.random.default_rng(2), 1, 4)
        with self.assertRaises(DataIntegrityException):
            make_pairs(ds, 1, 0, np.random.default_rng(0))

    def test_large_dataset_negatives(self):
        ds = labeled_dataset(np.random.default_rng(3), 21, 100, dim=2)
        pairs = make_pairs(ds, 300, 300, np.random.default_rng(1))
        self.check_pairs(ds, pairs, 300, 300)


class TestVerification(unittest.TestCase):
    """Test cases for the cross-validated verification protocol."""

    def test_best_threshold(self):
        threshold, cut = best_threshold(np.array([0.1, 0.2, 0.8, 0.9]), np.array([True, True, False, False]))
        self.assertAlmostEqual(threshold, 0.5)
        self.assertEqual(cut, 0.2)

    def test_best_threshold_ties_go_to_lowest(self):
        threshold, cut = best_threshold(np.array([0.1, 0.5, 0.9]), np.array([True, False, True]))
        self.assertAlmostEqual(threshold, 0.3)
        self.assertEqual(cut, 0.1)

    def test_separable_pairs(self):
        ds = labeled_dataset(np.random.default_rng(12), 6, 10)
        pairs = make_pairs(ds, 100, 100, np.random.default_rng(0))
        report = verification_accuracy(pairs, EmbeddingModel.identity(4), ds, folds=10, seed=3)

        # the largest positive distance is misjudged in the fold that holds it out
        self.assertGreaterEqual(report.mean_accuracy, 0.95)
        self.assertEqual(len(report.fold_accuracies), 10)
        self.assertEqual(report.n_pairs, 200)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(40)
        same = np.arange(200) < 100
        distances = np.where(same, rng.uniform(0.2, 1.2, 200), rng.uniform(0.8, 1.9, 200))
        base = cross_validate(distances, same, folds=10, seed=7)

        for transform in (lambda d: d ** 3, lambda d: 2.0 * d + 1.0, np.sqrt):
            moved = cross_validate(transform(distances), same, folds=10, seed=7)
            self.assertEqual(moved.fold_accuracies, base.fold_accuracies)

    def test_seed_fixes_folds(self):
        rng = np.random.default_rng(1)
        same = np.arange(60) < 30
        distances = np.where(same, rng.uniform(0.0, 1.0, 60), rng.uniform(0.5, 1.5, 60))
        self.assertEqual(cross_validate(distances, same, 5, seed=2), cross_validate(distances, same, 5, seed=2))

    def test_too_few_pairs(self):
        with self.assertRaises(DataValidationException):
            cross_validate(np.linspace(0.1, 0.9, 9), np.arange(9) < 5, folds=2)
        with self.assertRaises(DataValidationException):
            cross_validate(np.linspace(0.1, 0.9, 11), np.arange(11) < 6, folds=12)

    def test_shuffled_labels_give_chance_accuracy(self):
        ds = labeled_dataset(np.random.default_rng(21), 8, 30)
        pairs = make_pairs(ds, 1000, 1000, np.random.default_rng(2))
        distances = pair_distances(pairs, EmbeddingModel.identity(4), ds)
        same = np.random.default_rng(5).permutation([p.same for p in pairs])

        report = cross_validate(distances, same, folds=10, seed=3)
        self.assertLess(abs(report.mean_accuracy - 0.5), 0.05)

    def test_collapsed_embeddings_score_the_positive_fraction(self):
        ds = WeakDataset.from_records(
            FaceRecord(index, f"id_{index % 3}", [1.0, 0.0, 0.0], f"id_{index % 3}") for index in range(30))
        pairs = make_pairs(ds, 30, 70, np.random.default_rng(4))
        report = verification_accuracy(pairs, EmbeddingModel.identity(3), ds, folds=5, seed=1)

        self.assertAlmostEqual(report.mean_accuracy, 0.3)
        self.assertEqual(report.fold_accuracies, [0.3] * 5)


if __name__ == '__main__':
    unittest.main()
