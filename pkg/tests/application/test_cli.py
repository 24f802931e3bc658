"""
Test suite for the command-line frontend.

Runs the commands end to end on a small generated dataset through click's
CliRunner and checks artifacts, manifests, replay and exit codes.
"""

import unittest
import tempfile
import shutil
import json
import logging
import sys
import os
from pathlib import Path
from unittest.mock import patch

import pandas as pd
from click.testing import CliRunner

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..'))

from src.presentation.cli import PACKAGE_LOGGER, cli
from src.infrastructure.exceptions import TrainingCollapseException

QUICK_CONFIG = """
seed = 1

[synth]
n_identities = 8
group_size_range = [12, 20]
contamination = 0.2
latent_dim = 4
walk_step = 0.05
walk_pull = 0.02
confusable_neighbors = 3

[train]
identities_per_batch = 3
images_per_identity = 4
iterations = 10

[iterate]
max_iterations = 2
target_precision = 0.5
holdout_labels = 3
verify = true

[eval]
n_pos = 20
n_neg = 20
folds = 5
sweep_points = 10

[logging]
level = "WARNING"
"""


class CliTestCase(unittest.TestCase):
    """Temporary workspace with a quick config and a generated dataset."""

    @classmethod
    def setUpClass(cls):
        cls.temp_dir = Path(tempfile.mkdtemp())
        cls.config = cls.temp_dir / "quick.toml"
        cls.config.write_text(QUICK_CONFIG, encoding="utf-8")
        cls.runner = CliRunner()
        result = cls.runner.invoke(cli, ["gen", "--config", str(cls.config), "--out", str(cls.temp_dir / "gen")])
        if result.exit_code != 0:
            raise RuntimeError(f"gen failed: {result.output}")
        cls.dataset = cls.temp_dir / "gen" / "dataset.jsonl"

    @classmethod
    def tearDownClass(cls):
        logging.getLogger(PACKAGE_LOGGER).handlers.clear()
        shutil.rmtree(cls.temp_dir, ignore_errors=True)

    def invoke(self, *args):
        return self.runner.invoke(cli, [str(arg) for arg in args])

    def out(self, name):
        return self.temp_dir / name

    def clean(self, out, *extra):
        return self.invoke("clean", "--config", self.config, "--dataset", self.dataset, "--out", out, *extra)


class TestGenAndClean(CliTestCase):
    """gen, clean and their manifests."""

    def test_gen_artifacts(self):
        gen = self.out("gen")
        for name in ("dataset.jsonl", "meta.json", "oracle_model.json", "manifest.json", "timings.json"):
            self.assertTrue((gen / name).exists(), name)
        manifest = json.loads((gen / "manifest.json").read_text(encoding="utf-8"))

        self.assertEqual(manifest["command"], "gen")
        self.assertEqual(manifest["seed"], 1)
        self.assertEqual(manifest["outputs"]["dataset"], "dataset.jsonl")
        self.assertNotIn("out", manifest["arguments"])

    def test_gen_is_deterministic(self):
        result = self.invoke("gen", "--config", self.config, "--out", self.out("gen_again"))
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertEqual((self.out("gen_again") / "dataset.jsonl").read_bytes(), self.dataset.read_bytes())

    def test_seed_override(self):
        result = self.invoke("gen", "--config", self.config, "--seed", 2, "--out", self.out("gen_seed"))
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertNotEqual((self.out("gen_seed") / "dataset.jsonl").read_bytes(), self.dataset.read_bytes())

    def test_clean_artifacts(self):
        result = self.clean(self.out("clean"))
        self.assertEqual(result.exit_code, 0, result.output)
        clean = self.out("clean")

        metrics = json.loads((clean / "metrics.json").read_text(encoding="utf-8"))
        self.assertGreater(metrics["kept"], 0)
        self.assertEqual(metrics["precision"], metrics["correct_kept"] / metrics["kept"])
        diagnostics = (clean / "diagnostics.jsonl").read_text(encoding="utf-8").splitlines()
        self.assertEqual(len(diagnostics), 8)
        header = json.loads((clean / "cleaned.jsonl").read_text(encoding="utf-8").splitlines()[0])
        self.assertEqual(header["header"]["format"], "cleaned-v1")

    def test_workers_do_not_change_output(self):
        self.assertEqual(self.clean(self.out("w1"), "--workers", 1).exit_code, 0)
        self.assertEqual(self.clean(self.out("w4"), "--workers", 4).exit_code, 0)
        self.assertEqual((self.out("w1") / "cleaned.jsonl").read_bytes(),
                         (self.out("w4") / "cleaned.jsonl").read_bytes())

    def test_manifest_is_deterministic_and_replays(self):
        self.assertEqual(self.clean(self.out("m1"), "--rule", "largest").exit_code, 0)
        self.assertEqual(self.clean(self.out("m2"), "--rule", "largest").exit_code, 0)
        first = (self.out("m1") / "manifest.json").read_bytes()
        self.assertEqual(first, (self.out("m2") / "manifest.json").read_bytes())

        result = self.invoke("replay", "--manifest", self.out("m1") / "manifest.json", "--out", self.out("m3"))
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertEqual((self.out("m3") / "manifest.json").read_bytes(), first)
        self.assertEqual((self.out("m3") / "cleaned.jsonl").read_bytes(),
                         (self.out("m1") / "cleaned.jsonl").read_bytes())

    def test_replay_unknown_command(self):
        manifest = self.out("bogus_manifest.json")
        manifest.write_text(json.dumps({"command": "bogus", "arguments": {}}), encoding="utf-8")
        self.assertEqual(self.invoke("replay", "--manifest", manifest, "--out", self.out("bogus")).exit_code, 2)


class TestExitCodes(CliTestCase):
    """Configuration, data and numerical failures map to exit codes 2, 3 and 4."""

    def test_missing_config(self):
        result = self.invoke("clean", "--config", self.out("absent.toml"), "--dataset", self.dataset,
                             "--out", self.out("x"))
        self.assertEqual(result.exit_code, 2)

    def test_threshold_out_of_range(self):
        self.assertEqual(self.clean(self.out("t1"), "--threshold", 3.0).exit_code, 2)
        self.assertEqual(self.clean(self.out("t2"), "--threshold", 0.0).exit_code, 2)

    def test_unknown_config_key(self):
        config = self.out("typo.toml")
        config.write_text("[clean]\ntreshold = 0.3\n", encoding="utf-8")
        result = self.invoke("clean", "--config", config, "--dataset", self.dataset, "--out", self.out("typo"))
        self.assertEqual(result.exit_code, 2)

    def test_malformed_dataset(self):
        dataset = self.out("broken.jsonl")
        dataset.write_text('{"record_id": 1, "weak_label": "a", "features": [1.0]}\n{"record_id": \n',
                           encoding="utf-8")
        result = self.invoke("clean", "--config", self.config, "--dataset", dataset, "--out", self.out("broken"))
        self.assertEqual(result.exit_code, 3)

    def test_invalid_utf8_dataset(self):
        dataset = self.out("latin1.jsonl")
        dataset.write_bytes(b'{"record_id": 1, "weak_label": "\xff\xfe", "features": [1.0]}\n')
        result = self.invoke("clean", "--config", self.config, "--dataset", dataset, "--out", self.out("latin1"))
        self.assertEqual(result.exit_code, 3)
        self.assertIn("line 1", result.output)

    def test_holdout_needs_remaining_labels(self):
        config = self.out("holdout.toml")
        config.write_text(QUICK_CONFIG.replace("holdout_labels = 3", "holdout_labels = 8"), encoding="utf-8")
        result = self.invoke("iterate", "--config", config, "--dataset", self.dataset, "--out", self.out("h"))
        self.assertEqual(result.exit_code, 2)


class TestTrainAndEvaluate(CliTestCase):
    """train, calibrate, eval-pr and eval-verify."""

    def test_train(self):
        self.assertEqual(self.clean(self.out("for_train")).exit_code, 0)
        result = self.invoke("train", "--config", self.config, "--dataset", self.dataset,
                             "--cleaned", self.out("for_train") / "cleaned.jsonl",
                             "--iterations", 3, "--out", self.out("train"))
        self.assertEqual(result.exit_code, 0, result.output)

        trace = pd.read_csv(self.out("train") / "loss_trace.csv")
        self.assertEqual(trace["iteration"].tolist(), [1, 2, 3])
        model = json.loads((self.out("train") / "model.json").read_text(encoding="utf-8"))
        self.assertEqual(model["shape"], [4, 4])

    def test_calibrate(self):
        result = self.invoke("calibrate", "--config", self.config, "--validation", self.dataset,
                             "--target-precision", 0.5, "--out", self.out("calibrate"))
        self.assertEqual(result.exit_code, 0, result.output)
        calibration = json.loads((self.out("calibrate") / "calibration.json").read_text(encoding="utf-8"))
        self.assertGreaterEqual(calibration["precision"], 0.5)
        self.assertTrue((self.out("calibrate") / "calibration_curve.csv").exists())

    def test_eval_pr(self):
        result = self.invoke("eval-pr", "--config", self.config, "--dataset", self.dataset,
                             "--model", self.out("gen") / "oracle_model.json", "--out", self.out("pr"))
        self.assertEqual(result.exit_code, 0, result.output)
        curve = pd.read_csv(self.out("pr") / "pr_curve.csv")
        self.assertEqual(len(curve), 10)
        metadata = json.loads((self.out("gen") / "meta.json").read_text(encoding="utf-8"))
        self.assertEqual(curve["kept_count"].iloc[-1], metadata["n_records"])
        self.assertEqual(curve["recall"].iloc[-1], 1.0)

    def test_eval_verify(self):
        result = self.invoke("eval-verify", "--config", self.config, "--dataset", self.dataset,
                             "--out", self.out("verify"))
        self.assertEqual(result.exit_code, 0, result.output)
        report = json.loads((self.out("verify") / "verification.json").read_text(encoding="utf-8"))
        self.assertEqual(report["n_pairs"], 40)
        self.assertEqual(len(report["fold_accuracies"]), 5)


class TestIterate(CliTestCase):
    """The iterate command and its partial manifests."""

    def test_iterate_writes_every_iteration(self):
        out = self.out("iterate")
        result = self.invoke("iterate", "--config", self.config, "--dataset", self.dataset, "--out", out)
        self.assertEqual(result.exit_code, 0, result.output)

        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        self.assertEqual([entry["iteration"] for entry in manifest["iterations"]], [1, 2])
        self.assertEqual(len(manifest["inputs"]["holdout_labels"].split(",")), 3)
        self.assertTrue((out / "base_verification.json").exists())
        for iteration in (1, 2):
            for name in ("cleaned.jsonl", "loss_trace.csv", "model.json", "pr_curve.csv", "verification.json"):
                self.assertTrue((out / f"iter_{iteration}" / name).exists(), f"iter_{iteration}/{name}")
        self.assertEqual(manifest["iterations"][1]["train_steps"], 10)

    def test_iterate_is_byte_reproducible(self):
        first, second = self.out("repeat_1"), self.out("repeat_2")
        for out in (first, second):
            result = self.invoke("iterate", "--config", self.config, "--dataset", self.dataset, "--out", out)
            self.assertEqual(result.exit_code, 0, result.output)
        self.assert_same_artifacts(first, second)

    def test_iterate_workers_do_not_change_output(self):
        serial, parallel = self.out("iterate_w1"), self.out("iterate_w8")
        for out, workers in ((serial, 1), (parallel, 8)):
            result = self.invoke("iterate", "--config", self.config, "--dataset", self.dataset,
                                 "--workers", workers, "--out", out)
            self.assertEqual(result.exit_code, 0, result.output)
        for iteration in (1, 2):
            for name in ("cleaned.jsonl", "loss_trace.csv", "pr_curve.csv", "model.json"):
                self.assertEqual((serial / f"iter_{iteration}" / name).read_bytes(),
                                 (parallel / f"iter_{iteration}" / name).read_bytes(), name)
        serial_manifest = json.loads((serial / "manifest.json").read_text(encoding="utf-8"))
        parallel_manifest = json.loads((parallel / "manifest.json").read_text(encoding="utf-8"))
        self.assertEqual(serial_manifest["iterations"], parallel_manifest["iterations"])

    def assert_same_artifacts(self, first, second):
        names = sorted(path.relative_to(first) for path in first.rglob("*")
                       if path.is_file() and path.name != "timings.json")
        self.assertIn(Path("manifest.json"), names)
        self.assertIn(Path("iter_2") / "pr_curve.csv", names)
        for name in names:
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes(), str(name))

    def test_training_collapse_writes_partial_manifest(self):
        out = self.out("collapse")
        with patch("src.application.services.triplet_service.TripletTrainer.train_head",
                   side_effect=TrainingCollapseException("head became non-finite", iteration=4)):
            result = self.invoke("iterate", "--config", self.config, "--dataset", self.dataset, "--out", out)

        self.assertEqual(result.exit_code, 4)
        self.assertTrue((out / "manifest.json.partial").exists())
        self.assertFalse((out / "manifest.json").exists())
        self.assertTrue((out / "iter_1" / "cleaned.jsonl.partial").exists())
        self.assertFalse((out / "iter_1" / "cleaned.jsonl").exists())
        self.assertTrue((out / "base_verification.json.partial").exists())
        self.assertFalse((out / "iter_2").exists())
        partial = json.loads((out / "manifest.json.partial").read_text(encoding="utf-8"))
        self.assertEqual(len(partial["iterations"]), 1)
        self.assertEqual(partial["iterations"][0]["cleaned_path"], "iter_1/cleaned.jsonl.partial")
        for relative in partial["outputs"].values():
            self.assertTrue(relative.endswith(".partial"), relative)
            self.assertTrue((out / relative).exists(), relative)

    def test_data_error_mid_iteration_writes_partial_manifest(self):
        config = self.temp_dir / "oversized_batch.toml"
        config.write_text(QUICK_CONFIG.replace("images_per_identity = 4", "images_per_identity = 40"),
                          encoding="utf-8")
        out = self.out("oversized_batch")
        result = self.invoke("iterate", "--config", config, "--dataset", self.dataset, "--out", out)

        self.assertEqual(result.exit_code, 3, result.output)
        self.assertTrue((out / "manifest.json.partial").exists())
        self.assertFalse((out / "manifest.json").exists())
        self.assertTrue((out / "iter_1" / "model.json.partial").exists())
        self.assertFalse((out / "iter_2").exists())


class TestPrecomputedEmbeddings(CliTestCase):
    """--embeddings replaces the features and the base model."""

    def write_embeddings(self, name, pad=0, skip=0):
        rows = [json.loads(line) for line in self.dataset.read_text(encoding="utf-8").splitlines()]
        path = self.out(name)
        with open(path, "w", encoding="utf-8") as file:
            for row in rows[skip:]:
                embedding = row["features"] + [0.0] * pad
                file.write(json.dumps({"record_id": row["record_id"], "embedding": embedding}) + "\n")
        return path

    def test_clean_with_feature_embeddings_matches_plain_clean(self):
        embeddings = self.write_embeddings("same.jsonl")
        self.assertEqual(self.clean(self.out("plain")).exit_code, 0)
        result = self.clean(self.out("embedded"), "--embeddings", embeddings)
        self.assertEqual(result.exit_code, 0, result.output)

        self.assertEqual((self.out("plain") / "cleaned.jsonl").read_bytes(),
                         (self.out("embedded") / "cleaned.jsonl").read_bytes())
        manifest = json.loads((self.out("embedded") / "manifest.json").read_text(encoding="utf-8"))
        self.assertEqual(manifest["inputs"]["embeddings"], str(embeddings))

    def test_train_uses_embedding_dimension(self):
        embeddings = self.write_embeddings("padded.jsonl", pad=2)
        result = self.invoke("train", "--config", self.config, "--dataset", self.dataset,
                             "--embeddings", embeddings, "--iterations", 2, "--out", self.out("train_embedded"))
        self.assertEqual(result.exit_code, 0, result.output)
        model = json.loads((self.out("train_embedded") / "model.json").read_text(encoding="utf-8"))
        self.assertEqual(model["shape"], [6, 6])

    def test_iterate_with_embeddings(self):
        embeddings = self.write_embeddings("iterate.jsonl")
        out = self.out("iterate_embedded")
        result = self.invoke("iterate", "--config", self.config, "--dataset", self.dataset,
                             "--embeddings", embeddings, "--out", out)
        self.assertEqual(result.exit_code, 0, result.output)
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        self.assertEqual([entry["iteration"] for entry in manifest["iterations"]], [1, 2])

    def test_missing_embedding_is_a_data_error(self):
        embeddings = self.write_embeddings("short.jsonl", skip=1)
        self.assertEqual(self.clean(self.out("short"), "--embeddings", embeddings).exit_code, 3)

    def test_model_and_embeddings_are_exclusive(self):
        embeddings = self.write_embeddings("exclusive.jsonl")
        result = self.clean(self.out("exclusive"), "--embeddings", embeddings,
                            "--model", self.out("gen") / "oracle_model.json")
        self.assertEqual(result.exit_code, 2)


BENCHMARK_CONFIG = Path(__file__).resolve().parents[2] / "configs" / "benchmark.toml"


@unittest.skipUnless(os.environ.get("IDENTITY_CLEANER_BENCHMARK") == "1",
                     "set IDENTITY_CLEANER_BENCHMARK=1 to run the full-size benchmark")
class TestBenchmarkTrends(unittest.TestCase):
    """Recall and verification gains of the second pass on the reference benchmark."""

    @classmethod
    def setUpClass(cls):
        cls.temp_dir = Path(tempfile.mkdtemp())
        runner = CliRunner()
        gen = runner.invoke(cli, ["gen", "--config", str(BENCHMARK_CONFIG), "--out", str(cls.temp_dir / "gen")])
        if gen.exit_code != 0:
            raise RuntimeError(f"gen failed: {gen.output}")
        cls.out = cls.temp_dir / "iterate"
        cls.result = runner.invoke(cli, ["iterate", "--config", str(BENCHMARK_CONFIG),
                                         "--dataset", str(cls.temp_dir / "gen" / "dataset.jsonl"),
                                         "--out", str(cls.out)])

    @classmethod
    def tearDownClass(cls):
        logging.getLogger(PACKAGE_LOGGER).handlers.clear()
        shutil.rmtree(cls.temp_dir, ignore_errors=True)

    def read(self, relative):
        return json.loads((self.out / relative).read_text(encoding="utf-8"))

    def test_recall_gain_at_fixed_precision(self):
        self.assertEqual(self.result.exit_code, 0, self.result.output)
        first, second = self.read("manifest.json")["iterations"]

        self.assertGreaterEqual(first["validation_precision"], 0.99)
        self.assertGreaterEqual(second["validation_precision"], 0.99)
        self.assertGreater(second["recall"], first["recall"])
        self.assertGreaterEqual(second["recall"] - first["recall"], 0.03)

    def test_verification_gain_over_base(self):
        self.assertEqual(self.result.exit_code, 0, self.result.output)
        base = self.read("base_verification.json")["mean_accuracy"]
        updated = self.read("iter_2/verification.json")["mean_accuracy"]

        self.assertGreater(base, 0.5)
        self.assertGreater(updated, 0.5)
        self.assertGreaterEqual(updated - base, 0.02)


if __name__ == '__main__':
    unittest.main()
