"""
Unit tests for the configuration repository.
"""

import unittest
import tempfile
import json
import shutil
import sys
import os
from pathlib import Path

# Add the src directory to the path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..'))

from src.domain.models.identity_graph import ComponentRule
from src.domain.models.triplet import TripletPolicy
from src.infrastructure.repositories import FileConfigRepository, derive_seed
from src.infrastructure.exceptions import ConfigurationException


class TestFileConfigRepository(unittest.TestCase):
    """Test cases for FileConfigRepository."""

    def setUp(self):
        self.temp_dir = Path(tempfile.mkdtemp())
        self.repository = FileConfigRepository()

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def write(self, name, content):
        path = self.temp_dir / name
        path.write_text(content, encoding="utf-8")
        return path

    def test_defaults(self):
        config = self.repository.load_config()

        self.assertEqual(config.seed, 0)
        self.assertEqual(config.clean.threshold, 0.5)
        self.assertIs(config.clean.component_rule, ComponentRule.ANCHOR)
        self.assertEqual(config.iterate.max_iterations, 2)
        self.assertEqual(config.holdout_labels, 10)
        self.assertIsNone(config.source)

    def test_toml_overrides_defaults(self):
        path = self.write("run.toml", "\n".join([
            "seed = 11",
            "[clean]",
            "threshold = 0.3",
            'component_rule = "largest"',
            "[train]",
            'policy = "sparse"',
            "iterations = 5",
        ]))
        config = self.repository.load_config(path)

        self.assertEqual(config.seed, 11)
        self.assertEqual(config.clean.threshold, 0.3)
        self.assertIs(config.clean.component_rule, ComponentRule.LARGEST)
        self.assertIs(config.train.policy, TripletPolicy.SPARSE)
        self.assertEqual(config.train.iterations, 5)
        self.assertEqual(config.iterate.train_config, config.train)
        self.assertEqual(config.iterate.clean_params, config.clean)
        self.assertEqual(config.train.learning_rate, 0.5)
        self.assertEqual(config.source, str(path))

    def test_json_config(self):
        path = self.write("run.json", json.dumps({"synth": {"n_identities": 6}}))
        self.assertEqual(self.repository.load_config(path).synth.n_identities, 6)

    def test_seed_override_and_derived_streams(self):
        path = self.write("run.toml", "seed = 3\n")
        config = self.repository.load_config(path, seed=9)

        self.assertEqual(config.seed, 9)
        self.assertEqual(config.synth.seed, derive_seed(9, "synth"))
        self.assertEqual(config.train.seed, derive_seed(9, "train"))
        self.assertEqual(config.eval.seed, derive_seed(9, "eval"))

    def test_derived_streams_differ(self):
        seeds = {derive_seed(5, stream) for stream in ("synth", "train", "eval")}
        self.assertEqual(len(seeds), 3)
        self.assertEqual(derive_seed(5, "train"), derive_seed(5, "train"))

    def test_unknown_section(self):
        path = self.write("run.toml", "[plotting]\ndpi = 300\n")
        with self.assertRaises(ConfigurationException) as context:
            self.repository.load_config(path)
        self.assertEqual(context.exception.setting, "plotting")

    def test_unknown_key(self):
        path = self.write("run.toml", "[clean]\ntreshold = 0.3\n")
        with self.assertRaises(ConfigurationException) as context:
            self.repository.load_config(path)
        self.assertEqual(context.exception.setting, "clean.treshold")

    def test_out_of_range_value_names_file(self):
        path = self.write("run.toml", "[clean]\nthreshold = 0.0\n")
        with self.assertRaises(ConfigurationException) as context:
            self.repository.load_config(path)
        self.assertEqual(context.exception.config_file, str(path))
        self.assertEqual(context.exception.setting, "threshold")
        self.assertIn(f"Config file: {path}", str(context.exception))
        self.assertIs(self.repository.get_last_error(), context.exception)

    def test_malformed_toml(self):
        path = self.write("run.toml", "[clean\nthreshold = \n")
        with self.assertRaises(ConfigurationException):
            self.repository.load_config(path)

    def test_missing_file(self):
        with self.assertRaises(ConfigurationException):
            self.repository.load_config(self.temp_dir / "absent.toml")
        self.assertIsInstance(self.repository.get_last_error(), ConfigurationException)

    def test_negative_seed(self):
        path = self.write("run.toml", "seed = -1\n")
        with self.assertRaises(ConfigurationException):
            self.repository.load_config(path)

    def test_echo_is_json_serializable(self):
        echo = self.repository.load_config().to_dict()

        self.assertEqual(sorted(echo), ["clean", "eval", "iterate", "seed", "synth", "train"])
        self.assertEqual(echo["iterate"]["holdout_labels"], 10)
        json.dumps(echo, allow_nan=False)

    def test_default_config_is_a_copy(self):
        defaults = self.repository.get_default_config()
        defaults["clean"]["threshold"] = 1.9
        self.assertEqual(self.repository.get_default_config()["clean"]["threshold"], 0.5)


if __name__ == '__main__':
    unittest.main()
