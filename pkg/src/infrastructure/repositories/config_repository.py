"""
Configuration repository for run settings.

Loads TOML or JSON config files, merges them onto the documented defaults
and builds the typed configurations every command runs from. A single seed
drives all random streams; each consumer receives a derived sub-seed.
"""

from abc import abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional
import copy
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .base_repository import BaseRepository, PathLike
from ...domain.models.clean_run import IterationConfig
from ...domain.models.evaluation import EvalConfig
from ...domain.models.identity_graph import CleanParams
from ...domain.models.synth_config import SynthConfig
from ...domain.models.triplet import TrainConfig
from ...infrastructure.exceptions import ConfigurationException

# Sub-stream keys of the run seed
SEED_STREAMS = {"synth": 0, "train": 1, "eval": 2}


def derive_seed(seed: int, stream: str) -> int:
    """Seed of one random stream, derived from the run seed."""
    sequence = np.random.SeedSequence(seed, spawn_key=(SEED_STREAMS[stream],))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


DEFAULT_CONFIG: Dict[str, Any] = {
    "seed": 0,
    "synth": {
        "n_identities": 50,
        "group_size_range": [30, 100],
        "contamination": 0.15,
        "latent_dim": 8,
        "walk_step": 0.12,
        "walk_pull": 0.05,
        "center_radius": 1.0,
        "shift_conditioning": 5.0,
        "noise_sigma": 0.002,
        "confusable_neighbors": 2,
    },
    "clean": {
        "threshold": 0.5,
        "min_group_size": 1,
        "component_rule": "anchor",
    },
    "train": {
        "margin": -0.2,
        "learning_rate": 0.5,
        "identities_per_batch": 8,
        "images_per_identity": 10,
        "iterations": 500,
        "policy": "dense",
        "sparse_batch_size": 2000,
        "embed_dim": None,
    },
    "iterate": {
        "max_iterations": 2,
        "target_precision": 0.99,
        "min_recall_gain": 0.0,
        "refit_pca": True,
        "pca_dim": None,
        "filter_with_pca": True,
        "sweep_points": 100,
        "holdout_labels": 10,
        "verify": False,
    },
    "eval": {
        "n_pos": 1000,
        "n_neg": 1000,
        "folds": 10,
        "sweep_points": 50,
        "sweep_min": 0.01,
        "sweep_max": 2.0,
    },
    "logging": {
        "level": "INFO",
        "log_dir": "",
    },
}


@dataclass
class CleanerConfig:
    """The effective configuration of one run."""

    seed: int = 0
    synth: SynthConfig = field(default_factory=SynthConfig)
    clean: CleanParams = field(default_factory=lambda: CleanParams(threshold=0.5))
    train: TrainConfig = field(default_factory=TrainConfig)
    iterate: IterationConfig = field(default_factory=IterationConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    holdout_labels: int = 10
    verify: bool = False
    log_level: str = "INFO"
    log_dir: Optional[str] = None
    source: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        """Echo of the effective settings, written into run manifests."""
        iterate = self.iterate.to_dict()
        iterate.pop("clean_params")
        iterate.pop("train_config")
        iterate.update({"holdout_labels": self.holdout_labels, "verify": self.verify})
        return {
            "seed": self.seed,
            "synth": self.synth.to_dict(),
            "clean": self.clean.to_dict(),
            "train": self.train.to_dict(),
            "iterate": iterate,
            "eval": self.eval.to_dict(),
        }


class ConfigRepository(BaseRepository[CleanerConfig]):
    """Abstract repository for configuration operations."""

    @abstractmethod
    def load_config(self, path: Optional[PathLike] = None, seed: Optional[int] = None) -> CleanerConfig:
        """Load the effective configuration.

        Args:
            path: Config file; defaults only when None
            seed: Overrides the file's seed

        Returns:
            The typed configuration
        """
        pass


class FileConfigRepository(ConfigRepository):
    """File-based configuration repository for TOML and JSON files."""

    def __init__(self, logger: Optional[logging.Logger] = None):
        """Initialize the configuration repository."""
        super().__init__(logger)

    def load(self, path: PathLike) -> CleanerConfig:
        """Load method for base repository compatibility."""
        return self.load_config(path)

    def save(self, entity: CleanerConfig, path: PathLike) -> Path:
        """Write the effective configuration as JSON."""
        return self._save_json_file(path, entity.to_dict())

    def load_config(self, path: Optional[PathLike] = None, seed: Optional[int] = None) -> CleanerConfig:
        raw = self._read_raw(Path(path)) if path is not None else {}
        merged = self._merge(raw, str(path) if path is not None else None)
        if seed is not None:
            merged["seed"] = seed
        config = self._build(merged, str(path) if path is not None else None)
        self.logger.info(f"Configuration loaded (source={config.source or 'defaults'}, seed={config.seed})")
        return config

    def get_default_config(self) -> Dict[str, Any]:
        """Get a copy of the default configuration."""
        return copy.deepcopy(DEFAULT_CONFIG)

    def _read_raw(self, path: Path) -> Dict[str, Any]:
        if not path.is_file():
            raise self._fail(ConfigurationException(f"config file not found: {path}", config_file=str(path)))
        try:
            if path.suffix.lower() == ".json":
                with open(path, "r", encoding="utf-8") as file:
                    data = json.load(file)
            else:
                with open(path, "rb") as file:
                    data = tomllib.load(file)
        except (tomllib.TOMLDecodeError, json.JSONDecodeError, UnicodeDecodeError) as e:
            raise self._fail(ConfigurationException(f"malformed config: {e}", config_file=str(path)))
        except OSError as e:
            raise self._fail(ConfigurationException(f"cannot read config: {e}", config_file=str(path)))
        if not isinstance(data, dict):
            raise self._fail(ConfigurationException("config must be a table", config_file=str(path)))
        return data

    def _merge(self, raw: Dict[str, Any], source: Optional[str]) -> Dict[str, Any]:
        """Overlay ``raw`` on the defaults, rejecting unknown sections and keys."""
        merged = self.get_default_config()
        for section, values in raw.items():
            if section not in merged:
                raise self._fail(ConfigurationException(f"unknown config section '{section}'",
                                                        config_file=source, setting=section))
            if section == "seed":
                merged["seed"] = values
                continue
            if not isinstance(values, dict):
                raise self._fail(ConfigurationException(f"section '{section}' must be a table",
                                                        config_file=source, setting=section))
            for key, value in values.items():
                if key not in merged[section]:
                    raise self._fail(ConfigurationException(f"unknown setting '{section}.{key}'",
                                                            config_file=source, setting=f"{section}.{key}"))
                merged[section][key] = value
        return merged

    def _build(self, merged: Dict[str, Any], source: Optional[str]) -> CleanerConfig:
        seed = merged["seed"]
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise self._fail(ConfigurationException(f"seed must be an unsigned integer, got {seed!r}",
                                                    config_file=source, setting="seed"))
        iterate = dict(merged["iterate"])
        holdout = iterate.pop("holdout_labels")
        verify = bool(iterate.pop("verify"))
        log = merged["logging"]
        try:
            train = TrainConfig(**merged["train"], seed=derive_seed(seed, "train"))
            clean = CleanParams(**merged["clean"])
            config = CleanerConfig(
                seed=seed,
                synth=SynthConfig(**merged["synth"], seed=derive_seed(seed, "synth")),
                clean=clean,
                train=train,
                iterate=IterationConfig(**iterate, clean_params=clean, train_config=train),
                eval=EvalConfig(**merged["eval"], seed=derive_seed(seed, "eval")),
                holdout_labels=int(holdout),
                verify=verify,
                log_level=str(log["level"]),
                log_dir=str(log["log_dir"]) or None,
                source=source,
            )
        except ConfigurationException as e:
            raise self._fail(ConfigurationException(e.message, config_file=source, setting=e.setting)) from e
        except (TypeError, ValueError) as e:
            raise self._fail(ConfigurationException(f"invalid config value: {e}", config_file=source))
        if config.holdout_labels < 0:
            raise self._fail(ConfigurationException("holdout_labels must be non-negative",
                                                    config_file=source, setting="iterate.holdout_labels"))
        return config
