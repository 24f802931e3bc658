"""
Synthetic Benchmark Configuration

Parameters of the ground-truthed weakly labeled dataset generator and the
metadata it records next to the generated dataset.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Tuple

from ...infrastructure.exceptions import ConfigurationException


@dataclass(frozen=True)
class SynthConfig:
    """Generator parameters.

    Attributes:
        n_identities: Number of identities (and weak labels)
        group_size_range: Inclusive [lo, hi] of records per weak label
        contamination: Expected fraction of mislabeled slots per group
        latent_dim: Dimension of the latent identity space (and of features)
        walk_step: Length of one random-walk step; the continuity scale
        walk_pull: Pull of the walk towards its identity center per step
        center_radius: Radius of the sphere identity centers lie on
        shift_conditioning: Condition number of the domain-shift map S
        noise_sigma: Gaussian observation noise
        confusable_neighbors: Contaminants come from this many latent-nearest
            identities; 0 draws them from all other identities
        seed: Seed of every random draw
    """

    n_identities: int = 50
    group_size_range: Tuple[int, int] = (30, 100)
    contamination: float = 0.15
    latent_dim: int = 8
    walk_step: float = 0.12
    walk_pull: float = 0.05
    center_radius: float = 1.0
    shift_conditioning: float = 5.0
    noise_sigma: float = 0.002
    confusable_neighbors: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "group_size_range", tuple(int(v) for v in self.group_size_range))
        self._validate()

    def _validate(self) -> None:
        if self.n_identities < 2:
            raise ConfigurationException("n_identities must be at least 2", setting="n_identities")
        if len(self.group_size_range) != 2:
            raise ConfigurationException("group_size_range needs [lo, hi]", setting="group_size_range")
        lo, hi = self.group_size_range
        if not (1 <= lo <= hi):
            raise ConfigurationException(
                f"group_size_range must satisfy 1 <= lo <= hi, got [{lo}, {hi}]",
                setting="group_size_range")
        if not (0.0 <= self.contamination < 0.5):
            raise ConfigurationException(
                f"contamination must lie in [0, 0.5), got {self.contamination}", setting="contamination")
        if self.latent_dim < 1:
            raise ConfigurationException("latent_dim must be positive", setting="latent_dim")
        if not self.walk_step > 0.0:
            raise ConfigurationException("walk_step must be positive", setting="walk_step")
        if not (0.0 <= self.walk_pull < 1.0):
            raise ConfigurationException("walk_pull must lie in [0, 1)", setting="walk_pull")
        if not self.center_radius > 0.0:
            raise ConfigurationException("center_radius must be positive", setting="center_radius")
        if not self.shift_conditioning >= 1.0:
            raise ConfigurationException("shift_conditioning must be at least 1",
                                         setting="shift_conditioning")
        if not self.noise_sigma >= 0.0:
            raise ConfigurationException("noise_sigma must be non-negative", setting="noise_sigma")
        if self.confusable_neighbors < 0:
            raise ConfigurationException("confusable_neighbors must be non-negative",
                                         setting="confusable_neighbors")
        if self.seed < 0:
            raise ConfigurationException("seed must be unsigned", setting="seed")

    def with_seed(self, seed: int) -> 'SynthConfig':
        return replace(self, seed=seed)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_identities": self.n_identities,
            "group_size_range": list(self.group_size_range),
            "contamination": self.contamination,
            "latent_dim": self.latent_dim,
            "walk_step": self.walk_step,
            "walk_pull": self.walk_pull,
            "center_radius": self.center_radius,
            "shift_conditioning": self.shift_conditioning,
            "noise_sigma": self.noise_sigma,
            "confusable_neighbors": self.confusable_neighbors,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class SynthMetadata:
    """What the generator records next to the dataset."""

    seed: int
    config: Dict[str, Any]
    spectrum: List[float]
    contaminated_count: int
    n_records: int
    group_sizes: Dict[str, int] = field(default_factory=dict)

    @property
    def measured_contamination(self) -> float:
        return self.contaminated_count / self.n_records if self.n_records else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "config": dict(self.config),
            "spectrum": list(self.spectrum),
            "contaminated_count": self.contaminated_count,
            "n_records": self.n_records,
            "measured_contamination": self.measured_contamination,
            "group_sizes": dict(self.group_sizes),
        }
