"""
Synth Service - Ground-truthed weakly labeled benchmark data.

Every identity is a bounded random walk around a center on a sphere, so
consecutive samples are close (continuity) while the group as a whole
spreads out. A fraction of each group's slots is filled with samples of
confusable identities. Observed features are a conditioned linear
distortion S of the latent points plus noise; the identity model sees the
distorted space, and a head of S^-1 undoes it.
"""

from dataclasses import dataclass
from typing import List, Optional
import logging

import numpy as np

from ...domain.models.embedding_model import EmbeddingModel
from ...domain.models.face_record import FaceRecord
from ...domain.models.synth_config import SynthConfig, SynthMetadata
from ...domain.models.weak_dataset import WeakDataset


@dataclass(frozen=True, eq=False)
class SynthResult:
    """A generated dataset with its ground truth.

    Attributes:
        dataset: The weakly labeled dataset, truth labels attached
        metadata: Seed, config echo, spectrum of S, contamination count
        latent: n x latent_dim latent points in record_id order
        shift_map: The domain-shift matrix S
    """

    dataset: WeakDataset
    metadata: SynthMetadata
    latent: np.ndarray
    shift_map: np.ndarray

    def oracle_model(self) -> EmbeddingModel:
        """Identity base with head S^-1: embeds the undistorted latent space."""
        return EmbeddingModel(head=np.linalg.inv(self.shift_map))


def identity_label(index: int, n_identities: int) -> str:
    return f"id_{index:0{max(3, len(str(n_identities - 1)))}d}"


def _unit(rng: np.random.Generator, size) -> np.ndarray:
    vectors = rng.standard_normal(size)
    return vectors / np.linalg.norm(vectors, axis=-1, keepdims=True)


def shift_map(dim: int, conditioning: float, rng: np.random.Generator) -> np.ndarray:
    """U diag(s) V^T with s geometric from 1 down to 1/conditioning."""
    u, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    v, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    spectrum = np.geomspace(1.0, 1.0 / conditioning, dim)
    return u @ np.diag(spectrum) @ v.T


class SynthGenerator:
    """Generator of synthetic weakly labeled datasets.

    Generation is single-threaded and draws from one seeded stream in a
    fixed order, so a seed fully determines the output.
    """

    def __init__(self, logger: Optional[logging.Logger] = None):
        self.logger = logger or logging.getLogger(__name__)

    def generate(self, cfg: SynthConfig) -> SynthResult:
        """Generate a dataset; identity labels are "id_000", "id_001", ..."""
        rng = np.random.default_rng(cfg.seed)
        n, dim = cfg.n_identities, cfg.latent_dim

        centers = cfg.center_radius * _unit(rng, (n, dim))
        donors = self._donors(centers, cfg.confusable_neighbors)
        S = shift_map(dim, cfg.shift_conditioning, rng)

        lo, hi = cfg.group_size_range
        sizes = rng.integers(lo, hi + 1, size=n)
        contaminated = np.array([self._contaminated_count(int(size), cfg.contamination, rng) for size in sizes])
        chains = [self._walk(centers[i], int(sizes[i] - contaminated[i]), cfg, rng) for i in range(n)]

        labels = [identity_label(i, n) for i in range(n)]
        latent_rows: List[np.ndarray] = []
        weak: List[str] = []
        truth: List[str] = []
        for i in range(n):
            size, bad = int(sizes[i]), int(contaminated[i])
            slots = np.zeros(size, dtype=bool)
            slots[rng.choice(size, size=bad, replace=False)] = True
            correct = iter(chains[i])
            for is_contaminant in slots:
                if is_contaminant:
                    donor = int(rng.choice(donors[i]))
                    chain = chains[donor]
                    point = chain[rng.integers(len(chain))] + cfg.walk_step * _unit(rng, dim)
                    truth.append(labels[donor])
                else:
                    point = next(correct)
                    truth.append(labels[i])
                latent_rows.append(point)
                weak.append(labels[i])

        latent = np.vstack(latent_rows)
        observed = latent @ S.T + cfg.noise_sigma * rng.standard_normal(latent.shape)
        records = [FaceRecord(rid, weak[rid], observed[rid], truth[rid]) for rid in range(len(weak))]
        dataset = WeakDataset.from_records(records, dim)

        metadata = SynthMetadata(
            seed=cfg.seed,
            config=cfg.to_dict(),
            spectrum=np.linalg.svd(S, compute_uv=False).tolist(),
            contaminated_count=int(contaminated.sum()),
            n_records=len(records),
            group_sizes={labels[i]: int(sizes[i]) for i in range(n)},
        )
        self.logger.info(f"Generated {len(records)} records for {n} identities "
                         f"({metadata.contaminated_count} contaminated)")
        return SynthResult(dataset=dataset, metadata=metadata, latent=latent, shift_map=S)

    @staticmethod
    def _donors(centers: np.ndarray, neighbors: int) -> List[np.ndarray]:
        """Identities each group's contaminants are drawn from."""
        n = centers.shape[0]
        gaps = np.linalg.norm(centers[:, np.newaxis, :] - centers[np.newaxis, :, :], axis=2)
        np.fill_diagonal(gaps, np.inf)
        if neighbors == 0 or neighbors >= n - 1:
            return [np.array([j for j in range(n) if j != i]) for i in range(n)]
        return [np.argsort(gaps[i], kind="stable")[:neighbors] for i in range(n)]

    @staticmethod
    def _contaminated_count(size: int, rate: float, rng: np.random.Generator) -> int:
        """Binomial slot count, redrawn until correct records are a strict majority."""
        while True:
            count = int(rng.binomial(size, rate))
            if 2 * (size - count) > size:
                return count

    @staticmethod
    def _walk(center: np.ndarray, length: int, cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
        """Mean-reverting random walk of fixed-length steps starting at ``center``."""
        points = np.empty((length, center.size))
        point = center.copy()
        for t in range(length):
            if t > 0:
                point = point + cfg.walk_step * _unit(rng, center.size) - cfg.walk_pull * (point - center)
            points[t] = point
        return points


def generate(cfg: SynthConfig, logger: Optional[logging.Logger] = None) -> SynthResult:
    return SynthGenerator(logger).generate(cfg)
