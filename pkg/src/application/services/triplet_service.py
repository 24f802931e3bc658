"""
Triplet Service - Triplet generation, hinge loss and head training.

The objective over a triplet set is sum_i max(d2_pos - d2_neg, C) on unit
embeddings. Its gradient is accumulated per distinct image and then
backpropagated once per image through normalization, PCA and the head.
"""

from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np

from .embedding_service import embed_many, pre_normalized
from ...domain.models.embedding_model import EmbeddingModel
from ...domain.models.triplet import TrainConfig, TrainResult, TrainStep, TripletPolicy, TripletSet
from ...domain.models.weak_dataset import WeakDataset
from ...infrastructure.exceptions import (
    DataIntegrityException,
    DataValidationException,
    DegenerateEmbeddingException,
    TrainingCollapseException,
)


def dense_triplet_count(m: int, k: int) -> int:
    return m * k * (k - 1) * (m - 1) * k


def gen_dense(batch: Sequence[Sequence[int]]) -> TripletSet:
    """Every valid triplet over m groups of k record ids.

    Anchor and positive are distinct members of one group, the negative is
    any member of another group: m*k*(k-1)*(m-1)*k triplets.

    Raises:
        DataValidationException: When m < 2, k < 2, or the groups differ in size
    """
    groups = [np.asarray(group, dtype=np.int64) for group in batch]
    if len(groups) < 2:
        raise DataValidationException("dense batches need at least 2 groups", field="batch",
                                      value=str(len(groups)))
    k = len(groups[0])
    if k < 2:
        raise DataValidationException("dense batches need at least 2 records per group", field="batch")
    for group in groups:
        if len(group) != k:
            raise DataValidationException(f"every group needs exactly {k} records; subsample first",
                                          field="batch", value=str(len(group)))

    off_diagonal = ~np.eye(k, dtype=bool)
    a_idx, p_idx = np.nonzero(off_diagonal)
    anchors, positives, negatives = [], [], []
    for i, group in enumerate(groups):
        others = np.concatenate([g for j, g in enumerate(groups) if j != i])
        anchors.append(np.repeat(group[a_idx], others.size))
        positives.append(np.repeat(group[p_idx], others.size))
        negatives.append(np.tile(others, a_idx.size))
    return TripletSet(np.concatenate(anchors), np.concatenate(positives), np.concatenate(negatives))


def sample_dense_batch(ds: WeakDataset, m: int, k: int, rng: np.random.Generator) -> List[List[int]]:
    """Draw m identities with at least k records, then k records of each.

    Groups smaller than k are skipped; when fewer than m qualify, all
    qualifying groups are used.

    Raises:
        DataIntegrityException: When fewer than 2 groups have k records
    """
    eligible = [label for label in ds.labels if len(ds.group(label)) >= k]
    if len(eligible) < 2:
        raise DataIntegrityException(f"dense batches need 2 identities with at least {k} records")
    chosen = rng.choice(len(eligible), size=min(m, len(eligible)), replace=False)
    return [
        [int(rid) for rid in rng.choice(np.asarray(ds.group(eligible[c])), size=k, replace=False)]
        for c in chosen
    ]


def gen_sparse(ds: WeakDataset, n: int, rng: np.random.Generator) -> TripletSet:
    """n independently drawn triplets.

    Each picks an identity with at least 2 records uniformly, two distinct
    records of it, and a negative uniformly among the other identities' records.

    Raises:
        DataIntegrityException: Without 2 groups of which one has 2 records
    """
    eligible = [label for label in ds.labels if len(ds.group(label)) >= 2]
    if len(ds.labels) < 2 or not eligible:
        raise DataIntegrityException("sparse triplets need 2 identities, one with at least 2 records")

    ordered = np.concatenate([np.asarray(ds.group(label), dtype=np.int64) for label in ds.labels])
    starts, sizes, offset = {}, {}, 0
    for label in ds.labels:
        starts[label], sizes[label] = offset, len(ds.group(label))
        offset += sizes[label]
    start = np.array([starts[label] for label in eligible], dtype=np.int64)
    size = np.array([sizes[label] for label in eligible], dtype=np.int64)

    pick = rng.integers(len(eligible), size=n)
    g_start, g_size = start[pick], size[pick]
    first = rng.integers(g_size)
    second = rng.integers(g_size - 1)
    second = second + (second >= first)
    outside = rng.integers(ordered.size - g_size)
    outside = outside + np.where(outside >= g_start, g_size, 0)
    return TripletSet(ordered[g_start + first], ordered[g_start + second], ordered[outside])


def _embedded(model: EmbeddingModel, ds: WeakDataset, triplets: TripletSet):
    ids = triplets.record_ids()
    features = ds.features_for(ids)
    return (ids, features, np.searchsorted(ids, triplets.anchors),
            np.searchsorted(ids, triplets.positives), np.searchsorted(ids, triplets.negatives))


def _differences(F: np.ndarray, ia, ip, ineg) -> np.ndarray:
    fa, fp, fn = F[ia], F[ip], F[ineg]
    return np.sum((fa - fp) ** 2, axis=1) - np.sum((fa - fn) ** 2, axis=1)


def triplet_loss(model: EmbeddingModel, ds: WeakDataset, triplets: TripletSet, C: float) -> float:
    """Sum over triplets of max(d2_pos - d2_neg, C); 0 for an empty set."""
    triplets = TripletSet.from_triplets(triplets)
    if len(triplets) == 0:
        return 0.0
    ids, features, ia, ip, ineg = _embedded(model, ds, triplets)
    F = embed_many(model, features, ids)
    return float(np.sum(np.maximum(_differences(F, ia, ip, ineg), C)))


def loss_and_gradient(model: EmbeddingModel, ds: WeakDataset, triplets: TripletSet,
                      C: float) -> Tuple[float, np.ndarray, np.ndarray]:
    """Loss, gradient with respect to the head, and the per-triplet differences.

    Raises:
        DegenerateEmbeddingException: When an involved image embeds to zero
    """
    triplets = TripletSet.from_triplets(triplets)
    if len(triplets) == 0:
        return 0.0, np.zeros_like(model.head), np.zeros(0)

    ids, features, ia, ip, ineg = _embedded(model, ds, triplets)
    H = model.base_features(features)
    V = pre_normalized(model, features)
    norms = np.linalg.norm(V, axis=1)
    bad = np.flatnonzero(~(np.isfinite(norms) & (norms > 0.0)))
    if bad.size:
        raise DegenerateEmbeddingException(record_id=int(ids[bad[0]]))
    F = V / norms[:, np.newaxis]

    diff = _differences(F, ia, ip, ineg)
    loss = float(np.sum(np.maximum(diff, C)))
    active = diff > C

    # per-image accumulation of d loss / d F, in triplet order
    grad_F = np.zeros_like(F)
    fa, fp, fn = F[ia[active]], F[ip[active]], F[ineg[active]]
    np.add.at(grad_F, ia[active], 2.0 * (fn - fp))
    np.add.at(grad_F, ip[active], 2.0 * (fp - fa))
    np.add.at(grad_F, ineg[active], 2.0 * (fa - fn))

    grad_V = (grad_F - F * np.sum(F * grad_F, axis=1, keepdims=True)) / norms[:, np.newaxis]
    grad_U = grad_V if model.pca is None else grad_V @ model.pca.components
    return loss, grad_U.T @ H, diff


def loss_gradient(model: EmbeddingModel, ds: WeakDataset, triplets: TripletSet, C: float) -> np.ndarray:
    """Analytic gradient of ``triplet_loss`` with respect to the head W."""
    return loss_and_gradient(model, ds, triplets, C)[1]


def head_init(e: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Identity when square, otherwise a random matrix with orthonormal rows (or columns when e > d)."""
    if e == d:
        return np.eye(d)
    q, _ = np.linalg.qr(rng.standard_normal((max(e, d), min(e, d))))
    return q.T if e < d else q


class TripletTrainer:
    """SGD training of the embedding head on a cleaned dataset.

    Each step samples a batch per the configured policy, divides the batch
    gradient by the triplet count and updates W <- W - lr * grad.
    """

    LOG_EVERY = 50

    def __init__(self, logger: Optional[logging.Logger] = None):
        self.logger = logger or logging.getLogger(__name__)

    def train_head(self, ds: WeakDataset, model: EmbeddingModel, cfg: TrainConfig) -> TrainResult:
        """Train the head of ``model`` on ``ds``.

        PCA is dropped for training and must be refit on the new head. With
        ``cfg.iterations == 0`` the model is returned unchanged.

        Raises:
            TrainingCollapseException: When an embedding degenerates or the head turns non-finite
            DataIntegrityException: When ``ds`` cannot supply batches for the policy
        """
        if cfg.iterations == 0:
            return TrainResult(model=model, trace=[])

        rng = np.random.default_rng(cfg.seed)
        current = model.with_pca(None)
        if cfg.embed_dim is not None and cfg.embed_dim != current.head_dim:
            current = current.with_head(head_init(cfg.embed_dim, current.base_dim, rng))

        self.logger.info(f"Training head {current.head.shape} on {len(ds)} records "
                         f"({cfg.policy.value}, {cfg.iterations} iterations, lr={cfg.learning_rate})")
        trace: List[TrainStep] = []
        head = current.head.copy()
        for step in range(1, cfg.iterations + 1):
            triplets = self._sample(ds, cfg, rng)
            try:
                loss, gradient, diff = loss_and_gradient(current, ds, triplets, cfg.margin)
            except DegenerateEmbeddingException as e:
                raise TrainingCollapseException("degenerate embedding during training",
                                                iteration=step, cause=e)
            count = len(triplets)
            trace.append(TrainStep(
                iteration=step,
                batch_loss=loss / count,
                active_fraction=float(np.mean(diff > cfg.margin)),
                violation=float(np.mean(np.maximum(diff - cfg.margin, 0.0))),
            ))
            head = head - cfg.learning_rate * (gradient / count)
            if not np.all(np.isfinite(head)):
                raise TrainingCollapseException("head became non-finite", iteration=step)
            current = current.with_head(head)
            if step % self.LOG_EVERY == 0 or step == cfg.iterations:
                self.logger.debug(f"step {step}: loss={trace[-1].batch_loss:.6f} "
                                  f"active={trace[-1].active_fraction:.3f}")

        self.logger.info(f"Training finished: loss {trace[0].batch_loss:.6f} -> {trace[-1].batch_loss:.6f}")
        return TrainResult(model=current, trace=trace)

    @staticmethod
    def _sample(ds: WeakDataset, cfg: TrainConfig, rng: np.random.Generator) -> TripletSet:
        if cfg.policy is TripletPolicy.DENSE:
            return gen_dense(sample_dense_batch(ds, cfg.identities_per_batch, cfg.images_per_identity, rng))
        return gen_sparse(ds, cfg.sparse_batch_size, rng)


def train_head(ds: WeakDataset, model: EmbeddingModel, cfg: TrainConfig,
               logger: Optional[logging.Logger] = None) -> TrainResult:
    return TripletTrainer(logger).train_head(ds, model, cfg)
