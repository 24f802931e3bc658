"""
Embedding Service - Embeddings, distances and PCA.

Pure functions over immutable models; safe for concurrent use from the
filtering workers.
"""

from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ...domain.models.embedding_model import EmbeddingModel, PcaTransform
from ...domain.models.face_record import FaceRecord
from ...infrastructure.exceptions import (
    DataValidationException,
    DegenerateEmbeddingException,
    DimensionMismatchException,
)


def pre_normalized(model: EmbeddingModel, features: np.ndarray) -> np.ndarray:
    """Head outputs with the model's PCA applied, before normalization."""
    outputs = model.head_outputs(features)
    return outputs if model.pca is None else pca_apply(model.pca, outputs)


def embed(model: EmbeddingModel, rec: FaceRecord) -> np.ndarray:
    """Unit-norm embedding of one record.

    Raises:
        DimensionMismatchException: When the features do not fit the model
        DegenerateEmbeddingException: When the vector is zero before normalization
    """
    return embed_many(model, rec.features[np.newaxis, :], [rec.record_id])[0]


def embed_many(model: EmbeddingModel, features: np.ndarray,
               record_ids: Optional[Sequence[int]] = None) -> np.ndarray:
    """Unit-norm embeddings of the rows of ``features``.

    Args:
        model: The embedding model
        features: n x d_raw matrix
        record_ids: Ids of the rows, used to name a degenerate record

    Raises:
        DegenerateEmbeddingException: On a row that is zero (or non-finite) before normalization
    """
    vectors = pre_normalized(model, np.atleast_2d(np.asarray(features, dtype=np.float64)))
    norms = np.linalg.norm(vectors, axis=1)
    bad = np.flatnonzero(~(np.isfinite(norms) & (norms > 0.0)))
    if bad.size:
        record_id = None if record_ids is None else int(record_ids[bad[0]])
        raise DegenerateEmbeddingException(record_id=record_id)
    return vectors / norms[:, np.newaxis]


def distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance of two embeddings.

    Raises:
        DimensionMismatchException: When the lengths differ
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchException("embedding dimensions differ",
                                         expected=a.shape[-1] if a.ndim else None,
                                         actual=b.shape[-1] if b.ndim else None)
    return float(np.linalg.norm(a - b))


def pairwise_distances(embeddings: np.ndarray) -> np.ndarray:
    """Exact square matrix of Euclidean distances between rows."""
    embeddings = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
    n = embeddings.shape[0]
    if n < 2:
        return np.zeros((n, n))
    return squareform(pdist(embeddings, metric="euclidean"))


def pca_fit(features: np.ndarray, k: int) -> PcaTransform:
    """Fit the top-k principal directions of mean-centered data.

    Uses the eigendecomposition of the sample covariance (divisor m - 1),
    so projecting the training data gives per-coordinate sample variances
    equal to ``explained_variance``. Each component's sign is fixed so its
    largest-magnitude entry is positive.

    Raises:
        DataValidationException: When m < 2, k is out of range, or the data has zero variance
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 2:
        raise DataValidationException("PCA needs at least 2 samples", field="features",
                                      value=str(features.shape))
    m, n = features.shape
    if not (1 <= k <= min(m, n)):
        raise DataValidationException(f"k must lie in [1, {min(m, n)}]", field="k", value=str(k))
    if np.ptp(features, axis=0).max() == 0.0:
        raise DataValidationException("zero variance", field="features")

    mean = features.mean(axis=0)
    centered = features - mean
    covariance = centered.T @ centered / (m - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    order = np.argsort(eigenvalues)[::-1][:k]
    components = eigenvectors[:, order].T
    signs = np.sign(components[np.arange(k), np.argmax(np.abs(components), axis=1)])
    components = components * signs[:, np.newaxis]
    variance = np.clip(eigenvalues[order], 0.0, None)
    return PcaTransform(mean=mean, components=components, explained_variance=variance)


def pca_apply(t: PcaTransform, v: np.ndarray) -> np.ndarray:
    """Project a vector (or rows of a matrix): components . (v - mean).

    Raises:
        DimensionMismatchException: When the width does not match the transform
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != t.input_dim:
        raise DimensionMismatchException("vector does not match the PCA input",
                                         expected=t.input_dim, actual=v.shape[-1])
    return (v - t.mean) @ t.components.T


def reconstruct(t: PcaTransform, y: np.ndarray) -> np.ndarray:
    """Map projected coordinates back to the input space."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1] != t.output_dim:
        raise DimensionMismatchException("coordinates do not match the PCA output",
                                         expected=t.output_dim, actual=y.shape[-1])
    return y @ t.components + t.mean
