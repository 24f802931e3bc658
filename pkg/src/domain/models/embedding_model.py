"""
Embedding Model Domain Types

EmbeddingModel composes a frozen base transform, a trainable linear head and
an optional PCA step, followed by L2 normalization. PcaTransform is the fitted
projection. Both are immutable; training produces new instances.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from ...infrastructure.exceptions import DataValidationException, DimensionMismatchException


def _frozen(matrix: Any, name: str, ndim: int) -> np.ndarray:
    array = np.array(matrix, dtype=np.float64)
    if array.ndim != ndim:
        raise DataValidationException(f"{name} must be {ndim}-dimensional", field=name,
                                      value=str(array.shape))
    if not np.all(np.isfinite(array)):
        raise DataValidationException(f"{name} contains non-finite values", field=name)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PcaTransform:
    """A fitted principal component projection.

    Attributes:
        mean: Training mean, length n
        components: k x n matrix with orthonormal rows
        explained_variance: k variances, non-increasing
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    ORTHONORMAL_TOLERANCE = 1e-8

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", _frozen(self.mean, "mean", 1))
        object.__setattr__(self, "components", _frozen(self.components, "components", 2))
        object.__setattr__(self, "explained_variance",
                           _frozen(self.explained_variance, "explained_variance", 1))
        self._validate()

    def _validate(self) -> None:
        k, n = self.components.shape
        if self.mean.shape[0] != n:
            raise DimensionMismatchException("PCA mean does not match component width",
                                             expected=n, actual=self.mean.shape[0])
        if self.explained_variance.shape[0] != k:
            raise DimensionMismatchException("explained_variance does not match component count",
                                             expected=k, actual=self.explained_variance.shape[0])
        if np.any(self.explained_variance < 0) or np.any(np.diff(self.explained_variance) > 0):
            raise DataValidationException("explained_variance must be non-negative and non-increasing",
                                          field="explained_variance")
        gram = self.components @ self.components.T
        if not np.allclose(gram, np.eye(k), atol=self.ORTHONORMAL_TOLERANCE, rtol=0.0):
            raise DataValidationException("PCA components are not orthonormal", field="components")

    @property
    def input_dim(self) -> int:
        return int(self.components.shape[1])

    @property
    def output_dim(self) -> int:
        return int(self.components.shape[0])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PcaTransform':
        try:
            return cls(np.asarray(data["mean"]), np.asarray(data["components"]),
                       np.asarray(data["explained_variance"]))
        except KeyError as e:
            raise DataValidationException(f"PCA data must contain '{e.args[0]}' field",
                                          field=e.args[0], value="missing")


@dataclass(frozen=True, eq=False)
class EmbeddingModel:
    """Frozen base, trainable head, optional PCA, then L2 normalization.

    ``embed(x) = normalize(pca(W @ (B @ x)))``; ``base`` None means identity.

    Attributes:
        head: e x d_base trainable matrix W
        base: d_base x d_raw frozen matrix B, or None for the identity
        pca: Optional projection applied to head outputs before normalization
    """

    head: np.ndarray
    base: Optional[np.ndarray] = None
    pca: Optional[PcaTransform] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "head", _frozen(self.head, "head", 2))
        if self.base is not None:
            object.__setattr__(self, "base", _frozen(self.base, "base", 2))
        self._validate()

    def _validate(self) -> None:
        if self.head.shape[0] < 1 or self.head.shape[1] < 1:
            raise DataValidationException("head must have at least one row and column",
                                          field="head", value=str(self.head.shape))
        if self.base is not None and self.base.shape[0] != self.head.shape[1]:
            raise DimensionMismatchException("head width does not match base output",
                                             expected=self.base.shape[0], actual=self.head.shape[1])
        if self.pca is not None and self.pca.input_dim != self.head.shape[0]:
            raise DimensionMismatchException("PCA input does not match head output",
                                             expected=self.head.shape[0], actual=self.pca.input_dim)

    @classmethod
    def identity(cls, dim: int) -> 'EmbeddingModel':
        """The pretrained stand-in on raw features: identity base and head."""
        return cls(head=np.eye(dim))

    @property
    def input_dim(self) -> int:
        return int(self.base.shape[1] if self.base is not None else self.head.shape[1])

    @property
    def base_dim(self) -> int:
        return int(self.head.shape[1])

    @property
    def head_dim(self) -> int:
        return int(self.head.shape[0])

    @property
    def output_dim(self) -> int:
        """Embedding dimension e."""
        return self.pca.output_dim if self.pca is not None else self.head_dim

    def base_features(self, features: np.ndarray) -> np.ndarray:
        """Apply the frozen base to rows of ``features``."""
        features = np.asarray(features, dtype=np.float64)
        if features.shape[-1] != self.input_dim:
            raise DimensionMismatchException("feature dimension does not match the model input",
                                             expected=self.input_dim, actual=features.shape[-1])
        return features if self.base is None else features @ self.base.T

    def head_outputs(self, features: np.ndarray) -> np.ndarray:
        """Head outputs (pre-PCA, pre-normalization) for rows of ``features``."""
        return self.base_features(features) @ self.head.T

    def with_head(self, head: np.ndarray) -> 'EmbeddingModel':
        """A copy with a new head; PCA is dropped when its width no longer fits."""
        head = np.asarray(head)
        pca = self.pca if self.pca is not None and self.pca.input_dim == head.shape[0] else None
        return EmbeddingModel(head=head, base=self.base, pca=pca)

    def with_pca(self, pca: Optional[PcaTransform]) -> 'EmbeddingModel':
        return EmbeddingModel(head=self.head, base=self.base, pca=pca)

    def to_dict(self) -> Dict[str, Any]:
        """JSON form: the head matrix with its shape header, base and PCA."""
        return {
            "shape": list(self.head.shape),
            "head": self.head.tolist(),
            "base": None if self.base is None else {
                "shape": list(self.base.shape),
                "matrix": self.base.tolist(),
            },
            "pca": None if self.pca is None else self.pca.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EmbeddingModel':
        if not isinstance(data, dict) or "head" not in data:
            raise DataValidationException("Model data must contain 'head' field",
                                          field="head", value="missing")
        head = np.asarray(data["head"], dtype=np.float64)
        shape = tuple(data.get("shape", head.shape))
        if head.shape != shape:
            raise DimensionMismatchException("head does not match its shape header",
                                             expected=shape[0] if shape else None,
                                             actual=head.shape[0] if head.ndim else None)
        base = None
        if data.get("base") is not None:
            base = np.asarray(data["base"]["matrix"], dtype=np.float64)
        pca = PcaTransform.from_dict(data["pca"]) if data.get("pca") is not None else None
        return cls(head=head, base=base, pca=pca)

    def __repr__(self) -> str:
        return (f"EmbeddingModel(input={self.input_dim}, base={self.base_dim}, "
                f"head={self.head_dim}, output={self.output_dim}, pca={self.pca is not None})")
