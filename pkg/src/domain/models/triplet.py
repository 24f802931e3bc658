"""
Triplet Domain Types

Triplets of record ids, their array-backed collection, the training
configuration of the embedding head and the per-step loss trace.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Iterable, Iterator, List, Sequence, Union, overload

import numpy as np

from ...infrastructure.exceptions import ConfigurationException, DataValidationException


class TripletPolicy(Enum):
    """Batch construction policy for SGD."""
    DENSE = "dense"    # all triplets over m identities x k images
    SPARSE = "sparse"  # independently drawn triplets


@dataclass(frozen=True)
class Triplet:
    """(anchor, positive, negative) record ids.

    Label constraints (anchor and positive share a weak label, the negative
    does not) are checked against a dataset by the generators.
    """

    anchor: int
    positive: int
    negative: int

    def __post_init__(self) -> None:
        if self.anchor == self.positive:
            raise DataValidationException(
                "anchor and positive must be different records",
                field="positive", value=str(self.positive))


def _id_array(ids: Iterable[int]) -> np.ndarray:
    if not isinstance(ids, np.ndarray):
        ids = list(ids)
    return np.array(ids, dtype=np.int64).reshape(-1)


class TripletSet(Sequence[Triplet]):
    """An immutable sequence of triplets stored as three id arrays.

    Dense batches hold tens of thousands of triplets per SGD step, so the
    ids live in numpy arrays and ``Triplet`` objects are built on access.
    """

    def __init__(self, anchors: Iterable[int], positives: Iterable[int], negatives: Iterable[int]):
        self.anchors = _id_array(anchors)
        self.positives = _id_array(positives)
        self.negatives = _id_array(negatives)
        if not (self.anchors.shape == self.positives.shape == self.negatives.shape):
            raise DataValidationException("triplet id arrays must have equal length", field="triplets")
        if np.any(self.anchors == self.positives):
            raise DataValidationException("anchor and positive must be different records",
                                          field="positive")
        for array in (self.anchors, self.positives, self.negatives):
            array.setflags(write=False)

    @classmethod
    def from_triplets(cls, triplets: Iterable[Triplet]) -> 'TripletSet':
        if isinstance(triplets, TripletSet):
            return triplets
        items = list(triplets)
        return cls([t.anchor for t in items], [t.positive for t in items], [t.negative for t in items])

    @classmethod
    def empty(cls) -> 'TripletSet':
        return cls(np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int64))

    def __len__(self) -> int:
        return int(self.anchors.shape[0])

    @overload
    def __getitem__(self, index: int) -> Triplet: ...

    @overload
    def __getitem__(self, index: slice) -> 'TripletSet': ...

    def __getitem__(self, index: Union[int, slice]) -> Union[Triplet, 'TripletSet']:
        if isinstance(index, slice):
            return TripletSet(self.anchors[index], self.positives[index], self.negatives[index])
        return Triplet(int(self.anchors[index]), int(self.positives[index]), int(self.negatives[index]))

    def __iter__(self) -> Iterator[Triplet]:
        for a, p, n in zip(self.anchors.tolist(), self.positives.tolist(), self.negatives.tolist()):
            yield Triplet(a, p, n)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TripletSet):
            return NotImplemented
        return (np.array_equal(self.anchors, other.anchors)
                and np.array_equal(self.positives, other.positives)
                and np.array_equal(self.negatives, other.negatives))

    def record_ids(self) -> np.ndarray:
        """Distinct record ids referenced by the set, ascending."""
        return np.unique(np.concatenate([self.anchors, self.positives, self.negatives]))

    def __repr__(self) -> str:
        return f"TripletSet({len(self)} triplets)"


@dataclass(frozen=True)
class TrainConfig:
    """SGD configuration of the embedding head.

    ``margin`` is the floor C of the hinge; a negative C gives the usual
    margin behaviour since max(diff, C) = C + max(diff - C, 0).

    Attributes:
        margin: C (may be negative)
        learning_rate: Constant SGD step size
        identities_per_batch: m, identities in a dense batch
        images_per_identity: k, images per identity in a dense batch
        iterations: Number of SGD steps (0 leaves the head untouched)
        policy: Dense or sparse triplet generation
        sparse_batch_size: Triplets per sparse batch
        seed: Seed of the batch sampler and of non-square head initialization
        embed_dim: Head output dimension e; None keeps the base dimension
    """

    margin: float = -0.2
    learning_rate: float = 0.5
    identities_per_batch: int = 8
    images_per_identity: int = 10
    iterations: int = 500
    policy: TripletPolicy = TripletPolicy.DENSE
    sparse_batch_size: int = 2000
    seed: int = 0
    embed_dim: Union[int, None] = None

    def __post_init__(self) -> None:
        if isinstance(self.policy, str):
            try:
                object.__setattr__(self, "policy", TripletPolicy(self.policy))
            except ValueError:
                raise ConfigurationException(f"unknown triplet policy '{self.policy}'", setting="policy")
        self._validate()

    def _validate(self) -> None:
        if not np.isfinite(self.margin):
            raise ConfigurationException("margin must be finite", setting="margin")
        if not self.learning_rate >= 0.0:
            raise ConfigurationException("learning_rate must be non-negative", setting="learning_rate")
        if self.iterations < 0:
            raise ConfigurationException("iterations must be non-negative", setting="iterations")
        if self.policy is TripletPolicy.DENSE:
            if self.identities_per_batch < 2:
                raise ConfigurationException("dense batches need at least 2 identities",
                                             setting="identities_per_batch")
            if self.images_per_identity < 2:
                raise ConfigurationException("dense batches need at least 2 images per identity",
                                             setting="images_per_identity")
        if self.sparse_batch_size < 1:
            raise ConfigurationException("sparse_batch_size must be positive", setting="sparse_batch_size")
        if self.seed < 0:
            raise ConfigurationException("seed must be unsigned", setting="seed")
        if self.embed_dim is not None and self.embed_dim < 1:
            raise ConfigurationException("embed_dim must be positive", setting="embed_dim")

    def with_seed(self, seed: int) -> 'TrainConfig':
        return replace(self, seed=seed)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "margin": self.margin,
            "learning_rate": self.learning_rate,
            "identities_per_batch": self.identities_per_batch,
            "images_per_identity": self.images_per_identity,
            "iterations": self.iterations,
            "policy": self.policy.value,
            "sparse_batch_size": self.sparse_batch_size,
            "seed": self.seed,
            "embed_dim": self.embed_dim,
        }


@dataclass(frozen=True)
class TrainStep:
    """One row of the loss trace.

    ``batch_loss`` is the per-triplet mean of the hinge objective before the
    update; ``violation`` the per-triplet mean of max(diff - C, 0).
    """

    iteration: int
    batch_loss: float
    active_fraction: float
    violation: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "iteration": self.iteration,
            "batch_loss": self.batch_loss,
            "active_fraction": self.active_fraction,
            "violation": self.violation,
        }


@dataclass(frozen=True)
class TrainResult:
    """A trained model with its loss trace."""

    model: Any
    trace: List[TrainStep] = field(default_factory=list)
