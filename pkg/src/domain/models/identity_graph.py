"""
Identity Graph Domain Types

Per-label match graph under a distance threshold, the parameters of the
cleaning pass, and the per-group diagnostics it emits.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, FrozenSet, Optional, Tuple

import numpy as np

from ...infrastructure.exceptions import ConfigurationException, DataValidationException


class ComponentRule(Enum):
    """How the kept set is read off a match graph."""
    ANCHOR = "anchor"            # component containing the max-degree node
    LARGEST = "largest"          # largest component, ties by lowest min record_id
    ONE_HOP = "one_hop"          # anchor plus its direct neighbours only
    SINGLE_PASS = "single_pass"  # one literal pass over the remaining nodes


@dataclass(frozen=True)
class CleanParams:
    """Parameters of a cleaning pass.

    Attributes:
        threshold: Edge threshold T; an edge needs distance < T
        min_group_size: Groups smaller than this are dropped entirely
        component_rule: How the kept set is extracted
    """

    threshold: float
    min_group_size: int = 1
    component_rule: ComponentRule = ComponentRule.ANCHOR

    def __post_init__(self) -> None:
        if isinstance(self.component_rule, str):
            try:
                object.__setattr__(self, "component_rule", ComponentRule(self.component_rule))
            except ValueError:
                raise ConfigurationException(
                    f"unknown component_rule '{self.component_rule}'", setting="component_rule")
        if not (0.0 < float(self.threshold) <= 2.0):
            raise ConfigurationException(
                f"threshold must lie in (0, 2], got {self.threshold}", setting="threshold")
        if int(self.min_group_size) < 1:
            raise ConfigurationException(
                f"min_group_size must be positive, got {self.min_group_size}",
                setting="min_group_size")
        object.__setattr__(self, "threshold", float(self.threshold))
        object.__setattr__(self, "min_group_size", int(self.min_group_size))

    def with_threshold(self, threshold: float) -> 'CleanParams':
        return replace(self, threshold=threshold)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "threshold": self.threshold,
            "min_group_size": self.min_group_size,
            "component_rule": self.component_rule.value,
        }


@dataclass(frozen=True, eq=False)
class IdentityGraph:
    """Match graph of one weak label.

    Node ``i`` is ``nodes[i]``; nodes are sorted by record_id. ``neighbors[i]``
    lists the adjacent node indices in ascending order.

    Attributes:
        label: The weak label
        nodes: Record ids, ascending
        neighbors: Adjacency lists over node indices (symmetric, no self-loops)
        threshold: The threshold T the edges were built with
    """

    label: str
    nodes: Tuple[int, ...]
    neighbors: Tuple[Tuple[int, ...], ...]
    threshold: float

    def __post_init__(self) -> None:
        if len(self.nodes) != len(self.neighbors):
            raise DataValidationException("every node needs an adjacency list", field="neighbors")

    @classmethod
    def from_adjacency(cls, label: str, nodes, adjacency: np.ndarray, threshold: float) -> 'IdentityGraph':
        """Build from a boolean adjacency matrix (diagonal ignored)."""
        adjacency = np.asarray(adjacency, dtype=bool).copy()
        np.fill_diagonal(adjacency, False)
        neighbors = tuple(tuple(int(j) for j in np.flatnonzero(row)) for row in adjacency)
        return cls(label=label, nodes=tuple(int(n) for n in nodes), neighbors=neighbors,
                   threshold=float(threshold))

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def degrees(self) -> Tuple[int, ...]:
        return tuple(len(adj) for adj in self.neighbors)

    @property
    def edge_count(self) -> int:
        return sum(self.degrees) // 2

    @property
    def edges(self) -> FrozenSet[Tuple[int, int]]:
        """Undirected edges as (i, j) node-index pairs with i < j."""
        return frozenset((i, j) for i, adj in enumerate(self.neighbors) for j in adj if i < j)

    def __repr__(self) -> str:
        return (f"IdentityGraph(label='{self.label}', nodes={self.size}, "
                f"edges={self.edge_count}, T={self.threshold:.6g})")


@dataclass(frozen=True)
class GroupDiagnostics:
    """One diagnostics row per cleaned group."""

    label: str
    group_size: int
    edge_count: int
    anchor_record_id: Optional[int]
    component_size: int
    second_component_size: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "group_size": self.group_size,
            "edge_count": self.edge_count,
            "anchor_record_id": self.anchor_record_id,
            "component_size": self.component_size,
            "second_component_size": self.second_component_size,
        }
