"""
Match Graph Service - Per-identity graph filtering.

Builds the thresholded match graph of every weak label, picks the anchor
(the node with the most neighbours) and keeps its connected component.
Groups are independent, so they are filtered on a thread pool and merged
in label order.
"""

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple
import logging
import threading

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .embedding_service import embed_many, pairwise_distances
from ...domain.models.cleaned_dataset import CleanedDataset
from ...domain.models.embedding_model import EmbeddingModel
from ...domain.models.face_record import FaceRecord
from ...domain.models.identity_graph import CleanParams, ComponentRule, GroupDiagnostics, IdentityGraph
from ...domain.models.weak_dataset import WeakDataset
from ...infrastructure.exceptions import ConfigurationException, DataValidationException


def graph_from_distances(label: str, nodes: Sequence[int], distances: np.ndarray,
                         threshold: float) -> IdentityGraph:
    """Edge (i, j) iff distances[i, j] < threshold, i != j."""
    return IdentityGraph.from_adjacency(label, nodes, np.asarray(distances) < threshold, threshold)


def build_graph(group: Sequence[FaceRecord], model: EmbeddingModel, T: float) -> IdentityGraph:
    """Exact all-pairs match graph of one group.

    Raises:
        DataValidationException: When the group is empty or mixes weak labels
    """
    if not group:
        raise DataValidationException("cannot build a graph of an empty group", field="group")
    labels = {r.weak_label for r in group}
    if len(labels) != 1:
        raise DataValidationException("group mixes weak labels", field="group", value=str(sorted(labels)))
    records = sorted(group, key=lambda r: r.record_id)
    ids = [r.record_id for r in records]
    embeddings = embed_many(model, np.vstack([r.features for r in records]), ids)
    return graph_from_distances(records[0].weak_label, ids, pairwise_distances(embeddings), T)


def find_anchor(g: IdentityGraph) -> int:
    """Node index of maximum degree; ties go to the lowest record_id."""
    if g.size == 0:
        raise DataValidationException("graph has no nodes", field="nodes")
    degrees = g.degrees
    return min(range(g.size), key=lambda i: (-degrees[i], g.nodes[i]))


def component_indices(g: IdentityGraph, root: int) -> List[int]:
    """Node indices reachable from ``root``, by breadth-first traversal."""
    seen = {root}
    queue = deque([root])
    while queue:
        node = queue.popleft()
        for neighbor in g.neighbors[node]:
            if neighbor not in seen:
                seen.add(neighbor)
                queue.append(neighbor)
    return sorted(seen)


def extract_component(g: IdentityGraph, root: int) -> FrozenSet[int]:
    """Record ids of the connected component containing ``root``."""
    if not (0 <= root < g.size):
        raise DataValidationException("root is not a node of the graph", field="root", value=str(root))
    return frozenset(g.nodes[i] for i in component_indices(g, root))


def component_labels(g: IdentityGraph) -> np.ndarray:
    """Component label of every node."""
    rows = [i for i, adj in enumerate(g.neighbors) for _ in adj]
    cols = [j for adj in g.neighbors for j in adj]
    adjacency = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(g.size, g.size))
    _, labels = connected_components(adjacency, directed=False)
    return labels


def _largest_component(g: IdentityGraph, labels: np.ndarray) -> FrozenSet[int]:
    nodes = np.asarray(g.nodes)
    best = min(np.unique(labels),
               key=lambda c: (-int(np.sum(labels == c)), int(nodes[labels == c].min())))
    return frozenset(int(n) for n in nodes[labels == best])


def _single_pass(g: IdentityGraph, anchor: int) -> FrozenSet[int]:
    """One literal pass over the remaining nodes in ascending record_id order.

    Misses members that only connect through a node visited later; kept to
    compare against the fixed-point component.
    """
    kept = {anchor}
    for node in sorted(range(g.size), key=lambda i: g.nodes[i]):
        if node != anchor and any(neighbor in kept for neighbor in g.neighbors[node]):
            kept.add(node)
    return frozenset(g.nodes[i] for i in kept)


def select_kept(g: IdentityGraph, rule: ComponentRule) -> Tuple[FrozenSet[int], GroupDiagnostics]:
    """Apply a component rule to a graph and describe the result."""
    anchor = find_anchor(g)
    labels = component_labels(g)
    if rule is ComponentRule.ANCHOR:
        kept = extract_component(g, anchor)
    elif rule is ComponentRule.LARGEST:
        kept = _largest_component(g, labels)
    elif rule is ComponentRule.ONE_HOP:
        kept = frozenset([g.nodes[anchor], *(g.nodes[j] for j in g.neighbors[anchor])])
    elif rule is ComponentRule.SINGLE_PASS:
        kept = _single_pass(g, anchor)
    else:
        raise ConfigurationException(f"unsupported component rule {rule}", setting="component_rule")

    sizes = np.bincount(labels)
    home = labels[g.nodes.index(min(kept))]
    others = np.delete(sizes, home)
    diagnostics = GroupDiagnostics(
        label=g.label,
        group_size=g.size,
        edge_count=g.edge_count,
        anchor_record_id=g.nodes[anchor],
        component_size=len(kept),
        second_component_size=int(others.max()) if others.size else 0,
    )
    return kept, diagnostics


def clean_identity(group: Sequence[FaceRecord], model: EmbeddingModel, params: CleanParams) -> FrozenSet[int]:
    """Kept record ids of one group; empty below ``min_group_size``."""
    if len(group) < params.min_group_size:
        return frozenset()
    kept, _ = select_kept(build_graph(group, model, params.threshold), params.component_rule)
    return kept


class GroupDistances:
    """Per-group distance matrices of one (dataset, model) pair.

    Embeddings are computed once on construction; a group's matrix is
    computed on first use and cached, so threshold sweeps reuse it.
    """

    def __init__(self, ds: WeakDataset, model: EmbeddingModel):
        self.ds = ds
        self.model = model
        self.embeddings = embed_many(model, ds.matrix, ds.record_ids)
        self._cache: Dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    @property
    def labels(self) -> List[str]:
        return self.ds.labels

    def nodes(self, label: str) -> Tuple[int, ...]:
        return self.ds.group(label)

    def matrix(self, label: str) -> np.ndarray:
        with self._lock:
            cached = self._cache.get(label)
        if cached is None:
            cached = pairwise_distances(self.embeddings[self.ds.rows(self.ds.group(label))])
            with self._lock:
                self._cache.setdefault(label, cached)
        return cached

    def within_group(self) -> np.ndarray:
        """All within-group pairwise distances, concatenated in label order."""
        parts = []
        for label in self.labels:
            matrix = self.matrix(label)
            parts.append(matrix[np.triu_indices(matrix.shape[0], k=1)])
        return np.concatenate(parts) if parts else np.zeros(0)


class MatchGraphService:
    """Service for filtering datasets with per-identity match graphs.

    This service handles:
    - Graph construction and component extraction per weak label
    - Parallel filtering over groups with a deterministic merge
    - Per-group diagnostics
    """

    def __init__(self, workers: int = 1, logger: Optional[logging.Logger] = None):
        """Initialize the match graph service.

        Args:
            workers: Thread count for group filtering
            logger: Optional logger instance
        """
        if workers < 1:
            raise ConfigurationException("workers must be positive", setting="workers")
        self.workers = workers
        self.logger = logger or logging.getLogger(__name__)

    def clean_dataset(self, ds: WeakDataset, model: EmbeddingModel, params: CleanParams,
                      iteration: int = 0) -> CleanedDataset:
        """Apply ``clean_identity`` to every group of ``ds``."""
        cleaned, _ = self.clean_with_diagnostics(GroupDistances(ds, model), params, iteration=iteration)
        return cleaned

    def clean_distances(self, distances: GroupDistances, params: CleanParams,
                        threshold: Optional[float] = None, iteration: int = 0) -> CleanedDataset:
        """Filter from cached distances, optionally at a threshold other than ``params``'."""
        cleaned, _ = self.clean_with_diagnostics(distances, params, threshold, iteration)
        return cleaned

    def clean_with_diagnostics(self, distances: GroupDistances, params: CleanParams,
                               threshold: Optional[float] = None,
                               iteration: int = 0) -> Tuple[CleanedDataset, List[GroupDiagnostics]]:
        """Filter every group and collect one diagnostics row per group.

        Args:
            distances: Cached group distances of the dataset and model
            params: Rule and size gate (and threshold unless overridden)
            threshold: Threshold to use instead of ``params.threshold``
            iteration: Pipeline pass recorded on the result

        Returns:
            (cleaned dataset, diagnostics in label order)
        """
        T = params.threshold if threshold is None else float(threshold)
        if not T > 0.0:
            raise ConfigurationException(f"threshold must be positive, got {T}", setting="threshold")

        def work(label: str) -> Tuple[str, FrozenSet[int], GroupDiagnostics]:
            return (label, *self._clean_group(distances, label, T, params))

        labels = distances.labels
        if self.workers == 1 or len(labels) < 2:
            results = [work(label) for label in labels]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(work, labels))

        results.sort(key=lambda item: item[0])
        kept = {label: ids for label, ids, _ in results}
        cleaned = CleanedDataset(kept=kept, iteration=iteration, threshold_used=T)
        self.logger.debug(f"Filtered {len(labels)} groups at T={T:.6g}: kept {cleaned.kept_count}")
        return cleaned, [diag for _, _, diag in results]

    def _clean_group(self, distances: GroupDistances, label: str, threshold: float,
                     params: CleanParams) -> Tuple[FrozenSet[int], GroupDiagnostics]:
        nodes = distances.nodes(label)
        if len(nodes) < params.min_group_size:
            return frozenset(), GroupDiagnostics(label, len(nodes), 0, None, 0, 0)
        graph = graph_from_distances(label, nodes, distances.matrix(label), threshold)
        return select_kept(graph, params.component_rule)
