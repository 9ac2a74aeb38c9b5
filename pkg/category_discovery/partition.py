from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Set

import numpy as np  # type: ignore

from category_discovery.exceptions import InvalidParameter
from category_discovery.similarity_graph import SimilarityGraph


@dataclass(frozen=True, eq=False)
class Partition:
    """Community index of every vertex, dense from 0 in order of first appearance."""
    community: np.ndarray

    def __post_init__(self) -> None:
        self.community.setflags(write=False)

    @classmethod
    def from_labels(cls, labels: Iterable[int]) -> Partition:
        """Relabel arbitrary label ids densely, keeping which vertices share a label."""
        seen: dict = {}
        dense = [seen.setdefault(label, len(seen)) for label in labels]
        return cls(np.asarray(dense, dtype=np.int64))

    @classmethod
    def from_communities(cls, n: int, communities: Iterable[Iterable[int]]) -> Partition:
        """Build from vertex sets; vertices left out become singletons."""
        labels = np.full(n, -1, dtype=np.int64)
        for index, members in enumerate(communities):
            for v in members:
                if labels[v] != -1:
                    raise InvalidParameter(f"vertex {v} appears in two communities")
                labels[v] = index
        next_label = labels.max(initial=-1) + 1
        for v in np.flatnonzero(labels == -1):
            labels[v] = next_label
            next_label += 1
        return cls.from_labels(labels.tolist())

    @classmethod
    def singletons(cls, n: int) -> Partition:
        return cls(np.arange(n, dtype=np.int64))

    @property
    def n(self) -> int:
        return len(self.community)

    @property
    def num_communities(self) -> int:
        return int(self.community.max()) + 1 if self.n else 0

    def communities(self) -> List[Set[int]]:
        groups: List[Set[int]] = [set() for _ in range(self.num_communities)]
        for v, c in enumerate(self.community.tolist()):
            groups[c].add(v)
        return groups

    def same_as(self, other: Partition) -> bool:
        """True if both group the vertices identically (labels are canonical)."""
        return self.n == other.n and bool(np.array_equal(self.community, other.community))


def modularity(graph: SimilarityGraph, partition: Partition) -> float:
    """Newman-Girvan modularity ``sum_c e_c / m - (d_c / 2m)^2``.

    Each community term is formed from the ratios directly, so a single
    all-inclusive community scores exactly zero.
    """
    m = len(graph.edges)
    if m == 0:
        raise InvalidParameter("modularity is undefined on a graph without edges")
    if partition.n != graph.n:
        raise InvalidParameter(f"partition covers {partition.n} vertices, graph {graph.n}")

    k = partition.num_communities
    inside = np.zeros(k, dtype=np.int64)
    degree = np.zeros(k, dtype=np.int64)
    labels = partition.community
    for i, j in graph.edges:
        degree[labels[i]] += 1
        degree[labels[j]] += 1
        if labels[i] == labels[j]:
            inside[labels[i]] += 1
    return float(sum(inside[c] / m - (degree[c] / (2 * m)) ** 2 for c in range(k)))
