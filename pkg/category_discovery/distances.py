"""Hop distances between every pair of vertices."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import networkx as nx  # type: ignore
import numpy as np  # type: ignore

from category_discovery.similarity_graph import SimilarityGraph

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DistanceTable:
    """``dist[u, v]`` is the hop count from `u` to `v`, ``inf`` when unreachable."""
    dist: np.ndarray

    def __post_init__(self) -> None:
        self.dist.setflags(write=False)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def reachable(self, u: int, v: int) -> bool:
        return bool(np.isfinite(self.dist[u, v]))


def all_pairs_distances(graph: SimilarityGraph) -> DistanceTable:
    """Breadth-first search from every vertex; edges are unweighted so BFS is exact."""
    dist = np.full((graph.n, graph.n), np.inf)
    for source, lengths in nx.all_pairs_shortest_path_length(graph.to_networkx()):
        for target, hops in lengths.items():
            dist[source, target] = hops
    logger.debug("Computed hop distances for %d vertices", graph.n)
    return DistanceTable(dist)
