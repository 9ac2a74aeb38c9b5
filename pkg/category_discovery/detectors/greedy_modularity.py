from __future__ import annotations

import logging

from networkx.algorithms.community import greedy_modularity_communities  # type: ignore

from category_discovery.detectors.base_detector import DetectionResult, Detector
from category_discovery.partition import Partition
from category_discovery.similarity_graph import SimilarityGraph

logger = logging.getLogger(__name__)


def cnm_greedy_modularity(graph: SimilarityGraph) -> DetectionResult:
    """Clauset-Newman-Moore agglomeration: merge the best pair while modularity grows.

    An edgeless graph has nothing to merge and stays all singletons.
    """
    if not graph.edges:
        logger.info("Graph has no edges, every vertex is its own community")
        return DetectionResult(Partition.singletons(graph.n), algorithm="cnm", iterations=0)

    communities = greedy_modularity_communities(graph.to_networkx())
    partition = Partition.from_communities(graph.n, communities)
    merges = graph.n - partition.num_communities
    return DetectionResult(partition, algorithm="cnm", iterations=merges)


class GreedyModularity(Detector):
    """Deterministic, so the seed is carried only for the record."""
    name = "cnm"

    def detect(self, graph: SimilarityGraph) -> DetectionResult:
        return cnm_greedy_modularity(graph)
