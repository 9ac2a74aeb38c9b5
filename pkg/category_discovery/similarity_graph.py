"""Item similarity matrices, thresholded item graphs and planted-partition graphs."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from math import comb
from typing import FrozenSet, Iterable, Tuple

import networkx as nx  # type: ignore
import numpy as np  # type: ignore

from category_discovery.exceptions import InvalidParameter
from category_discovery.ranking_model import GroundTruth, RankingMatrix

logger = logging.getLogger(__name__)

SOURCES = ("thresholded", "sbm")

# Voters summed per vectorised step; bounds the V×N×N temporary.
VOTER_CHUNK = 64


def similarity(a: int, b: int, n: int) -> float:
    """Closeness of two ranks among `n` items: ``1 - |a - b| / n``."""
    if n < 1:
        raise InvalidParameter(f"item count must be positive, got {n}")
    if not (0 <= a < n and 0 <= b < n):
        raise InvalidParameter(f"ranks ({a}, {b}) outside [0, {n - 1}]")
    return 1.0 - abs(a - b) / n


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Mean pairwise similarity and the number of voters behind each mean."""
    mean_sim: np.ndarray
    voters_counted: np.ndarray

    def __post_init__(self) -> None:
        if self.mean_sim.shape != self.voters_counted.shape or self.mean_sim.ndim != 2:
            raise InvalidParameter("similarity and count matrices must be the same N×N shape")
        self.mean_sim.setflags(write=False)
        self.voters_counted.setflags(write=False)

    @property
    def n(self) -> int:
        return self.mean_sim.shape[0]


@dataclass(frozen=True)
class SimilarityGraph:
    """A simple undirected graph over items ``0..n-1``.

    Edges are stored as sorted ``(i, j)`` pairs with ``i < j``.
    """
    n: int
    edges: FrozenSet[Tuple[int, int]]
    epsilon: float = float("nan")
    source: str = "thresholded"
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        if self.source not in SOURCES:
            raise InvalidParameter(f"unknown graph source '{self.source}'")
        for i, j in self.edges:
            if not (0 <= i < j < self.n):
                raise InvalidParameter(f"edge ({i}, {j}) is not a sorted pair of items below {self.n}")

    @classmethod
    def from_pairs(
        cls, n: int, pairs: Iterable[Tuple[int, int]], *, epsilon: float = float("nan"), source: str = "thresholded",
    ) -> SimilarityGraph:
        """Build a graph from unordered pairs, dropping self-loops and duplicates."""
        edges = frozenset((min(i, j), max(i, j)) for i, j in pairs if i != j)
        return cls(n=n, edges=edges, epsilon=epsilon, source=source)

    @property
    def possible_pairs(self) -> int:
        return comb(self.n, 2)

    @property
    def edge_ratio(self) -> float:
        """Realised edges over the ``C(n, 2)`` possible item pairs."""
        if self.possible_pairs == 0:
            return 0.0
        return len(self.edges) / self.possible_pairs

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(sorted(self.edges))
        return graph

    def adjacency(self) -> np.ndarray:
        matrix = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.edges:
            matrix[i, j] = matrix[j, i] = True
        return matrix

    def sidecar(self) -> dict:
        """The JSON metadata written next to the edge list."""
        return {
            "n": self.n,
            "epsilon": None if np.isnan(self.epsilon) else self.epsilon,
            "edges": len(self.edges),
            "edge_ratio": self.edge_ratio,
            "source": self.source,
            **self.metadata,
        }


def _distance_sum(ranks: np.ndarray) -> np.ndarray:
    """Sum over the given voters of ``|rank_i - rank_j|`` for every item pair."""
    total = np.zeros((ranks.shape[1], ranks.shape[1]), dtype=np.int64)
    for start in range(0, ranks.shape[0], VOTER_CHUNK):
        chunk = ranks[start:start + VOTER_CHUNK].astype(np.int64)
        total += np.abs(chunk[:, :, None] - chunk[:, None, :]).sum(axis=0)
    return total


def build_similarity_matrix(rankings: RankingMatrix, *, jobs: int = 1) -> SimilarityMatrix:
    """Average ``similarity`` over all voters for every item pair.

    Per-voter distances are summed as integers before dividing, so any
    split of the voters over `jobs` processes gives the exact same matrix.
    """
    if jobs < 1:
        raise InvalidParameter(f"jobs must be positive, got {jobs}")
    V, n = rankings.voters, rankings.items
    if V == 0:
        raise InvalidParameter("no voters to average over")

    if jobs == 1:
        total = _distance_sum(rankings.ranks)
    else:
        parts = np.array_split(np.asarray(rankings.ranks), jobs)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            total = sum(pool.map(_distance_sum, parts))

    mean_sim = 1.0 - total / (V * n)
    np.fill_diagonal(mean_sim, 1.0)
    counts = np.full((n, n), V, dtype=np.int64)
    logger.debug("Built %d×%d similarity matrix from %d voters", n, n, V)
    return SimilarityMatrix(mean_sim, counts)


def threshold_graph(sim: SimilarityMatrix, epsilon: float) -> SimilarityGraph:
    """Connect every item pair whose mean similarity is strictly above `epsilon`.

    Pairs no voter saw together never become edges.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise InvalidParameter(f"epsilon must lie in [0, 1], got {epsilon}")
    rows, cols = np.triu_indices(sim.n, k=1)
    keep = (sim.mean_sim[rows, cols] > epsilon) & (sim.voters_counted[rows, cols] > 0)
    edges = frozenset(zip(rows[keep].tolist(), cols[keep].tolist()))
    graph = SimilarityGraph(n=sim.n, edges=edges, epsilon=float(epsilon), source="thresholded")
    logger.info("Threshold %.4f kept %d of %d pairs (edge ratio %.3f)",
                epsilon, len(edges), graph.possible_pairs, graph.edge_ratio)
    return graph


@dataclass(frozen=True)
class SbmConfig:
    """Planted partition: `communities` blocks of `size`, edge odds `p_in` / `p_out`.

    With `directed_draws` every ordered pair is drawn once and an undirected
    edge is kept when either direction hits, so a pair joins with odds
    ``1 - (1 - p) ** 2``.
    """
    communities: int
    size: int
    p_in: float
    p_out: float
    seed: int = 0
    directed_draws: bool = False

    def __post_init__(self) -> None:
        if self.communities < 1 or self.size < 1:
            raise InvalidParameter("communities and size must be positive")
        for name in ("p_in", "p_out"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParameter(f"{name} must be a probability, got {value}")
        if self.p_out > self.p_in:
            logger.warning("p_out=%.3f exceeds p_in=%.3f: graph is not assortative", self.p_out, self.p_in)

    @property
    def n(self) -> int:
        return self.communities * self.size

    @property
    def pair_odds(self) -> Tuple[float, float]:
        """Chance that an unordered pair is joined, within and across blocks."""
        if not self.directed_draws:
            return self.p_in, self.p_out
        return 1 - (1 - self.p_in) ** 2, 1 - (1 - self.p_out) ** 2

    def with_seed(self, seed: int) -> SbmConfig:
        return replace(self, seed=seed)


def generate_sbm(config: SbmConfig) -> Tuple[SimilarityGraph, GroundTruth]:
    """Draw a planted-partition graph and its block membership."""
    sizes = [config.size] * config.communities
    graph = nx.random_partition_graph(
        sizes, config.p_in, config.p_out, seed=config.seed, directed=config.directed_draws,
    )
    # from_pairs folds (i, j) and (j, i) into one edge.
    result = SimilarityGraph.from_pairs(config.n, graph.edges(), source="sbm")
    truth = GroundTruth.planted(config.communities, config.size)
    return result, truth
