"""Label propagation, plain and weighted by hop distance to each label's source."""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import numpy as np  # type: ignore

from category_discovery import settings
from category_discovery.detectors.base_detector import DetectionResult, Detector
from category_discovery.distances import DistanceTable, all_pairs_distances
from category_discovery.exceptions import InvalidParameter
from category_discovery.partition import Partition
from category_discovery.similarity_graph import SimilarityGraph

logger = logging.getLogger(__name__)

MODES = ("sync", "async")

# Label counts closer than this are treated as tied.
TIE_TOLERANCE = 1e-12


class WeightKind(str, Enum):
    LINEAR = "linear"
    EXPONENTIAL = "exp"
    UNIT = "unit"


WEIGHT_ALIASES = {
    "linear": WeightKind.LINEAR,
    "exp": WeightKind.EXPONENTIAL,
    "exponential": WeightKind.EXPONENTIAL,
    "unit": WeightKind.UNIT,
}


@dataclass(frozen=True)
class WeightFunction:
    """Vote strength of a label seen `d` hops from its source vertex.

    ``linear`` is ``1 / d``, ``exp`` is ``2 ** -d`` and ``unit`` is 1. Every
    kind gives 1 at the source itself and 0 when the source is unreachable.
    """
    kind: WeightKind

    @classmethod
    def from_name(cls, name: str) -> WeightFunction:
        try:
            return cls(WEIGHT_ALIASES[name.lower()])
        except KeyError:
            raise InvalidParameter(f"unknown weight function '{name}', expected one of {sorted(WEIGHT_ALIASES)}") from None

    def __call__(self, d: float) -> float:
        if d < 0:
            raise InvalidParameter(f"distance must be non-negative, got {d}")
        if math.isinf(d):
            return 0.0
        if d == 0 or self.kind is WeightKind.UNIT:
            return 1.0
        if self.kind is WeightKind.LINEAR:
            return 1.0 / d
        return 2.0 ** -d

    def table(self, distances: DistanceTable) -> np.ndarray:
        """Apply the function to a whole distance table."""
        return np.vectorize(self.__call__, otypes=[float])(distances.dist)


@dataclass
class LabelState:
    """Current labels, each label's source vertex and the pass counter."""
    labels: np.ndarray
    source: Dict[int, int] = field(default_factory=dict)
    iteration: int = 0

    @classmethod
    def initial(cls, n: int) -> LabelState:
        return cls(labels=np.arange(n, dtype=np.int64), source={v: v for v in range(n)})

    @property
    def live_labels(self) -> List[int]:
        return sorted(set(self.labels.tolist()))


def _neighbor_lists(graph: SimilarityGraph) -> List[np.ndarray]:
    neighbors: List[List[int]] = [[] for _ in range(graph.n)]
    for i, j in sorted(graph.edges):
        neighbors[i].append(j)
        neighbors[j].append(i)
    return [np.asarray(nbrs, dtype=np.int64) for nbrs in neighbors]


def _best_labels(
    v: int,
    neighbors: List[np.ndarray],
    labels: np.ndarray,
    state: LabelState,
    vote_weight: Optional[np.ndarray],
) -> List[int]:
    """Labels with the largest (weighted) count among the neighbours of `v`."""
    counts: Dict[int, float] = defaultdict(float)
    for z in neighbors[v].tolist():
        label = int(labels[z])
        counts[label] += 1.0 if vote_weight is None else float(vote_weight[state.source[label], z])
    best = max(counts.values())
    return sorted(label for label, count in counts.items() if count >= best - TIE_TOLERANCE)


def _is_settled(
    neighbors: List[np.ndarray], state: LabelState, vote_weight: Optional[np.ndarray], *, sticky_ties: bool,
) -> bool:
    """No vertex can take a different label in a further pass.

    With sticky ties holding one of the best labels is enough. Without them a
    tie is redrawn, so the current label must be the only best one.
    """
    for v in range(len(neighbors)):
        if len(neighbors[v]) == 0:
            continue
        best = _best_labels(v, neighbors, state.labels, state, vote_weight)
        if int(state.labels[v]) not in best or (not sticky_ties and len(best) > 1):
            return False
    return True


def _propagate(
    graph: SimilarityGraph,
    vote_weight: Optional[np.ndarray],
    *,
    algorithm: str,
    mode: str,
    max_iters: int,
    seed: int,
    sticky_ties: bool,
    record_history: bool,
) -> DetectionResult:
    if mode not in MODES:
        raise InvalidParameter(f"unknown mode '{mode}', expected one of {MODES}")
    if max_iters < 1:
        raise InvalidParameter(f"max_iters must be positive, got {max_iters}")

    rng = np.random.default_rng(seed)
    neighbors = _neighbor_lists(graph)
    state = LabelState.initial(graph.n)
    # The visiting order is drawn once and kept for every pass.
    order = rng.permutation(graph.n)
    history = [state.labels.copy()] if record_history else None
    converged = False

    while state.iteration < max_iters:
        previous = state.labels.copy()
        reading = previous if mode == "sync" else state.labels
        for v in order.tolist():
            if len(neighbors[v]) == 0:
                continue
            candidates = _best_labels(v, neighbors, reading, state, vote_weight)
            if sticky_ties and int(previous[v]) in candidates:
                continue
            chosen = candidates[0] if len(candidates) == 1 else int(rng.choice(candidates))
            state.labels[v] = chosen
        state.iteration += 1
        if history is not None:
            history.append(state.labels.copy())
        if np.array_equal(previous, state.labels) and _is_settled(
            neighbors, state, vote_weight, sticky_ties=sticky_ties,
        ):
            converged = True
            break

    if not converged:
        logger.warning("%s stopped after %d passes without converging", algorithm, state.iteration)
    return DetectionResult(
        partition=Partition.from_labels(state.labels.tolist()),
        algorithm=algorithm,
        iterations=state.iteration,
        converged=converged,
        history=tuple(history) if history is not None else None,
    )


def weighted_label_propagation(
    graph: SimilarityGraph,
    weights: WeightFunction,
    distances: Optional[DistanceTable] = None,
    *,
    mode: str = "async",
    max_iters: int = settings.max_iterations,
    seed: int = 0,
    sticky_ties: bool = True,
    record_history: bool = False,
) -> DetectionResult:
    """Label propagation where each neighbour's vote is scaled by distance.

    A neighbour `z` holding label `L` adds ``weights(dist(source(L), z))`` to
    the count of `L`; the vertex takes the heaviest label, ties drawn
    uniformly from the run's generator. With `sticky_ties` a vertex whose
    current label is among the heaviest keeps it. In ``sync`` mode every
    vertex reads the labels of the previous pass, in ``async`` mode it reads
    labels already updated earlier in the same pass. A run is converged once a
    pass changes nothing and no vertex could draw a different label next.

    The hop distances are computed once up front when not supplied.
    """
    if distances is None:
        distances = all_pairs_distances(graph)
    elif distances.n != graph.n:
        raise InvalidParameter(f"distance table covers {distances.n} vertices, graph {graph.n}")
    return _propagate(
        graph,
        weights.table(distances),
        algorithm=f"wlp-{weights.kind.value}",
        mode=mode,
        max_iters=max_iters,
        seed=seed,
        sticky_ties=sticky_ties,
        record_history=record_history,
    )


def standard_label_propagation(
    graph: SimilarityGraph,
    *,
    mode: str = "async",
    max_iters: int = settings.max_iterations,
    seed: int = 0,
    sticky_ties: bool = True,
    record_history: bool = False,
) -> DetectionResult:
    """Label propagation with every neighbour's vote counting one."""
    return _propagate(
        graph,
        None,
        algorithm="lp",
        mode=mode,
        max_iters=max_iters,
        seed=seed,
        sticky_ties=sticky_ties,
        record_history=record_history,
    )


class LabelPropagation(Detector):
    name = "lp"

    def __init__(
        self,
        *,
        mode: str = "async",
        max_iters: int = settings.max_iterations,
        sticky_ties: bool = True,
        seed: int = 0,
    ):
        super().__init__(seed=seed)
        self.mode = mode
        self.max_iters = max_iters
        self.sticky_ties = sticky_ties

    def detect(self, graph: SimilarityGraph) -> DetectionResult:
        return standard_label_propagation(
            graph, mode=self.mode, max_iters=self.max_iters, seed=self.seed, sticky_ties=self.sticky_ties,
        )

    def describe(self) -> dict:
        return {**super().describe(), "mode": self.mode, "max_iters": self.max_iters, "sticky_ties": self.sticky_ties}


class WeightedLabelPropagation(LabelPropagation):
    name = "wlp"

    def __init__(
        self,
        *,
        weight: str = "exp",
        mode: str = "async",
        max_iters: int = settings.max_iterations,
        sticky_ties: bool = True,
        seed: int = 0,
    ):
        super().__init__(mode=mode, max_iters=max_iters, sticky_ties=sticky_ties, seed=seed)
        self.weights = WeightFunction.from_name(weight)

    def detect(self, graph: SimilarityGraph) -> DetectionResult:
        return weighted_label_propagation(
            graph,
            self.weights,
            mode=self.mode,
            max_iters=self.max_iters,
            seed=self.seed,
            sticky_ties=self.sticky_ties,
        )

    def describe(self) -> dict:
        return {**super().describe(), "weight": self.weights.kind.value}
