from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Optional, Tuple, TypeVar, TYPE_CHECKING

import numpy as np  # type: ignore

if TYPE_CHECKING:
    from category_discovery.partition import Partition
    from category_discovery.similarity_graph import SimilarityGraph


T = TypeVar("T", bound="Detector")


@dataclass(frozen=True, eq=False)
class DetectionResult:
    partition: Partition
    algorithm: str
    iterations: int = 0
    converged: bool = True
    # Labels after each pass, initial labels first; only kept on request.
    history: Optional[Tuple[np.ndarray, ...]] = None

    @property
    def num_communities(self) -> int:
        return self.partition.num_communities

    def metadata(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "iterations": self.iterations,
            "converged": self.converged,
            "communities": self.num_communities,
        }


class Detector:
    """
    A community detection algorithm with its settings fixed, ready to run on graphs.
    """
    name: str = "<unnamed>"

    def __init__(self, *, seed: int = 0):
        self.seed = seed

    def detect(self, graph: SimilarityGraph) -> DetectionResult:
        """Split the vertices of `graph` into communities.

        This method must be overridden by Detector subclasses.
        """
        raise NotImplementedError()

    def spawn(self: T, seed: int) -> T:
        """Return a copy of this detector that draws from `seed`."""
        clone = copy.deepcopy(self)
        clone.seed = seed
        return clone

    def describe(self) -> dict:
        return {"name": self.name, "seed": self.seed}

    def __repr__(self) -> str:
        return f"Detector [{self.name}]"
