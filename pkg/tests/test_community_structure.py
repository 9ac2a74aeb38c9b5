"""Hop distances, partitions, modularity and the greedy modularity detector."""
import math

import networkx as nx
import numpy as np
import pytest

from category_discovery import detector_factories
from category_discovery.detectors.greedy_modularity import GreedyModularity, cnm_greedy_modularity
from category_discovery.detectors.label_propagation import WeightedLabelPropagation
from category_discovery.distances import all_pairs_distances
from category_discovery.exceptions import InvalidParameter
from category_discovery.partition import Partition, modularity
from category_discovery.similarity_graph import SbmConfig, SimilarityGraph, generate_sbm


def set_partitions(items):
    """Every partition of `items` into non-empty blocks."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for smaller in set_partitions(rest):
        for i in range(len(smaller)):
            yield smaller[:i] + [[first] + smaller[i]] + smaller[i + 1:]
        yield [[first]] + smaller


def reachability_distances(graph: SimilarityGraph) -> np.ndarray:
    """Hop counts from successive adjacency powers."""
    adjacency = graph.adjacency().astype(np.int64)
    dist = np.full((graph.n, graph.n), np.inf)
    np.fill_diagonal(dist, 0)
    power = np.eye(graph.n, dtype=np.int64)
    for hops in range(1, graph.n):
        power = np.minimum(power @ adjacency, 1)
        dist[(power > 0) & np.isinf(dist)] = hops
    return dist


def test_path_distances(path_graph):
    table = all_pairs_distances(path_graph)
    assert table.dist[0, 2] == 2
    assert table.dist[2, 0] == 2
    assert table.reachable(0, 2)


def test_disjoint_triangles_are_unreachable(two_triangles):
    table = all_pairs_distances(two_triangles)
    assert math.isinf(table.dist[0, 3])
    assert not table.reachable(2, 5)
    assert table.dist[0, 1] == 1


@pytest.mark.parametrize("seed", range(10))
def test_distances_match_adjacency_powers(seed):
    graph, _ = generate_sbm(SbmConfig(communities=4, size=5, p_in=0.4, p_out=0.05, seed=seed))
    table = all_pairs_distances(graph)
    assert np.array_equal(table.dist, reachability_distances(graph))
    assert np.array_equal(table.dist, table.dist.T)
    assert np.all(np.diag(table.dist) == 0)


def test_distance_table_is_read_only(path_graph):
    table = all_pairs_distances(path_graph)
    with pytest.raises(ValueError):
        table.dist[0, 1] = 5


def test_partition_from_labels_is_dense():
    partition = Partition.from_labels([7, 7, 3, 9, 3])
    assert partition.community.tolist() == [0, 0, 1, 2, 1]
    assert partition.num_communities == 3
    assert partition.communities() == [{0, 1}, {2, 4}, {3}]


def test_partition_from_communities_fills_singletons():
    partition = Partition.from_communities(5, [{3, 4}, {1}])
    assert partition.community.tolist() == [0, 1, 2, 3, 3]
    assert partition.same_as(Partition.from_labels(["a", "b", "c", "d", "d"]))


def test_partition_rejects_overlaps():
    with pytest.raises(InvalidParameter):
        Partition.from_communities(3, [{0, 1}, {1, 2}])


def test_two_triangles_modularity(two_triangles):
    partition = Partition.from_labels([0, 0, 0, 1, 1, 1])
    assert modularity(two_triangles, partition) == pytest.approx(0.5)


@pytest.mark.parametrize("seed", range(20))
def test_single_community_scores_exactly_zero(seed):
    graph, _ = generate_sbm(SbmConfig(communities=3, size=5, p_in=0.6, p_out=0.2, seed=seed))
    if graph.edges:
        assert modularity(graph, Partition.from_labels([0] * graph.n)) == 0.0


@pytest.mark.parametrize("seed", range(20))
def test_modularity_agrees_with_networkx_and_bounds(seed):
    graph, _ = generate_sbm(SbmConfig(communities=4, size=5, p_in=0.5, p_out=0.1, seed=seed))
    labels = np.random.default_rng(seed).integers(0, 4, graph.n)
    partition = Partition.from_labels(labels.tolist())
    ours = modularity(graph, partition)
    theirs = nx.community.modularity(graph.to_networkx(), partition.communities())
    assert ours == pytest.approx(theirs, abs=1e-12)
    assert -0.5 <= ours <= 1.0


def test_modularity_rejects_edgeless_graph():
    with pytest.raises(InvalidParameter):
        modularity(SimilarityGraph.from_pairs(3, []), Partition.singletons(3))


def test_modularity_rejects_size_mismatch(two_triangles):
    with pytest.raises(InvalidParameter):
        modularity(two_triangles, Partition.singletons(4))


def test_cnm_two_triangles(two_triangles):
    result = cnm_greedy_modularity(two_triangles)
    assert sorted(map(sorted, result.partition.communities())) == [[0, 1, 2], [3, 4, 5]]
    assert modularity(two_triangles, result.partition) == pytest.approx(0.5)


def test_cnm_star_reaches_the_best_modularity(star_graph):
    result = cnm_greedy_modularity(star_graph)
    greedy = modularity(star_graph, result.partition)
    best = max(
        modularity(star_graph, Partition.from_communities(4, blocks))
        for blocks in set_partitions(list(range(4)))
    )
    assert result.num_communities == 1
    assert greedy <= best + 1e-12
    assert greedy == pytest.approx(best, abs=1e-12)


def test_cnm_edgeless_graph_gives_singletons():
    result = cnm_greedy_modularity(SimilarityGraph.from_pairs(4, []))
    assert result.partition.same_as(Partition.singletons(4))
    assert result.iterations == 0


def test_cnm_is_deterministic():
    graph, _ = generate_sbm(SbmConfig(communities=5, size=5, p_in=0.7, p_out=0.05, seed=3))
    assert GreedyModularity(seed=1).detect(graph).partition.same_as(GreedyModularity(seed=2).detect(graph).partition)


def test_factory_builds_requested_detectors():
    assert isinstance(detector_factories.build("cnm"), GreedyModularity)
    built = detector_factories.build("wlp", weight="linear", mode="sync", sticky_ties=False, seed=4)
    assert isinstance(built, WeightedLabelPropagation)
    assert built.describe()["weight"] == "linear"
    assert built.seed == 4
    with pytest.raises(InvalidParameter):
        detector_factories.build("louvain")


def test_factory_spawn_leaves_prototype_alone():
    clone = detector_factories.spawn("wlp-linear", 77)
    assert clone.seed == 77
    assert detector_factories.wlp_linear.seed == 0
    with pytest.raises(InvalidParameter):
        detector_factories.spawn("nope", 1)
