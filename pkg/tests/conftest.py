from pathlib import Path

import pytest

from category_discovery import settings
from category_discovery.similarity_graph import SimilarityGraph


@pytest.fixture
def two_triangles() -> SimilarityGraph:
    """Vertices 0-2 and 3-5 form two disjoint triangles."""
    return SimilarityGraph.from_pairs(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)])


@pytest.fixture
def path_graph() -> SimilarityGraph:
    return SimilarityGraph.from_pairs(3, [(0, 1), (1, 2)])


@pytest.fixture
def star_graph() -> SimilarityGraph:
    """K1,3 with vertex 0 at the centre."""
    return SimilarityGraph.from_pairs(4, [(0, 1), (0, 2), (0, 3)])


@pytest.fixture
def k5() -> SimilarityGraph:
    return SimilarityGraph.from_pairs(5, [(i, j) for i in range(5) for j in range(i + 1, 5)])


@pytest.fixture
def out_root(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    """Point the command line tool's output root at a temporary directory."""
    root = tmp_path / "out"
    monkeypatch.setenv(settings.OUT_ROOT_ENV, str(root))
    return root
