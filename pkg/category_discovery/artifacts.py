"""Reading and writing the files a run leaves behind."""
from __future__ import annotations

import contextlib
import json
import logging
from pathlib import Path
from typing import Iterator, List, Optional, Sequence

import networkx as nx  # type: ignore
import numpy as np  # type: ignore
import pandas as pd  # type: ignore

from category_discovery.evaluation import ExperimentReport
from category_discovery.exceptions import DatasetIOError, InvalidParameter, MalformedInput
from category_discovery.expectation import ExpectationCurve
from category_discovery.partition import Partition
from category_discovery.ranking_model import GroundTruth, RankingMatrix
from category_discovery.similarity_graph import SimilarityGraph, SimilarityMatrix

logger = logging.getLogger(__name__)

REPORT_FORMATS = ("csv", "json", "md")


@contextlib.contextmanager
def _io(path: Path) -> Iterator[None]:
    """Turn OS failures on `path` into DatasetIOError."""
    try:
        yield
    except FileNotFoundError as e:
        raise DatasetIOError(str(path), "no such file or directory") from e
    except OSError as e:
        raise DatasetIOError(str(path), e.strerror or str(e)) from e


def _read_csv(path: Path, required: Sequence[str]) -> pd.DataFrame:
    with _io(path):
        try:
            frame = pd.read_csv(path, dtype=str, keep_default_na=False)
        except pd.errors.EmptyDataError:
            raise MalformedInput("file is empty", path=str(path), line=1) from None
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise MalformedInput(f"header lacks column(s) {missing}", path=str(path), line=1)
    return frame


def _integers(frame: pd.DataFrame, column: str, path: Path) -> np.ndarray:
    values = pd.to_numeric(frame[column], errors="coerce")
    bad = values.isna() | (values != values.round())
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        # Line 1 is the header.
        raise MalformedInput(
            f"expected an integer, got {frame[column].iloc[row]!r}", path=str(path), line=row + 2, field=column,
        )
    return values.to_numpy(np.int64)


def write_json(path: Path, data: dict) -> None:
    with _io(path):
        Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path: Path) -> dict:
    with _io(path):
        text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedInput(e.msg, path=str(path), line=e.lineno) from e


def write_rankings(path: Path, rankings: RankingMatrix) -> None:
    """One row per voter under the header ``item_0 .. item_{N-1}``."""
    frame = pd.DataFrame(rankings.ranks, columns=[f"item_{i}" for i in range(rankings.items)])
    with _io(path):
        frame.to_csv(path, index=False)


def read_rankings(path: Path) -> RankingMatrix:
    path = Path(path)
    with _io(path):
        try:
            header = pd.read_csv(path, nrows=0).columns.tolist()
        except pd.errors.EmptyDataError:
            raise MalformedInput("file is empty", path=str(path), line=1) from None
    expected = [f"item_{i}" for i in range(len(header))]
    if header != expected:
        raise MalformedInput("header must be item_0 .. item_{N-1}", path=str(path), line=1)
    frame = _read_csv(path, expected)
    ranks = np.column_stack([_integers(frame, column, path) for column in expected]) if len(frame) else \
        np.empty((0, len(expected)), dtype=np.int64)
    n = len(expected)
    for v, row in enumerate(ranks):
        if not np.array_equal(np.sort(row), np.arange(n)):
            raise MalformedInput(f"ranks are not a permutation of 0..{n - 1}", path=str(path), line=v + 2)
    if not len(ranks):
        raise MalformedInput("no voters", path=str(path), line=2)
    return RankingMatrix(ranks)


def write_truth(path: Path, truth: GroundTruth) -> None:
    frame = pd.DataFrame({"item_id": np.arange(truth.n), "category": truth.category})
    with _io(path):
        frame.to_csv(path, index=False)


def read_truth(path: Path) -> GroundTruth:
    path = Path(path)
    frame = _read_csv(path, ["item_id", "category"])
    items = _integers(frame, "item_id", path)
    if not np.array_equal(np.sort(items), np.arange(len(items))):
        raise MalformedInput(f"item ids must cover 0..{len(items) - 1} once each", path=str(path), field="item_id")
    category = np.empty(len(items), dtype=np.int64)
    category[items] = _integers(frame, "category", path)
    return GroundTruth(category)


def sidecar_path(graph_path: Path) -> Path:
    return Path(graph_path).with_suffix(".json")


def write_graph(path: Path, graph: SimilarityGraph) -> Path:
    """Write the edge list (``i j`` per line) and its JSON sidecar; return the sidecar path."""
    path = Path(path)
    with _io(path):
        nx.write_edgelist(graph.to_networkx(), path, data=False)
    sidecar = sidecar_path(path)
    write_json(sidecar, graph.sidecar())
    return sidecar


def read_graph(path: Path) -> SimilarityGraph:
    """Read an edge list; the vertex count comes from the sidecar when there is one."""
    path = Path(path)
    with _io(path):
        try:
            loaded = nx.read_edgelist(path, comments="#", nodetype=int, data=False)
        except (TypeError, ValueError) as e:
            raise MalformedInput(str(e), path=str(path)) from e

    sidecar = sidecar_path(path)
    meta = read_json(sidecar) if sidecar.exists() else {}
    top = max(loaded.nodes, default=-1)
    n = int(meta.get("n", top + 1))
    if top >= n:
        raise MalformedInput(f"vertex {top} is outside the {n} items declared in {sidecar}", path=str(path))
    if min(loaded.nodes, default=0) < 0:
        raise MalformedInput("vertex ids must be non-negative", path=str(path))
    epsilon = meta.get("epsilon")
    return SimilarityGraph.from_pairs(
        n,
        loaded.edges(),
        epsilon=float("nan") if epsilon is None else float(epsilon),
        source=meta.get("source", "thresholded"),
    )


def write_similarity_csv(path: Path, sim: SimilarityMatrix, labels: Optional[Sequence[int]] = None) -> None:
    labels = list(labels) if labels is not None else list(range(sim.n))
    frame = pd.DataFrame(sim.mean_sim, index=labels, columns=labels)
    with _io(path):
        frame.to_csv(path, index_label="item_id")


def write_partition(path: Path, partition: Partition, items: Optional[Sequence[int]] = None) -> None:
    """``item_id,community``; `items` maps vertex index to the item id written."""
    ids = np.arange(partition.n) if items is None else np.asarray(items)
    if len(ids) != partition.n:
        raise InvalidParameter(f"{len(ids)} item ids for {partition.n} vertices")
    frame = pd.DataFrame({"item_id": ids, "community": partition.community})
    with _io(path):
        frame.to_csv(path, index=False)


def read_partition(path: Path) -> Partition:
    path = Path(path)
    frame = _read_csv(path, ["item_id", "community"])
    items = _integers(frame, "item_id", path)
    if not np.array_equal(np.sort(items), np.arange(len(items))):
        raise MalformedInput(f"item ids must cover 0..{len(items) - 1} once each", path=str(path), field="item_id")
    labels = np.empty(len(items), dtype=np.int64)
    labels[items] = _integers(frame, "community", path)
    return Partition.from_labels(labels.tolist())


def write_curve(path: Path, curve: ExpectationCurve) -> None:
    with _io(path):
        curve.to_frame().to_csv(path, index=False)


def write_report(directory: Path, report: ExperimentReport, fmt: str = "csv") -> List[Path]:
    """Per-trial and aggregate CSVs, plus ``report.json`` or ``report.md`` when asked."""
    if fmt not in REPORT_FORMATS:
        raise InvalidParameter(f"unknown report format '{fmt}', expected one of {REPORT_FORMATS}")
    directory = Path(directory)
    written = [directory / "trials.csv", directory / "aggregate.csv"]
    with _io(directory):
        report.to_frame().to_csv(written[0], index=False)
        report.aggregate_frame().to_csv(written[1], index=False)
    if fmt == "json":
        written.append(directory / "report.json")
        write_json(written[-1], report.to_dict())
    elif fmt == "md":
        written.append(directory / "report.md")
        with _io(written[-1]):
            written[-1].write_text(report.to_markdown() + "\n", encoding="utf-8")
    logger.debug("Wrote report files %s", [str(p) for p in written])
    return written
