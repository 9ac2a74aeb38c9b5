"""Scoring partitions against ground truth and running multi-trial experiments."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np  # type: ignore
import pandas as pd  # type: ignore
from scipy.stats import entropy, spearmanr  # type: ignore
from sklearn.metrics import mutual_info_score  # type: ignore

from category_discovery import detector_factories, seeding, settings
from category_discovery.exceptions import InvalidParameter
from category_discovery.expectation import expected_overall_similarity
from category_discovery.partition import Partition, modularity
from category_discovery.ranking_model import GroundTruth, RankingConfig, generate_rankings
from category_discovery.similarity_graph import SbmConfig, SimilarityGraph, build_similarity_matrix, generate_sbm, threshold_graph

logger = logging.getLogger(__name__)

Labels = Union[Partition, GroundTruth, Sequence[int], np.ndarray]

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class NmiScore:
    value: float
    mutual_information: float
    entropy_a: float
    entropy_b: float


def _canonical(labels: Labels) -> np.ndarray:
    if isinstance(labels, Partition):
        return labels.community
    if isinstance(labels, GroundTruth):
        labels = labels.category
    return Partition.from_labels(np.asarray(labels).tolist()).community


def nmi(a: Labels, b: Labels) -> NmiScore:
    """Normalized mutual information ``2 I(A, B) / (H(A) + H(B))``, natural logs.

    Two single-community partitions score 1. When only one side is a single
    community the mutual information is 0 and so is the score.
    """
    first, second = _canonical(a), _canonical(b)
    if len(first) != len(second):
        raise InvalidParameter(f"partitions cover {len(first)} and {len(second)} elements")
    if len(first) == 0:
        raise InvalidParameter("cannot compare empty partitions")
    # Fixed argument order makes the score exactly symmetric.
    if second.tolist() < first.tolist():
        first, second = second, first

    h_a = float(entropy(np.bincount(first)))
    h_b = float(entropy(np.bincount(second)))
    if np.array_equal(first, second):
        return NmiScore(1.0, h_a, h_a, h_b)
    mi = float(mutual_info_score(first, second))
    if h_a + h_b == 0:
        return NmiScore(1.0, mi, h_a, h_b)
    value = min(1.0, max(0.0, 2.0 * mi / (h_a + h_b)))
    return NmiScore(value, mi, h_a, h_b)


@dataclass(frozen=True)
class TrialRecord:
    """One detector run on one generated instance."""
    experiment: str
    algorithm: str
    trial: int
    seed: int
    params: Dict[str, float]
    nmi: float
    modularity: float
    communities: int
    iterations: int
    converged: bool
    edge_ratio: float

    def flat(self) -> dict:
        row = asdict(self)
        return {**row.pop("params"), **row}


@dataclass(frozen=True)
class AggregateRow:
    algorithm: str
    params: Dict[str, float]
    trials: int
    mean_nmi: float
    mean_modularity: float
    mean_communities: float
    mean_iterations: float
    converged_fraction: float


def _aggregate_frame(frame: pd.DataFrame, group_by: Sequence[str]) -> pd.DataFrame:
    keys = ["algorithm", *group_by]
    grouped = frame.groupby(keys, sort=True)
    result = grouped.agg(
        trials=("nmi", "size"),
        mean_nmi=("nmi", "mean"),
        mean_modularity=("modularity", "mean"),
        mean_communities=("communities", "mean"),
        mean_iterations=("iterations", "mean"),
        converged_fraction=("converged", "mean"),
    )
    return result.reset_index()


@dataclass(frozen=True)
class ExperimentReport:
    """Per-trial records plus their per-(algorithm, setting) means."""
    experiment: str
    group_by: Tuple[str, ...]
    records: Tuple[TrialRecord, ...]
    aggregates: Tuple[AggregateRow, ...] = field(default=())

    @classmethod
    def build(cls, experiment: str, group_by: Sequence[str], records: Iterable[TrialRecord]) -> ExperimentReport:
        report = cls(experiment, tuple(group_by), tuple(records))
        if not report.records:
            return report
        rows = tuple(
            AggregateRow(
                algorithm=row["algorithm"],
                params={key: row[key] for key in report.group_by},
                trials=int(row["trials"]),
                mean_nmi=float(row["mean_nmi"]),
                mean_modularity=float(row["mean_modularity"]),
                mean_communities=float(row["mean_communities"]),
                mean_iterations=float(row["mean_iterations"]),
                converged_fraction=float(row["converged_fraction"]),
            )
            for row in _aggregate_frame(report.to_frame(), report.group_by).to_dict("records")
        )
        return cls(experiment, report.group_by, report.records, rows)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([record.flat() for record in self.records])

    def aggregate_frame(self) -> pd.DataFrame:
        return pd.DataFrame([
            {"algorithm": row.algorithm, **row.params, **{
                k: v for k, v in asdict(row).items() if k not in ("algorithm", "params")
            }}
            for row in self.aggregates
        ])

    def is_consistent(self) -> bool:
        """True if the stored aggregates equal a fresh recomputation from the records."""
        if not self.records:
            return not self.aggregates
        fresh = _aggregate_frame(self.to_frame(), self.group_by)
        stored = self.aggregate_frame()[fresh.columns]
        if len(fresh) != len(stored):
            return False
        numeric = fresh.columns.drop(["algorithm", *self.group_by])
        return bool(
            (fresh["algorithm"].to_numpy() == stored["algorithm"].to_numpy()).all()
            and np.allclose(fresh[numeric].to_numpy(float), stored[numeric].to_numpy(float), equal_nan=True)
        )

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "group_by": list(self.group_by),
            "aggregates": [asdict(row) for row in self.aggregates],
            "records": [asdict(record) for record in self.records],
        }

    def to_markdown(self) -> str:
        if self.experiment == "sbm":
            return _benchmark_markdown(self)
        frame = self.aggregate_frame()
        if frame.empty:
            return ""
        return _markdown_table(list(frame.columns), frame.itertuples(index=False))


def _format_cell(value: object) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.4f}"
    return str(value)


def _markdown_table(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join(" --- " for _ in header) + "|",
    ]
    lines += ["| " + " | ".join(_format_cell(cell) for cell in row) + " |" for row in rows]
    return "\n".join(lines)


BENCHMARK_METRICS = (
    ("Avg Num of Categories", "mean_communities"),
    ("Avg NMI with Truth", "mean_nmi"),
    ("Avg Modularity", "mean_modularity"),
)


def _benchmark_markdown(report: ExperimentReport) -> str:
    """One table per planted-partition setting, metrics down, algorithms across."""
    sections = []
    settings_seen: List[Tuple[float, ...]] = []
    for row in report.aggregates:
        key = tuple(row.params[k] for k in report.group_by)
        if key not in settings_seen:
            settings_seen.append(key)
    for key in settings_seen:
        rows = [r for r in report.aggregates if tuple(r.params[k] for k in report.group_by) == key]
        title = ", ".join(f"{name} = {_format_cell(value)}" for name, value in zip(report.group_by, key))
        header = ["", *(r.algorithm for r in rows)]
        body = [[label, *(getattr(r, attr) for r in rows)] for label, attr in BENCHMARK_METRICS]
        sections.append(f"### {title}\n\n{_markdown_table(header, body)}")
    return "\n\n".join(sections)


def _run_tasks(function: Callable[[T], R], tasks: Sequence[T], jobs: int) -> List[R]:
    """Map over trial tasks, in order, on `jobs` worker processes."""
    if jobs < 1:
        raise InvalidParameter(f"jobs must be positive, got {jobs}")
    if jobs == 1 or len(tasks) <= 1:
        return [function(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(function, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def score_detection(graph: SimilarityGraph, truth: Labels, partition: Partition) -> Tuple[float, float]:
    """NMI against the truth and modularity; modularity is nan on an edgeless graph."""
    q = modularity(graph, partition) if graph.edges else float("nan")
    return nmi(partition, truth).value, q


@dataclass(frozen=True)
class SweepConfig:
    """Mixing sweep: every (p, voter multiplier) pair gets `trials` fresh datasets.

    Each trial uses ``V = round(multiplier * N)`` voters. The threshold
    defaults to the expected similarity of two random ranks among N items.
    """
    category_size: int
    categories: int
    p_values: Tuple[int, ...]
    voter_multipliers: Tuple[float, ...]
    trials: int = settings.trials
    seed: int = 0
    epsilon: Optional[float] = None
    detector: str = "wlp"

    def __post_init__(self) -> None:
        if not self.p_values or not self.voter_multipliers:
            raise InvalidParameter("a sweep needs at least one p and one voter multiplier")
        if self.trials < 1:
            raise InvalidParameter(f"trials must be positive, got {self.trials}")
        for p in self.p_values:
            RankingConfig(categories=self.categories, category_size=self.category_size, mixing=p, voters=1)
        for multiplier in self.voter_multipliers:
            if multiplier <= 0:
                raise InvalidParameter(f"voter multipliers must be positive, got {multiplier}")
        if self.epsilon is not None and not 0.0 <= self.epsilon <= 1.0:
            raise InvalidParameter(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.detector not in detector_factories.PROTOTYPES:
            raise InvalidParameter(f"unknown detector '{self.detector}'")

    @property
    def items(self) -> int:
        return self.category_size * self.categories

    @property
    def threshold(self) -> float:
        if self.epsilon is not None:
            return self.epsilon
        return expected_overall_similarity(self.items)

    def voters_for(self, multiplier: float) -> int:
        return max(1, round(multiplier * self.items))


def _sweep_trial(task: Tuple[SweepConfig, int, int, int]) -> TrialRecord:
    config, p_index, m_index, trial = task
    p = config.p_values[p_index]
    multiplier = config.voter_multipliers[m_index]
    data_seed = seeding.derive_seed(config.seed, 0, p_index, m_index, trial)
    detector_seed = seeding.derive_seed(config.seed, 1, p_index, m_index, trial)

    ranking_config = RankingConfig(
        categories=config.categories,
        category_size=config.category_size,
        mixing=p,
        voters=config.voters_for(multiplier),
        seed=data_seed,
    )
    rankings, truth = generate_rankings(ranking_config)
    graph = threshold_graph(build_similarity_matrix(rankings), config.threshold)
    result = detector_factories.spawn(config.detector, detector_seed).detect(graph)
    score, q = score_detection(graph, truth, result.partition)
    return TrialRecord(
        experiment="sweep",
        algorithm=config.detector,
        trial=trial,
        seed=data_seed,
        params={"p": p, "multiplier": multiplier, "voters": ranking_config.voters, "epsilon": config.threshold},
        nmi=score,
        modularity=q,
        communities=result.num_communities,
        iterations=result.iterations,
        converged=result.converged,
        edge_ratio=graph.edge_ratio,
    )


def run_mixing_sweep(config: SweepConfig, *, jobs: int = 1) -> ExperimentReport:
    """Generate, threshold, detect and score over the whole (p, multiplier, trial) grid.

    Trial seeds come from counters under the root seed, so the report does
    not depend on `jobs`.
    """
    tasks = [
        (config, p_index, m_index, trial)
        for p_index in range(len(config.p_values))
        for m_index in range(len(config.voter_multipliers))
        for trial in range(config.trials)
    ]
    logger.info("Mixing sweep: %d trials at epsilon %.5f with %s", len(tasks), config.threshold, config.detector)
    records = _run_tasks(_sweep_trial, tasks, jobs)
    return ExperimentReport.build("sweep", ("p", "multiplier"), records)


@dataclass(frozen=True)
class BenchmarkConfig:
    """Planted-partition settings crossed with detectors by prototype name."""
    grid: Tuple[SbmConfig, ...]
    detectors: Tuple[str, ...] = ("cnm", "lp", "wlp")
    trials: int = settings.trials
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.grid or not self.detectors:
            raise InvalidParameter("a benchmark needs at least one graph setting and one detector")
        if self.trials < 1:
            raise InvalidParameter(f"trials must be positive, got {self.trials}")
        unknown = [name for name in self.detectors if name not in detector_factories.PROTOTYPES]
        if unknown:
            raise InvalidParameter(f"unknown detectors {unknown}, expected from {sorted(detector_factories.PROTOTYPES)}")
        # Records are grouped by block parameters only.
        if len({g.directed_draws for g in self.grid}) > 1:
            raise InvalidParameter("all graph settings in one benchmark must use the same draw scheme")

    @classmethod
    def default_grid(cls, *, directed_draws: bool = False, **kwargs) -> BenchmarkConfig:
        """The three 10×5 settings with p_out 0.01 and p_in 0.7, 0.75, 0.8."""
        grid = tuple(
            SbmConfig(
                communities=settings.sbm_communities,
                size=settings.sbm_size,
                p_in=p_in,
                p_out=settings.sbm_p_out,
                directed_draws=directed_draws,
            )
            for p_in in settings.sbm_p_in_grid
        )
        return cls(grid=grid, **kwargs)


def _benchmark_trial(task: Tuple[BenchmarkConfig, int, int, int]) -> TrialRecord:
    config, g_index, d_index, trial = task
    # Every detector sees the same graph for a given (setting, trial).
    graph_seed = seeding.derive_seed(config.seed, 0, g_index, trial)
    detector_seed = seeding.derive_seed(config.seed, 1, g_index, d_index, trial)
    sbm = config.grid[g_index].with_seed(graph_seed)
    name = config.detectors[d_index]

    graph, truth = generate_sbm(sbm)
    result = detector_factories.spawn(name, detector_seed).detect(graph)
    score, q = score_detection(graph, truth, result.partition)
    return TrialRecord(
        experiment="sbm",
        algorithm=name,
        trial=trial,
        seed=graph_seed,
        params={"p_in": sbm.p_in, "p_out": sbm.p_out, "blocks": sbm.communities, "block_size": sbm.size},
        nmi=score,
        modularity=q,
        communities=result.num_communities,
        iterations=result.iterations,
        converged=result.converged,
        edge_ratio=graph.edge_ratio,
    )


def run_sbm_benchmark(config: BenchmarkConfig, *, jobs: int = 1) -> ExperimentReport:
    tasks = [
        (config, g_index, d_index, trial)
        for g_index in range(len(config.grid))
        for d_index in range(len(config.detectors))
        for trial in range(config.trials)
    ]
    logger.info("Planted-partition benchmark: %d settings × %d detectors × %d trials",
                len(config.grid), len(config.detectors), config.trials)
    records = _run_tasks(_benchmark_trial, tasks, jobs)
    return ExperimentReport.build("sbm", ("p_in", "p_out", "blocks", "block_size"), records)


@dataclass(frozen=True)
class TrendResult:
    """Spearman correlation of mean NMI against one swept parameter."""
    parameter: str
    values: Tuple[float, ...]
    mean_nmi: Tuple[float, ...]
    rho: float
    p_value: float

    @property
    def decreasing(self) -> bool:
        return self.rho < 0


def mixing_trend(
    report: ExperimentReport,
    *,
    against: str = "p",
    permutations: int = 2000,
    seed: int = 0,
    alternative: str = "less",
) -> TrendResult:
    """Correlate mean NMI with `against`, pooling the other sweep parameters.

    The p-value is a permutation test on the correlation: the share of
    shuffled mean-NMI orders whose correlation is at least as extreme in the
    `alternative` direction (``less`` for a decreasing trend, ``greater``
    for an increasing one).
    """
    if against not in report.group_by:
        raise InvalidParameter(f"report is not grouped by '{against}'")
    if alternative not in ("less", "greater"):
        raise InvalidParameter(f"alternative must be 'less' or 'greater', got '{alternative}'")
    means = report.to_frame().groupby(against, sort=True)["nmi"].mean()
    values = means.index.to_numpy(float)
    nmis = means.to_numpy(float)
    if len(values) < 2:
        raise InvalidParameter(f"need at least two values of '{against}' to measure a trend")

    if np.ptp(nmis) == 0:
        return TrendResult(against, tuple(values), tuple(nmis), 0.0, 1.0)

    rho = float(spearmanr(values, nmis).statistic)
    rng = seeding.make_rng(seed)
    shuffled = np.array([spearmanr(values, rng.permutation(nmis)).statistic for _ in range(permutations)])
    if alternative == "less":
        extreme = np.count_nonzero(shuffled <= rho + 1e-12)
    else:
        extreme = np.count_nonzero(shuffled >= rho - 1e-12)
    p_value = (extreme + 1) / (permutations + 1)
    return TrendResult(against, tuple(values), tuple(nmis), rho, float(p_value))
