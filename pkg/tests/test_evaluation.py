import logging
import math
from dataclasses import replace
from typing import Dict, List

import numpy as np
import pytest

from category_discovery import detector_factories
from category_discovery.evaluation import (
    BenchmarkConfig,
    ExperimentReport,
    SweepConfig,
    TrialRecord,
    mixing_trend,
    nmi,
    run_mixing_sweep,
    run_sbm_benchmark,
)
from category_discovery.exceptions import InvalidParameter
from category_discovery.expectation import emit_expectation_curve, expected_overall_similarity
from category_discovery.partition import Partition, modularity
from category_discovery.similarity_graph import SbmConfig, generate_sbm

logger = logging.getLogger(__name__)


def test_identical_partitions_score_one():
    assert nmi([0, 0, 1, 1, 2], [5, 5, 3, 3, 9]).value == 1.0


def test_singletons_against_one_block_score_zero():
    assert nmi([0, 1, 2, 3], [0, 0, 0, 0]).value == 0.0


def test_two_single_blocks_score_one():
    assert nmi([0, 0, 0], [4, 4, 4]).value == 1.0


def test_against_hand_computed_entropies():
    a, b = [0, 0, 1, 1], [0, 0, 0, 1]
    h_a = math.log(2)
    h_b = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25))
    mi = 0.5 * math.log(0.5 / (0.5 * 0.75)) + 0.25 * math.log(0.25 / (0.5 * 0.75)) + 0.25 * math.log(0.25 / (0.5 * 0.25))
    score = nmi(a, b)
    assert score.value == pytest.approx(2 * mi / (h_a + h_b), abs=1e-12)
    assert score.mutual_information == pytest.approx(mi, abs=1e-12)
    assert sorted([score.entropy_a, score.entropy_b]) == pytest.approx(sorted([h_a, h_b]))


def test_symmetric_and_relabel_invariant():
    rng = np.random.default_rng(31)
    for _ in range(1000):
        n = int(rng.integers(2, 30))
        a = rng.integers(0, int(rng.integers(1, 6)), n)
        b = rng.integers(0, int(rng.integers(1, 6)), n)
        forward = nmi(a, b).value
        assert forward == nmi(b, a).value
        relabel = rng.permutation(10)
        assert forward == nmi(relabel[a], b).value
        assert forward == nmi(a, relabel[b]).value
        assert 0.0 <= forward <= 1.0


def test_accepts_partitions_and_rejects_mismatched_lengths():
    assert nmi(Partition.from_labels([1, 1, 2]), [0, 0, 1]).value == 1.0
    with pytest.raises(InvalidParameter):
        nmi([0, 1], [0, 1, 2])


def record(p: float, value: float, trial: int = 0, algorithm: str = "wlp") -> TrialRecord:
    return TrialRecord(
        experiment="sweep", algorithm=algorithm, trial=trial, seed=trial, params={"p": p, "multiplier": 1.0},
        nmi=value, modularity=0.3, communities=2, iterations=3, converged=True, edge_ratio=0.4,
    )


def test_report_aggregates_are_means_of_records():
    records = [record(0, 1.0, 0), record(0, 0.8, 1), record(2, 0.5, 0), record(2, 0.7, 1)]
    report = ExperimentReport.build("sweep", ("p", "multiplier"), records)
    assert report.is_consistent()
    means = {row.params["p"]: row.mean_nmi for row in report.aggregates}
    assert means == {0: pytest.approx(0.9), 2: pytest.approx(0.6)}
    assert all(row.trials == 2 for row in report.aggregates)


def test_tampered_aggregates_are_detected():
    report = ExperimentReport.build("sweep", ("p", "multiplier"), [record(0, 1.0), record(1, 0.4)])
    rows = list(report.aggregates)
    rows[0] = replace(rows[0], mean_nmi=0.0)
    tampered = ExperimentReport(report.experiment, report.group_by, report.records, tuple(rows))
    assert not tampered.is_consistent()


def test_decreasing_trend_is_significant():
    records = [record(p, 1.0 - 0.1 * p, trial) for p in range(6) for trial in range(3)]
    trend = mixing_trend(ExperimentReport.build("sweep", ("p", "multiplier"), records))
    assert trend.rho == pytest.approx(-1.0)
    assert trend.decreasing
    assert trend.p_value < 0.05


def test_flat_trend():
    records = [record(p, 1.0) for p in range(4)]
    trend = mixing_trend(ExperimentReport.build("sweep", ("p", "multiplier"), records))
    assert trend.rho == 0.0
    assert trend.p_value == 1.0


def test_trend_needs_a_grouped_parameter():
    report = ExperimentReport.build("sweep", ("p", "multiplier"), [record(0, 1.0), record(1, 0.5)])
    with pytest.raises(InvalidParameter):
        mixing_trend(report, against="voters")


def test_sweep_config_defaults_threshold():
    config = SweepConfig(category_size=10, categories=2, p_values=(0,), voter_multipliers=(1.0,))
    assert config.threshold == expected_overall_similarity(20)
    assert config.voters_for(2.5) == 50


@pytest.mark.parametrize("kwargs", [
    dict(p_values=(11,), voter_multipliers=(1.0,)),
    dict(p_values=(0,), voter_multipliers=(0.0,)),
    dict(p_values=(), voter_multipliers=(1.0,)),
    dict(p_values=(0,), voter_multipliers=(1.0,), detector="kmeans"),
    dict(p_values=(0,), voter_multipliers=(1.0,), epsilon=2.0),
    dict(p_values=(0,), voter_multipliers=(1.0,), trials=0),
])
def test_sweep_config_validation(kwargs):
    with pytest.raises(InvalidParameter):
        SweepConfig(category_size=10, categories=2, **kwargs)


def test_sweep_recovers_unmixed_categories():
    config = SweepConfig(category_size=10, categories=2, p_values=(0, 4), voter_multipliers=(10.0,), trials=5, seed=3)
    report = run_mixing_sweep(config)
    assert report.is_consistent()
    assert len(report.records) == 10
    means = {row.params["p"]: row.mean_nmi for row in report.aggregates}
    assert means[0] == pytest.approx(1.0)
    assert means[0] >= means[4]


def test_sweep_does_not_depend_on_jobs():
    config = SweepConfig(category_size=5, categories=2, p_values=(0, 2), voter_multipliers=(2.0,), trials=3, seed=1)
    serial = run_mixing_sweep(config, jobs=1).to_frame()
    parallel = run_mixing_sweep(config, jobs=2).to_frame()
    assert serial.equals(parallel)


def test_disconnected_cliques_recovered_by_every_detector():
    config = BenchmarkConfig(grid=(SbmConfig(communities=10, size=5, p_in=1.0, p_out=0.0),), trials=5, seed=2)
    report = run_sbm_benchmark(config)
    assert {r.algorithm for r in report.records} == {"cnm", "lp", "wlp"}
    for r in report.records:
        assert r.nmi == 1.0
        assert r.communities == 10
    markdown = report.to_markdown()
    assert "Avg NMI with Truth" in markdown
    assert "| Avg Num of Categories | 10.0000 | 10.0000 | 10.0000 |" in markdown


def test_benchmark_rejects_unknown_detectors():
    with pytest.raises(InvalidParameter):
        BenchmarkConfig(grid=(SbmConfig(communities=2, size=2, p_in=1.0, p_out=0.0),), detectors=("magic",))


def test_default_benchmark_grid():
    config = BenchmarkConfig.default_grid(trials=1)
    assert [g.p_in for g in config.grid] == [0.7, 0.75, 0.8]
    assert all(g.n == 50 and g.p_out == 0.01 for g in config.grid)


def test_benchmark_rejects_mixed_draw_schemes():
    grid = (
        SbmConfig(communities=2, size=3, p_in=1.0, p_out=0.0),
        SbmConfig(communities=2, size=3, p_in=1.0, p_out=0.0, directed_draws=True),
    )
    with pytest.raises(InvalidParameter):
        BenchmarkConfig(grid=grid)


# Category count, NMI and modularity of weighted propagation on the three
# 10×5 settings, keyed by p_in.
REFERENCE_TABLE = {
    0.7: (9.99, 0.9940, 0.7020),
    0.75: (10.02, 0.9970, 0.7024),
    0.8: (10.01, 0.9976, 0.7089),
}

WEIGHTED_VARIANTS = ("wlp", "wlp-linear", "wlp-sync", "wlp-literal")


def truth_modularity(config: BenchmarkConfig, trials: int = 100) -> Dict[float, float]:
    means = {}
    for sbm in config.grid:
        scores = []
        for seed in range(trials):
            graph, truth = generate_sbm(sbm.with_seed(seed))
            scores.append(modularity(graph, Partition.from_labels(truth.category.tolist())))
        means[sbm.p_in] = float(np.mean(scores))
    return means


def test_reference_modularity_comes_from_directed_draws():
    directed = truth_modularity(BenchmarkConfig.default_grid(directed_draws=True))
    single = truth_modularity(BenchmarkConfig.default_grid())
    for p_in, (_, _, q) in REFERENCE_TABLE.items():
        assert directed[p_in] == pytest.approx(q, abs=0.02)
        assert single[p_in] > q + 0.03


def reference_misses(report: ExperimentReport, variant: str) -> List[str]:
    rows = {(row.algorithm, row.params["p_in"]): row for row in report.aggregates}
    misses = []
    for p_in, (communities, score, q) in REFERENCE_TABLE.items():
        row = rows[(variant, p_in)]
        if abs(row.mean_communities - communities) > 0.3:
            misses.append(f"p_in={p_in} categories {row.mean_communities:.2f}")
        if abs(row.mean_nmi - score) > 0.02:
            misses.append(f"p_in={p_in} NMI {row.mean_nmi:.4f}")
        if abs(row.mean_modularity - q) > 0.02:
            misses.append(f"p_in={p_in} modularity {row.mean_modularity:.4f}")
        plain, greedy = rows[("lp", p_in)].mean_nmi, rows[("cnm", p_in)].mean_nmi
        if not row.mean_nmi >= plain >= greedy - 0.01:
            misses.append(f"p_in={p_in} NMI order {row.mean_nmi:.4f} / {plain:.4f} / {greedy:.4f}")
    return misses


@pytest.fixture(scope="module")
def planted_reports() -> Dict[bool, ExperimentReport]:
    reports = {}
    for directed_draws in (False, True):
        config = BenchmarkConfig.default_grid(
            directed_draws=directed_draws, detectors=tuple(detector_factories.PROTOTYPES), trials=100, seed=11,
        )
        reports[directed_draws] = run_sbm_benchmark(config, jobs=2)
        logger.info("directed_draws=%s\n%s", directed_draws, reports[directed_draws].to_markdown())
    return reports


@pytest.mark.slow
@pytest.mark.parametrize("directed_draws", [False, True])
def test_every_detector_on_planted_partitions(planted_reports, directed_draws):
    report = planted_reports[directed_draws]
    assert report.is_consistent()
    assert len(report.aggregates) == 3 * len(detector_factories.PROTOTYPES)
    assert all(row.trials == 100 for row in report.aggregates)
    for row in report.aggregates:
        if row.algorithm == "wlp":
            assert row.mean_nmi >= 0.9
            assert abs(row.mean_communities - 10) <= 1.0
    for variant in WEIGHTED_VARIANTS:
        logger.info("directed_draws=%s %s: %s", directed_draws, variant, reference_misses(report, variant) or "all bounds met")


@pytest.mark.slow
@pytest.mark.xfail(strict=False, reason="weighted and plain propagation differ by less than trial noise, see DESIGN.md")
def test_some_weighted_variant_meets_the_reference_table(planted_reports):
    misses = {variant: reference_misses(planted_reports[True], variant) for variant in WEIGHTED_VARIANTS}
    assert any(not m for m in misses.values()), misses


@pytest.mark.slow
def test_mixing_and_voters_trends():
    config = SweepConfig(
        category_size=20, categories=2, p_values=tuple(range(11)), voter_multipliers=(1.0, 5.0, 10.0),
        trials=50, seed=5,
    )
    report = run_mixing_sweep(config, jobs=2)
    trend = mixing_trend(report, against="p")
    assert trend.decreasing
    assert trend.p_value < 0.05

    voters = mixing_trend(report, against="multiplier", alternative="greater")
    assert voters.rho > 0

    # Past the crossing the categories are no longer separable and every
    # multiplier sits near the NMI floor.
    crossing = emit_expectation_curve(20, 2, 10).crossing
    stats = report.to_frame().groupby(["p", "multiplier"])["nmi"].agg(["mean", "sem"])
    for p in config.p_values:
        if p >= crossing:
            continue
        by_voters = [stats.loc[(p, m)] for m in config.voter_multipliers]
        for fewer, more in zip(by_voters, by_voters[1:]):
            assert more["mean"] >= fewer["mean"] - 2 * math.hypot(fewer["sem"], more["sem"])
