"""One command class per subcommand; `perform` does the work and returns the exit status."""
from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import TYPE_CHECKING

import pandas as pd  # type: ignore

from category_discovery import artifacts, detector_factories, expectation, movielens
from category_discovery.detectors.base_detector import DetectionResult
from category_discovery.evaluation import BenchmarkConfig, SweepConfig, mixing_trend, nmi, run_mixing_sweep, run_sbm_benchmark
from category_discovery.exceptions import InvalidParameter
from category_discovery.partition import modularity
from category_discovery.ranking_model import RankingConfig, displaced_counts, generate_rankings
from category_discovery.seeding import derive_seed
from category_discovery.similarity_graph import SbmConfig, SimilarityGraph, build_similarity_matrix, generate_sbm, threshold_graph

if TYPE_CHECKING:
    from category_discovery.run_engine import RunEngine

# Real-data threshold used for every subset unless overridden.
MOVIELENS_EPSILON = 0.94


class Command:
    def __init__(self, engine: RunEngine, args: argparse.Namespace) -> None:
        self.engine = engine
        self.args = args

    @property
    def log(self):
        return self.engine.message_log

    def perform(self) -> int:
        """Run the subcommand, writing its outputs through the engine.

        This method must be overridden by Command subclasses.
        Returns the exit status.
        """
        raise NotImplementedError()

    def detector(self, seed: int):
        args = self.args
        return detector_factories.build(
            args.algo,
            weight=args.weight,
            mode=args.mode,
            sticky_ties=args.sticky_ties == "on",
            max_iters=args.max_iters,
            seed=seed,
        )

    def detect(self, graph: SimilarityGraph, seed: int) -> DetectionResult:
        detector = self.detector(seed)
        result = detector.detect(graph)
        converged = "converged" if result.converged else "did NOT converge"
        self.log.add_message(
            f"{detector.name} found {result.num_communities} communities in {result.iterations} passes ({converged})"
        )
        return result

    def ranking_config(self, seed: int) -> RankingConfig:
        args = self.args
        return RankingConfig(categories=args.C, category_size=args.S, mixing=args.p, voters=args.voters, seed=seed)

    def epsilon_for(self, n: int) -> float:
        if self.args.epsilon is not None:
            return self.args.epsilon
        return expectation.expected_overall_similarity(n)


def detection_summary(graph: SimilarityGraph, result: DetectionResult) -> dict:
    summary = result.metadata()
    summary["modularity"] = modularity(graph, result.partition) if graph.edges else None
    return summary


class GenerateCommand(Command):
    def perform(self) -> int:
        config = self.ranking_config(self.args.seed)
        rankings, truth = generate_rankings(config, stream=self.args.stream, jobs=self.args.jobs)
        displaced = displaced_counts(rankings, truth)
        self.log.add_message(
            f"Generated {config.voters} rankings of {config.items} items, "
            f"{displaced.mean():.3f} items per voter outside their category's block"
        )
        artifacts.write_rankings(self.engine.output("rankings.csv"), rankings)
        artifacts.write_truth(self.engine.output("truth.csv"), truth)
        artifacts.write_json(self.engine.output("config.json"), {**config.to_dict(), "stream": self.args.stream})
        return 0


class BuildGraphCommand(Command):
    def perform(self) -> int:
        args = self.args
        if args.sbm:
            config = SbmConfig(
                communities=args.communities, size=args.size, p_in=args.p_in, p_out=args.p_out, seed=args.seed,
                directed_draws=args.directed_draws,
            )
            graph, truth = generate_sbm(config)
            artifacts.write_truth(self.engine.output("truth.csv"), truth)
            self.log.add_message(f"Planted partition graph with {len(graph.edges)} edges over {graph.n} vertices")
        else:
            if args.rankings is None:
                raise InvalidParameter("build-graph needs --rankings, or --sbm for a planted partition graph")
            rankings = artifacts.read_rankings(self.engine.add_input(args.rankings))
            sim = build_similarity_matrix(rankings, jobs=args.jobs)
            graph = threshold_graph(sim, self.epsilon_for(sim.n))
            if args.dump_similarity:
                artifacts.write_similarity_csv(self.engine.output("similarity.csv"), sim)
            self.log.add_message(
                f"Threshold {graph.epsilon:.5f} kept {len(graph.edges)} edges, edge ratio {graph.edge_ratio:.3f}"
            )
        graph_path = self.engine.output("graph.edgelist")
        self.engine.output(artifacts.sidecar_path(graph_path).name)
        artifacts.write_graph(graph_path, graph)
        return 0


class DetectCommand(Command):
    def perform(self) -> int:
        graph = artifacts.read_graph(self.engine.add_input(self.args.graph))
        result = self.detect(graph, self.args.seed)
        summary = detection_summary(graph, result)
        if self.args.truth is not None:
            truth = artifacts.read_truth(self.engine.add_input(self.args.truth))
            summary["nmi"] = nmi(result.partition, truth).value
            self.log.add_message(f"NMI with truth: {summary['nmi']:.4f}")
        artifacts.write_partition(self.engine.output("partition.csv"), result.partition)
        artifacts.write_json(self.engine.output("detection.json"), summary)
        print(f"{result.num_communities} communities")
        return 0


class EvalCommand(Command):
    def perform(self) -> int:
        partition = artifacts.read_partition(self.engine.add_input(self.args.partition))
        truth = artifacts.read_truth(self.engine.add_input(self.args.truth))
        score = nmi(partition, truth)
        summary = {
            "nmi": score.value,
            "mutual_information": score.mutual_information,
            "entropy_partition": score.entropy_a,
            "entropy_truth": score.entropy_b,
            "communities": partition.num_communities,
            "categories": truth.num_categories,
        }
        if self.args.graph is not None:
            graph = artifacts.read_graph(self.engine.add_input(self.args.graph))
            summary["modularity"] = modularity(graph, partition) if graph.edges else None
        artifacts.write_json(self.engine.output("evaluation.json"), summary)
        self.log.add_message(f"NMI = {score.value:.4f}")
        print(f"NMI = {score.value:.4f}")
        return 0


class SweepCommand(Command):
    def perform(self) -> int:
        args = self.args
        config = SweepConfig(
            category_size=args.S,
            categories=args.C,
            p_values=tuple(args.p_values),
            voter_multipliers=tuple(args.multipliers),
            trials=args.trials,
            seed=args.seed,
            epsilon=args.epsilon,
            detector=args.detector,
        )
        report = run_mixing_sweep(config, jobs=args.jobs)
        for path in artifacts.write_report(self.engine.out_dir, report, args.format):
            self.engine.output(path.name)
        for row in report.aggregates:
            self.log.add_message(
                f"p={row.params['p']} multiplier={row.params['multiplier']}: mean NMI {row.mean_nmi:.4f}"
            )
        if len(config.p_values) > 1:
            trend = mixing_trend(report, against="p", seed=args.seed)
            self.log.add_message(f"Mean NMI against p: Spearman {trend.rho:.3f}, permutation p-value {trend.p_value:.4f}")
        if len(config.voter_multipliers) > 1:
            trend = mixing_trend(report, against="multiplier", seed=args.seed, alternative="greater")
            self.log.add_message(
                f"Mean NMI against voter multiplier: Spearman {trend.rho:.3f}, permutation p-value {trend.p_value:.4f}"
            )
        return 0


class BenchSbmCommand(Command):
    def perform(self) -> int:
        args = self.args
        grid = tuple(
            SbmConfig(
                communities=args.communities, size=args.size, p_in=p_in, p_out=args.p_out,
                directed_draws=args.directed_draws,
            )
            for p_in in args.p_in
        )
        config = BenchmarkConfig(grid=grid, detectors=tuple(args.detectors), trials=args.trials, seed=args.seed)
        report = run_sbm_benchmark(config, jobs=args.jobs)
        for path in artifacts.write_report(self.engine.out_dir, report, args.format):
            self.engine.output(path.name)
        for row in report.aggregates:
            self.log.add_message(
                f"p_in={row.params['p_in']} {row.algorithm}: categories {row.mean_communities:.2f}, "
                f"NMI {row.mean_nmi:.4f}, modularity {row.mean_modularity:.4f}"
            )
        print(report.to_markdown())
        return 0


class ExpectCommand(Command):
    def perform(self) -> int:
        args = self.args
        p_max = args.S if args.p_max is None else args.p_max
        curve = expectation.emit_expectation_curve(args.S, args.C, p_max)
        artifacts.write_curve(self.engine.output("curve.csv"), curve)
        self.log.add_message(f"Cross-category distance first falls below overall at p={curve.crossing}")
        if args.verify:
            checks = expectation.verify_lemmas()
            frame = pd.DataFrame([{**vars(c), "relative_error": c.relative_error} for c in checks])
            frame.to_csv(self.engine.output("lemma_checks.csv"), index=False)
            failed = [c for c in checks if not c.agrees()]
            for c in failed:
                self.log.add_message(
                    f"{c.lemma} S={c.size} p={c.swaps} D={c.gap}: formula {c.formula!r} oracle {c.oracle!r}",
                    level=logging.WARNING,
                )
            self.log.add_message(f"{len(checks) - len(failed)} of {len(checks)} closed forms match enumeration")
        print(curve.to_frame().to_csv(index=False), end="")
        return 0


class IngestMovieLensCommand(Command):
    def perform(self) -> int:
        args = self.args
        if args.dataset_dir is not None:
            data, items = Path(args.dataset_dir) / "u.data", Path(args.dataset_dir) / "u.item"
        elif args.data is not None and args.items is not None:
            data, items = Path(args.data), Path(args.items)
        else:
            raise InvalidParameter("give --dataset-dir, or both --data and --items")
        table = movielens.parse_ratings(self.engine.add_input(data), self.engine.add_input(items))

        if args.subset_file is not None:
            subset = movielens.SubsetSpec.from_file(self.engine.add_input(args.subset_file))
        else:
            subset = movielens.SubsetSpec.bundled(args.subset)
        sim, item_ids = movielens.build_rating_similarity(table, subset)
        epsilon = MOVIELENS_EPSILON if args.epsilon is None else args.epsilon
        graph = threshold_graph(sim, epsilon)
        self.log.add_message(f"epsilon = {epsilon} -> edge ratio = {graph.edge_ratio:.3f}")

        result = self.detect(graph, args.seed)
        listing = movielens.category_listing(result.partition, item_ids, table.titles)
        for line in listing.splitlines():
            self.log.add_message(line)

        artifacts.write_similarity_csv(self.engine.output("similarity.csv"), sim, item_ids)
        graph_path = self.engine.output("graph.edgelist")
        self.engine.output(artifacts.sidecar_path(graph_path).name)
        artifacts.write_graph(graph_path, graph)
        artifacts.write_partition(self.engine.output("partition.csv"), result.partition, item_ids)
        artifacts.write_json(self.engine.output("detection.json"), detection_summary(graph, result))
        self.engine.output("categories.txt").write_text(listing + "\n", encoding="utf-8")
        print(listing)
        return 0


class PipelineCommand(Command):
    """generate, build-graph, detect and eval in one process."""

    def perform(self) -> int:
        args = self.args
        config = self.ranking_config(derive_seed(args.seed, 0))
        rankings, truth = generate_rankings(config, stream=args.stream, jobs=args.jobs)
        sim = build_similarity_matrix(rankings, jobs=args.jobs)
        graph = threshold_graph(sim, self.epsilon_for(config.items))
        self.log.add_message(
            f"{config.voters} voters, threshold {graph.epsilon:.5f}, edge ratio {graph.edge_ratio:.3f}"
        )
        result = self.detect(graph, derive_seed(args.seed, 1))
        score = nmi(result.partition, truth)

        artifacts.write_rankings(self.engine.output("rankings.csv"), rankings)
        artifacts.write_truth(self.engine.output("truth.csv"), truth)
        graph_path = self.engine.output("graph.edgelist")
        self.engine.output(artifacts.sidecar_path(graph_path).name)
        artifacts.write_graph(graph_path, graph)
        artifacts.write_partition(self.engine.output("partition.csv"), result.partition)
        artifacts.write_json(
            self.engine.output("evaluation.json"),
            {**detection_summary(graph, result), "nmi": score.value, "config": config.to_dict()},
        )
        self.log.add_message(f"NMI = {score.value:.4f}")
        print(f"NMI = {score.value:.4f}")
        return 0


COMMANDS = {
    "generate": GenerateCommand,
    "build-graph": BuildGraphCommand,
    "detect": DetectCommand,
    "eval": EvalCommand,
    "sweep": SweepCommand,
    "bench-sbm": BenchSbmCommand,
    "expect": ExpectCommand,
    "ingest-movielens": IngestMovieLensCommand,
    "pipeline": PipelineCommand,
}
