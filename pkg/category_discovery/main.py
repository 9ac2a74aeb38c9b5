from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from category_discovery import detector_factories, movielens, settings
from category_discovery.commands import COMMANDS
from category_discovery.exceptions import DatasetIOError, ExitWithStatus, InvalidParameter, MalformedInput
from category_discovery.manifest import RunManifest
from category_discovery.run_engine import RunEngine

logger = logging.getLogger(__name__)

WEIGHTS = ("linear", "exp", "exponential", "unit")


def _seed_options() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--seed", type=int, default=0, help="root seed for every random draw (default: 0)")
    return parser


def _ranking_options() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--C", type=int, default=2, help="number of categories")
    parser.add_argument("--S", type=int, default=20, help="items per category")
    parser.add_argument("--p", type=int, default=0, help="items swapped per ordered category pair")
    parser.add_argument("--voters", type=int, default=400, help="number of voters")
    parser.add_argument("--stream", choices=("single", "per-voter"), default="single",
                        help="one random stream for all voters, or one per voter")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes")
    return parser


def _detector_options() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--algo", choices=("wlp", "lp", "cnm"), default="wlp")
    parser.add_argument("--weight", choices=WEIGHTS, default="exp", help="distance weighting for wlp")
    parser.add_argument("--mode", choices=("sync", "async"), default="async")
    parser.add_argument("--max-iters", type=int, default=settings.max_iterations)
    parser.add_argument("--sticky-ties", choices=("on", "off"), default="on",
                        help="keep the current label when it ties for the lead")
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="category-discovery",
        description="Discover latent item categories from rankings with weighted label propagation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.VERSION}")
    parser.add_argument("--out-root", default=None,
                        help=f"output root (default: ${settings.OUT_ROOT_ENV} or '{settings.DEFAULT_OUT_ROOT}')")
    parser.add_argument("--name", default=None, help="run directory name (default: a timestamp)")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("--quiet", action="store_true")

    seed, ranking, detector = _seed_options(), _ranking_options(), _detector_options()
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sub.add_parser("generate", parents=[ranking, seed], help="generate synthetic rankings")

    build = sub.add_parser("build-graph", parents=[seed], help="threshold rankings into an item graph")
    build.add_argument("--rankings", type=Path)
    build.add_argument("--epsilon", type=float, default=None,
                       help="similarity threshold (default: expected similarity of two random ranks)")
    build.add_argument("--dump-similarity", action="store_true", help="also write similarity.csv")
    build.add_argument("--jobs", type=int, default=1)
    build.add_argument("--sbm", action="store_true", help="draw a planted partition graph instead")
    build.add_argument("--communities", type=int, default=settings.sbm_communities)
    build.add_argument("--size", type=int, default=settings.sbm_size)
    build.add_argument("--p-in", type=float, default=settings.sbm_p_in_grid[0])
    build.add_argument("--p-out", type=float, default=settings.sbm_p_out)
    build.add_argument("--directed-draws", action="store_true",
                       help="draw each ordered pair and keep an edge if either direction hits")

    detect = sub.add_parser("detect", parents=[detector, seed], help="find communities in a graph")
    detect.add_argument("--graph", type=Path, required=True, help="edge list file")
    detect.add_argument("--truth", type=Path, default=None, help="ground truth CSV to score against")

    evaluate = sub.add_parser("eval", help="score a partition against ground truth")
    evaluate.add_argument("--partition", type=Path, required=True)
    evaluate.add_argument("--truth", type=Path, required=True)
    evaluate.add_argument("--graph", type=Path, default=None, help="edge list for modularity")

    sweep = sub.add_parser("sweep", parents=[seed], help="NMI against mixing and voter count")
    sweep.add_argument("--S", type=int, default=20)
    sweep.add_argument("--C", type=int, default=2)
    sweep.add_argument("--p-values", type=int, nargs="+", default=list(range(0, 11, 2)))
    sweep.add_argument("--multipliers", type=float, nargs="+", default=[1.0, 5.0, 10.0])
    sweep.add_argument("--trials", type=int, default=settings.trials)
    sweep.add_argument("--epsilon", type=float, default=None)
    sweep.add_argument("--detector", choices=sorted(detector_factories.PROTOTYPES), default="wlp")
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--format", choices=("csv", "json", "md"), default="csv")

    bench = sub.add_parser("bench-sbm", parents=[seed], help="compare detectors on planted partitions")
    bench.add_argument("--p-in", type=float, nargs="+", default=list(settings.sbm_p_in_grid))
    bench.add_argument("--p-out", type=float, default=settings.sbm_p_out)
    bench.add_argument("--communities", type=int, default=settings.sbm_communities)
    bench.add_argument("--size", type=int, default=settings.sbm_size)
    bench.add_argument("--directed-draws", action="store_true",
                       help="draw each ordered pair and keep an edge if either direction hits")
    bench.add_argument("--detectors", nargs="+", choices=sorted(detector_factories.PROTOTYPES),
                       default=["cnm", "lp", "wlp"])
    bench.add_argument("--trials", type=int, default=settings.trials)
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--format", choices=("csv", "json", "md"), default="md")

    expect = sub.add_parser("expect", help="expected distance curve for two categories")
    expect.add_argument("--S", type=int, default=20)
    expect.add_argument("--C", type=int, default=2)
    expect.add_argument("--p-max", type=int, default=None, help="last p in the curve (default: S)")
    expect.add_argument("--verify", action="store_true", help="also check the closed forms by enumeration")

    ingest = sub.add_parser("ingest-movielens", parents=[detector, seed], help="categorize MovieLens titles")
    ingest.add_argument("--dataset-dir", type=Path, default=None, help="unpacked ml-100k directory")
    ingest.add_argument("--data", type=Path, default=None, help="ratings file (u.data)")
    ingest.add_argument("--items", type=Path, default=None, help="item file (u.item)")
    subset = ingest.add_mutually_exclusive_group()
    subset.add_argument("--subset-file", type=Path, default=None)
    subset.add_argument("--subset", choices=sorted(p.stem for p in movielens.SUBSET_DIR.glob("*.txt")),
                        default="starwars_startrek")
    ingest.add_argument("--epsilon", type=float, default=None)

    pipeline = sub.add_parser("pipeline", parents=[ranking, detector, seed],
                              help="generate, build-graph, detect and eval in one go")
    pipeline.add_argument("--epsilon", type=float, default=None)

    replay = sub.add_parser("replay", help="re-run a recorded manifest and compare outputs")
    replay.add_argument("--manifest", type=Path, required=True, help="manifest.json or its run directory")
    replay.add_argument("--out", type=Path, default=None, help="directory for the replayed outputs")
    return parser


def configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)


def _parameters(args: argparse.Namespace) -> dict:
    def plain(value):
        if isinstance(value, Path):
            return str(value)
        if isinstance(value, list):
            return [plain(v) for v in value]
        return value
    return {key: plain(value) for key, value in sorted(vars(args).items())}


def run(args: argparse.Namespace, argv: Sequence[str], *, out_dir: Optional[Path] = None) -> Tuple[int, RunManifest]:
    """Perform one subcommand inside its own run directory."""
    engine = RunEngine.create(
        subcommand=args.command,
        out_root=settings.resolve_out_root(args.out_root),
        name=args.name,
        out_dir=out_dir,
        argv=list(argv),
        parameters=_parameters(args),
        seed=getattr(args, "seed", None),
    )
    try:
        status = COMMANDS[args.command](engine, args).perform()
    except Exception as e:
        engine.message_log.add_message(f"{type(e).__name__}: {e}", logging.ERROR)
        engine.finish()
        raise
    return status, engine.finish()


def replay(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    recorded = RunManifest.load(args.manifest)
    replay_args = parser.parse_args(recorded.argv)
    out_dir = args.out
    if out_dir is None:
        recorded_dir = args.manifest if args.manifest.is_dir() else args.manifest.resolve().parent
        out_dir = settings.resolve_out_root(args.out_root) / "replay" / (args.name or recorded_dir.name)
    status, fresh = run(replay_args, recorded.argv, out_dir=Path(out_dir))
    differences = recorded.differences(fresh)
    if differences:
        for name in differences:
            logger.error("Replayed output %s differs from the recorded run", name)
        return 1
    print(f"Replay reproduced {len(fresh.outputs)} output files in {out_dir}")
    return status


def dispatch(argv: Optional[List[str]] = None) -> int:
    """Parse `argv`, run the subcommand and return the exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        configure_logging(args)
        if args.command == "replay":
            return replay(parser, args)
        status, _ = run(args, argv)
        return status
    except SystemExit as e:
        # argparse usage errors exit 2, --help and --version exit 0.
        return e.code if isinstance(e.code, int) else 0 if e.code is None else 1
    except DatasetIOError as e:
        print(f"error: cannot access {e.path}: {e.reason}", file=sys.stderr)
        return 1
    except MalformedInput as e:
        print(f"error: {e.full_text}", file=sys.stderr)
        return 1
    except InvalidParameter as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    raise ExitWithStatus(dispatch())


if __name__ == "__main__":
    main()
