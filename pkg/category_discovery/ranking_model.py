"""Synthetic ordinal rankings with planted categories."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np  # type: ignore

from category_discovery import seeding
from category_discovery.exceptions import InvalidParameter

logger = logging.getLogger(__name__)

STREAMS = ("single", "per-voter")


@dataclass(frozen=True)
class RankingConfig:
    """Parameters of the ranking generator.

    `mixing` is the exact number of items swapped per ordered category pair.
    """
    categories: int
    category_size: int
    mixing: int
    voters: int
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("categories", "category_size", "voters"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidParameter(f"{name} must be a positive integer, got {value}")
        if int(self.mixing) != self.mixing or self.mixing < 0:
            raise InvalidParameter(f"mixing must be a non-negative integer, got {self.mixing}")
        if self.mixing > self.category_size:
            raise InvalidParameter(
                f"cannot swap {self.mixing} items out of categories of size {self.category_size}"
            )

    @property
    def items(self) -> int:
        return self.categories * self.category_size

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """The planted category of every item, shared by all voters."""
    category: np.ndarray

    def __post_init__(self) -> None:
        self.category.setflags(write=False)

    @classmethod
    def planted(cls, categories: int, category_size: int) -> GroundTruth:
        return cls(np.repeat(np.arange(categories), category_size))

    @property
    def n(self) -> int:
        return len(self.category)

    @property
    def num_categories(self) -> int:
        return len(np.unique(self.category))

    @property
    def category_size(self) -> int:
        """Size of the categories; only meaningful for balanced truths."""
        sizes = np.bincount(self.category)
        return int(sizes.max()) if len(sizes) else 0


@dataclass(frozen=True, eq=False)
class RankingMatrix:
    """V×N ranks, one permutation of 0..N-1 per voter.

    `category_blocks[v, c]` is the rank block voter `v` gave category `c`
    before mixing. It is unknown for rankings read back from disk.
    """
    ranks: np.ndarray
    category_blocks: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.ranks.ndim != 2:
            raise InvalidParameter("ranks must be a V×N matrix")
        self.ranks.setflags(write=False)
        if self.category_blocks is not None:
            self.category_blocks.setflags(write=False)

    @property
    def voters(self) -> int:
        return self.ranks.shape[0]

    @property
    def items(self) -> int:
        return self.ranks.shape[1]

    def is_valid(self) -> bool:
        """True if every row is a permutation of 0..N-1."""
        expected = np.arange(self.items)
        return bool(np.all(np.sort(self.ranks, axis=1) == expected))


def _rank_one_voter(
    rng: np.random.Generator, categories: int, category_size: int, mixing: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """Produce one voter's ranks and category-to-block assignment."""
    n = categories * category_size
    blocks = rng.permutation(categories)

    # slot_items[r] is the item currently holding rank r.
    slot_items = np.empty(n, dtype=np.int64)
    for c in range(categories):
        start = blocks[c] * category_size
        slot_items[start:start + category_size] = c * category_size + rng.permutation(category_size)

    swap_order = rng.permutation(categories)
    if mixing > 0:
        for c1 in swap_order:
            for c2 in swap_order:
                if c2 == c1:
                    continue
                # Pick from whatever sits in each block now, swapped-in items included.
                slots_1 = blocks[c1] * category_size + rng.choice(category_size, size=mixing, replace=False)
                slots_2 = blocks[c2] * category_size + rng.choice(category_size, size=mixing, replace=False)
                moving = slot_items[slots_1].copy()
                slot_items[slots_1] = slot_items[slots_2]
                slot_items[slots_2] = moving

    ranks = np.empty(n, dtype=np.int64)
    ranks[slot_items] = np.arange(n)
    return ranks, blocks


def _rank_voter_chunk(
    sequences: Sequence[np.random.SeedSequence], categories: int, category_size: int, mixing: int,
) -> Tuple[np.ndarray, np.ndarray]:
    rows = [
        _rank_one_voter(np.random.default_rng(sequence), categories, category_size, mixing)
        for sequence in sequences
    ]
    return np.stack([r for r, _ in rows]), np.stack([b for _, b in rows])


def generate_rankings(
    config: RankingConfig, *, stream: str = "single", jobs: int = 1,
) -> Tuple[RankingMatrix, GroundTruth]:
    """Generate `config.voters` rankings and the planted ground truth.

    With ``stream="single"`` one generator seeded from `config.seed` feeds
    every voter in turn. With ``stream="per-voter"`` voter `v` draws from the
    `v`-th child of ``SeedSequence(config.seed)``; voters are then
    independent and `jobs` worker processes give the same output as one.
    """
    if stream not in STREAMS:
        raise InvalidParameter(f"unknown stream '{stream}', expected one of {STREAMS}")
    if jobs < 1:
        raise InvalidParameter(f"jobs must be positive, got {jobs}")

    C, S, p, V = config.categories, config.category_size, config.mixing, config.voters
    logger.debug("Generating %d rankings: C=%d S=%d p=%d (%s stream)", V, C, S, p, stream)

    if stream == "single":
        rng = seeding.make_rng(config.seed)
        rows = [_rank_one_voter(rng, C, S, p) for _ in range(V)]
        ranks = np.stack([r for r, _ in rows])
        blocks = np.stack([b for _, b in rows])
    else:
        sequences = seeding.child_sequences(config.seed, V)
        if jobs == 1:
            ranks, blocks = _rank_voter_chunk(sequences, C, S, p)
        else:
            chunks: List[Sequence[np.random.SeedSequence]] = [
                sequences[i::jobs] for i in range(jobs) if sequences[i::jobs]
            ]
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                parts = list(pool.map(_rank_voter_chunk, chunks, [C] * len(chunks), [S] * len(chunks), [p] * len(chunks)))
            # Undo the strided split so row v is voter v.
            ranks = np.empty((V, C * S), dtype=np.int64)
            blocks = np.empty((V, C), dtype=np.int64)
            for i, (part_ranks, part_blocks) in enumerate(parts):
                ranks[i::jobs] = part_ranks
                blocks[i::jobs] = part_blocks

    return RankingMatrix(ranks, blocks), GroundTruth.planted(C, S)


def displaced_counts(rankings: RankingMatrix, truth: GroundTruth) -> np.ndarray:
    """Return, per voter, how many items rest outside their category's block."""
    if rankings.category_blocks is None:
        raise InvalidParameter("rankings carry no category blocks (were they read from disk?)")
    if rankings.items != truth.n:
        raise InvalidParameter("rankings and ground truth disagree on the item count")
    size = truth.category_size
    home_blocks = rankings.category_blocks[:, truth.category]
    return np.count_nonzero(rankings.ranks // size != home_blocks, axis=1)
