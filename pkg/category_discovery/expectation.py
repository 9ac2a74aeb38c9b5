"""Closed-form expected rank distances for the planted ranking model.

Distances stand in for similarities: ``Sim = 1 - d / N`` is decreasing in
``d``, so a category is recoverable when the expected same-category distance
sits below the overall one and the cross-category distance above it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np  # type: ignore
import pandas as pd  # type: ignore
from scipy.special import comb  # type: ignore

from category_discovery import enumeration
from category_discovery.exceptions import InvalidParameter
from category_discovery.ranking_model import GroundTruth
from category_discovery.similarity_graph import SimilarityMatrix

logger = logging.getLogger(__name__)


def binom(n: int, k: int) -> int:
    """Binomial coefficient, zero whenever ``k < 0`` or ``k > n``."""
    if k < 0 or n < 0 or k > n:
        return 0
    return int(comb(n, k, exact=True))


def block_distance_sum(size: int) -> int:
    """Sum of ``|a - b|`` over the unordered pairs of a block: ``sum i (size - i)``."""
    return (size - 1) * size * (size + 1) // 6


def expected_overall_distance(n: int) -> float:
    """Expected ``|a - b|`` for a uniformly chosen pair of distinct ranks, ``(n + 1) / 3``."""
    if n < 2:
        raise InvalidParameter(f"need at least 2 items to form a pair, got {n}")
    return (n + 1) / 3


def expected_overall_similarity(n: int) -> float:
    """``1 - (n + 1) / (3 n)``, the default cut-off between edges and non-edges."""
    return 1.0 - expected_overall_distance(n) / n


def _check_positions(size: int, swaps: int, positions: Sequence[int]) -> None:
    if len(positions) != swaps:
        raise InvalidParameter(f"expected {swaps} swap-in positions, got {len(positions)}")
    if len(set(positions)) != len(positions):
        raise InvalidParameter(f"swap-in positions must be distinct, got {list(positions)}")
    if any(not 1 <= x <= size for x in positions):
        raise InvalidParameter(f"swap-in positions must lie in [1, {size}], got {list(positions)}")


def _check_intra(size: int, swaps: int) -> None:
    if size < 2:
        raise InvalidParameter(f"category size must be at least 2, got {size}")
    if not 0 <= swaps <= size:
        raise InvalidParameter(f"swaps must lie in [0, {size}], got {swaps}")
    if swaps > size - 2:
        logger.warning("p=%d > S-2=%d: resident-pair term of the intra distance vanishes", swaps, size - 2)


def expected_intra_distance_one_swap(size: int, position: int) -> float:
    """Expected same-category distance after a single item swaps in at `position`."""
    _check_intra(size, 1)
    _check_positions(size, 1, [position])
    spread = sum(abs(position - i) for i in range(1, size + 1))
    numerator = (size - 1) * spread + (size - 2) * block_distance_sum(size)
    return float(Fraction(numerator, size * binom(size, 2)))


def _intra_fraction(size: int, swaps: int, pair_term: Fraction, spread_term: Fraction) -> Fraction:
    numerator = (
        binom(size, swaps) * pair_term
        + binom(size - 1, swaps) * spread_term
        + binom(size - 2, swaps) * block_distance_sum(size)
    )
    return numerator / (binom(size, 2) * binom(size, swaps))


def _intra_given_positions(size: int, swaps: int, positions: Sequence[int]) -> Fraction:
    pair_term = Fraction(sum(abs(a - b) for a, b in combinations(positions, 2)))
    spread_term = Fraction(sum(abs(x - i) for i in range(1, size + 1) for x in positions))
    return _intra_fraction(size, swaps, pair_term, spread_term)


def expected_intra_distance(
    size: int,
    swaps: int,
    positions: Optional[Sequence[int]] = None,
    *,
    exhaustive: bool = False,
) -> float:
    """Expected same-category distance with `swaps` items swapped in.

    Given `positions` the formula is evaluated for that realisation.
    Without them it is averaged over every set of distinct positions in
    ``[1, size]``; `exhaustive` averages by walking all ``C(size, swaps)``
    sets instead of using the closed averages
    ``C(p, 2) (S + 1) / 3`` and ``p * 2 T / S``.
    """
    _check_intra(size, swaps)
    if positions is not None:
        _check_positions(size, swaps, positions)
        return float(_intra_given_positions(size, swaps, positions))

    if exhaustive:
        values = [
            _intra_given_positions(size, swaps, chosen)
            for chosen in combinations(range(1, size + 1), swaps)
        ]
        return float(sum(values, Fraction(0)) / len(values))

    pair_term = binom(swaps, 2) * Fraction(size + 1, 3)
    spread_term = swaps * Fraction(2 * block_distance_sum(size), size)
    return float(_intra_fraction(size, swaps, pair_term, spread_term))


def _check_inter(size: int, swaps: int, gap: int) -> None:
    if size < 1:
        raise InvalidParameter(f"category size must be positive, got {size}")
    if not 0 <= swaps <= size:
        raise InvalidParameter(f"swaps must lie in [0, {size}], got {swaps}")
    if gap < 0:
        raise InvalidParameter(f"category gap must be non-negative, got {gap}")


def expected_inter_distance_one_swap(size: int, gap: int = 0) -> float:
    """Expected cross-category distance after the two categories swap one item each."""
    _check_inter(size, 1, gap)
    numerator = (1 + (size - 1) ** 2) * size ** 3 * (gap + 1) + 4 * size * block_distance_sum(size)
    return float(Fraction(numerator, size ** 4))


def expected_inter_distance(size: int, swaps: int, gap: int = 0) -> float:
    """Expected cross-category distance after the categories exchange `swaps` items.

    `gap` counts the whole categories ranked between the two (0 when adjacent).
    """
    _check_inter(size, swaps, gap)
    stay_or_cross = binom(size - 1, swaps) ** 2 + binom(size - 1, swaps - 1) ** 2
    split_pairs = 4 * binom(size - 2, swaps - 1) * binom(size, swaps) * block_distance_sum(size)
    numerator = stay_or_cross * size ** 3 * (gap + 1) + split_pairs
    return float(Fraction(numerator, size ** 2 * binom(size, swaps) ** 2))


def base_inequality_holds(size: int) -> bool:
    """``(S + 1) / 3 < (2 S + 1) / 3 < S``: unmixed two-category separation."""
    intra = Fraction(size + 1, 3)
    overall = Fraction(2 * size + 1, 3)
    return intra < overall < size


@dataclass(frozen=True)
class CurveRow:
    p: int
    intra: float
    overall: float
    inter: float


@dataclass(frozen=True)
class ExpectationCurve:
    rows: Tuple[CurveRow, ...]

    @property
    def crossing(self) -> Optional[int]:
        """Smallest p whose cross-category distance falls below the overall one."""
        for row in self.rows:
            if row.inter < row.overall:
                return row.p
        return None

    def separated(self, p: int) -> bool:
        row = next(r for r in self.rows if r.p == p)
        return row.intra < row.overall < row.inter

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(r.p, r.intra, r.overall, r.inter) for r in self.rows],
            columns=["p", "intra", "overall", "inter"],
        )


def emit_expectation_curve(size: int, categories: int, p_max: int) -> ExpectationCurve:
    """Tabulate expected distances for ``p = 0..p_max`` on adjacent categories."""
    if categories != 2:
        raise InvalidParameter(
            f"expected distance curves are only worked out for 2 categories, got {categories}"
        )
    if not 0 <= p_max <= size:
        raise InvalidParameter(f"p_max must lie in [0, {size}], got {p_max}")

    overall = expected_overall_distance(size * categories)
    rows = tuple(
        CurveRow(
            p=p,
            intra=expected_intra_distance(size, p),
            overall=overall,
            inter=expected_inter_distance(size, p, 0),
        )
        for p in range(p_max + 1)
    )
    curve = ExpectationCurve(rows)
    logger.info("Expected distance curve for S=%d: cross-category distance dips below overall at p=%s",
                size, curve.crossing)
    return curve


def estimate_alpha_beta(sim: SimilarityMatrix, truth: GroundTruth, epsilon: float) -> Tuple[float, float]:
    """Fraction of same-category and of cross-category pairs whose mean similarity exceeds `epsilon`."""
    if sim.n != truth.n:
        raise InvalidParameter(f"similarity matrix covers {sim.n} items, ground truth {truth.n}")
    rows, cols = np.triu_indices(sim.n, k=1)
    linked = (sim.mean_sim[rows, cols] > epsilon) & (sim.voters_counted[rows, cols] > 0)
    same = truth.category[rows] == truth.category[cols]
    alpha = float(linked[same].mean()) if same.any() else float("nan")
    beta = float(linked[~same].mean()) if (~same).any() else float("nan")
    return alpha, beta


@dataclass(frozen=True)
class LemmaCheck:
    lemma: str
    size: int
    swaps: int
    gap: Optional[int]
    formula: float
    oracle: float

    @property
    def relative_error(self) -> float:
        if self.oracle == 0:
            return abs(self.formula)
        return abs(self.formula - self.oracle) / abs(self.oracle)

    def agrees(self, tolerance: float = 1e-9) -> bool:
        return self.relative_error <= tolerance


def verify_lemmas(
    sizes: Iterable[int] = range(3, 8), p_cap: int = 3, gaps: Iterable[int] = (0, 1),
) -> List[LemmaCheck]:
    """Compare the closed forms with the enumeration oracles over a grid.

    Every comparison is returned; mismatches are logged verbatim and both
    values are kept on the record.
    """
    gaps = list(gaps)
    checks: List[LemmaCheck] = []
    for size in sizes:
        for swaps in range(0, min(p_cap, size - 2) + 1):
            checks.append(LemmaCheck(
                "intra", size, swaps, None,
                expected_intra_distance(size, swaps),
                float(enumeration.intra_distance(size, swaps)),
            ))
            for gap in gaps:
                checks.append(LemmaCheck(
                    "inter", size, swaps, gap,
                    expected_inter_distance(size, swaps, gap),
                    float(enumeration.inter_distance(size, swaps, gap)),
                ))
    for check in checks:
        if not check.agrees():
            logger.warning("Formula/oracle mismatch for %s S=%d p=%d D=%s: formula=%r oracle=%r",
                           check.lemma, check.size, check.swaps, check.gap, check.formula, check.oracle)
    return checks
