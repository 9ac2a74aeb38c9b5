"""Brute-force expectations of rank distances.

Each function here walks every outcome of the swap process it models and
averages pair distances exactly with ``Fraction``. Nothing is shared with
the closed forms in ``expectation``; these are the reference the closed
forms are checked against.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence


def _mean_pair_distance(values: Sequence[int]) -> Fraction:
    pairs = list(combinations(values, 2))
    return Fraction(sum(abs(a - b) for a, b in pairs), len(pairs))


def _mean_cross_distance(left: Iterable[int], right: Iterable[int]) -> Fraction:
    left, right = list(left), list(right)
    total = sum(abs(a - b) for a in left for b in right)
    return Fraction(total, len(left) * len(right))


def overall_distance(n: int) -> Fraction:
    """Mean ``|a - b|`` over all pairs of distinct ranks among `n` items."""
    return _mean_pair_distance(range(n))


def intra_distance_given_positions(size: int, positions: Sequence[int]) -> Fraction:
    """Mean intra-category distance once items at `positions` have swapped in.

    The category holds ranks ``1..size``. Every choice of ``len(positions)``
    residents to push out is equally likely; the incoming items keep their
    own positions.
    """
    residents = range(1, size + 1)
    outcomes = [
        _mean_pair_distance([r for r in residents if r not in leaving] + list(positions))
        for leaving in combinations(residents, len(positions))
    ]
    return sum(outcomes, Fraction(0)) / len(outcomes)


def intra_distance(size: int, swaps: int) -> Fraction:
    """`intra_distance_given_positions` averaged over every set of incoming positions."""
    outcomes = [
        intra_distance_given_positions(size, positions)
        for positions in combinations(range(1, size + 1), swaps)
    ]
    return sum(outcomes, Fraction(0)) / len(outcomes)


def inter_distance(size: int, swaps: int, gap: int) -> Fraction:
    """Mean cross-category distance after two blocks exchange `swaps` items.

    Block A holds ranks ``1..size``; block B starts `gap` whole blocks after
    A ends. Every pair of outgoing sets is equally likely.
    """
    block_a = list(range(1, size + 1))
    offset = size * (gap + 1)
    block_b = [r + offset for r in block_a]

    total = Fraction(0)
    count = 0
    for out_a in combinations(block_a, swaps):
        for out_b in combinations(block_b, swaps):
            now_a = [r for r in block_a if r not in out_a] + list(out_b)
            now_b = [r for r in block_b if r not in out_b] + list(out_a)
            total += _mean_cross_distance(now_a, now_b)
            count += 1
    return total / count
