from fractions import Fraction

import pytest

from category_discovery import enumeration
from category_discovery.exceptions import InvalidParameter
from category_discovery.expectation import (
    base_inequality_holds,
    binom,
    emit_expectation_curve,
    estimate_alpha_beta,
    expected_inter_distance,
    expected_inter_distance_one_swap,
    expected_intra_distance,
    expected_intra_distance_one_swap,
    expected_overall_distance,
    expected_overall_similarity,
    verify_lemmas,
)
from category_discovery.ranking_model import RankingConfig, generate_rankings
from category_discovery.similarity_graph import build_similarity_matrix

ORACLE_GRID = [
    (size, swaps, gap)
    for size in range(3, 8)
    for swaps in range(0, min(3, size - 2) + 1)
    for gap in (0, 1)
]


@pytest.mark.parametrize("n,expected", [(2, 1), (5, 2), (40, 41 / 3)])
def test_overall_distance_examples(n, expected):
    assert expected_overall_distance(n) == pytest.approx(expected)


def test_overall_distance_matches_enumeration():
    for n in range(2, 201):
        exact = enumeration.overall_distance(n)
        assert abs(expected_overall_distance(n) - float(exact)) <= 1e-12 * float(exact)


def test_overall_similarity():
    assert expected_overall_similarity(40) == pytest.approx(1 - 41 / 120)


def test_overall_distance_needs_a_pair():
    with pytest.raises(InvalidParameter):
        expected_overall_distance(1)


def test_binomial_outside_range_is_zero():
    assert binom(3, -1) == 0
    assert binom(3, 4) == 0
    assert binom(5, 2) == 10


@pytest.mark.parametrize("size", range(2, 12))
def test_intra_without_swaps(size):
    assert expected_intra_distance(size, 0) == pytest.approx((size + 1) / 3)


def test_intra_for_size_twenty():
    assert expected_intra_distance(20, 0) == pytest.approx(7)


@pytest.mark.parametrize("size,swaps,gap", ORACLE_GRID)
def test_intra_matches_enumeration(size, swaps, gap):
    formula = expected_intra_distance(size, swaps)
    oracle = float(enumeration.intra_distance(size, swaps))
    assert formula == pytest.approx(oracle, rel=1e-9)


@pytest.mark.parametrize("size,swaps,gap", ORACLE_GRID)
def test_inter_matches_enumeration(size, swaps, gap):
    formula = expected_inter_distance(size, swaps, gap)
    oracle = float(enumeration.inter_distance(size, swaps, gap))
    assert formula == pytest.approx(oracle, rel=1e-9)


@pytest.mark.parametrize("size,positions", [(5, [2, 4]), (6, [1, 3, 6]), (4, [1])])
def test_intra_with_given_positions_matches_enumeration(size, positions):
    formula = expected_intra_distance(size, len(positions), positions)
    oracle = float(enumeration.intra_distance_given_positions(size, positions))
    assert formula == pytest.approx(oracle, rel=1e-9)


@pytest.mark.parametrize("size,swaps", [(5, 1), (6, 2), (7, 3), (8, 0)])
def test_closed_average_equals_exhaustive_average(size, swaps):
    assert expected_intra_distance(size, swaps) == pytest.approx(
        expected_intra_distance(size, swaps, exhaustive=True), rel=1e-12
    )


@pytest.mark.parametrize("size", [3, 5, 10])
def test_single_swap_intra_is_the_general_form_at_one(size):
    for position in range(1, size + 1):
        assert expected_intra_distance_one_swap(size, position) == pytest.approx(
            expected_intra_distance(size, 1, [position]), rel=1e-12
        )


@pytest.mark.parametrize("size,gap", [(2, 0), (5, 0), (5, 2), (20, 1)])
def test_single_swap_inter_is_the_general_form_at_one(size, gap):
    assert expected_inter_distance_one_swap(size, gap) == pytest.approx(
        expected_inter_distance(size, 1, gap), rel=1e-12
    )


def test_inter_smallest_case():
    assert expected_inter_distance(2, 1) == pytest.approx(1.5)


@pytest.mark.parametrize("size,gap", [(20, 0), (7, 0), (7, 3)])
def test_inter_without_swaps(size, gap):
    assert expected_inter_distance(size, 0, gap) == pytest.approx(size * (gap + 1))


def test_full_exchange_is_a_relabelling():
    assert expected_inter_distance(6, 6, 1) == pytest.approx(12)


@pytest.mark.parametrize("positions", [[0], [1, 1], [6], [1, 2, 3]])
def test_bad_positions_rejected(positions):
    with pytest.raises(InvalidParameter):
        expected_intra_distance(5, 2 if len(positions) == 2 else 1, positions)


def test_swaps_beyond_size_rejected():
    with pytest.raises(InvalidParameter):
        expected_intra_distance(4, 5)
    with pytest.raises(InvalidParameter):
        expected_inter_distance(4, 5)
    with pytest.raises(InvalidParameter):
        expected_inter_distance(4, 1, -1)


def test_base_inequality():
    assert all(base_inequality_holds(size) for size in range(2, 101))


def test_curve_for_two_categories_of_twenty():
    curve = emit_expectation_curve(20, 2, 12)
    frame = curve.to_frame()
    assert list(frame.columns) == ["p", "intra", "overall", "inter"]
    assert len(frame) == 13
    first = curve.rows[0]
    assert (first.p, first.intra, first.inter) == (0, pytest.approx(7), pytest.approx(20))
    assert first.overall == pytest.approx(41 / 3)
    assert frame["overall"].nunique() == 1
    for row in curve.rows:
        if row.p <= 8:
            assert curve.separated(row.p)
        assert row.intra < row.overall
    assert curve.crossing == 9


def test_curve_needs_two_categories():
    with pytest.raises(InvalidParameter):
        emit_expectation_curve(20, 3, 4)


def test_curve_rejects_p_max_beyond_size():
    with pytest.raises(InvalidParameter):
        emit_expectation_curve(5, 2, 6)


def test_alpha_beta_extremes():
    rankings, truth = generate_rankings(RankingConfig(categories=2, category_size=6, mixing=0, voters=20, seed=1))
    sim = build_similarity_matrix(rankings)
    assert estimate_alpha_beta(sim, truth, 1.0) == (0.0, 0.0)
    assert estimate_alpha_beta(sim, truth, 0.0) == (1.0, 1.0)


def test_alpha_exceeds_beta_without_mixing():
    rankings, truth = generate_rankings(RankingConfig(categories=2, category_size=20, mixing=0, voters=200, seed=6))
    sim = build_similarity_matrix(rankings)
    alpha, beta = estimate_alpha_beta(sim, truth, expected_overall_similarity(40))
    assert alpha > beta


def test_verify_lemmas_finds_no_mismatch():
    checks = verify_lemmas()
    assert checks
    assert all(check.agrees() for check in checks)
    assert {check.lemma for check in checks} == {"intra", "inter"}


def test_enumeration_is_exact():
    assert enumeration.overall_distance(5) == Fraction(2)
    assert enumeration.intra_distance(4, 0) == Fraction(5, 3)
    assert enumeration.inter_distance(3, 0, 0) == Fraction(3)
