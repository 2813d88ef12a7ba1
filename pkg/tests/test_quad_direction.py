"""Tests for quad-direction labels and label-driven ordering."""

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from bev_geometry import Axis
from kit_errors import ContractViolation
from quad_direction import QuadDirection, encode_quad_direction, sort_points_by_label
from scene_simulator import random_monotone_lane


@pytest.mark.parametrize("points, label", [
    ([(0, 0), (1, 0), (2, 0)], QuadDirection.UP),
    ([(0, 0), (-1, 0.1), (-2, -0.1)], QuadDirection.DOWN),
    ([(0, 0), (0, 1), (0, 2)], QuadDirection.LEFT),
    ([(0, 0), (0.1, -1), (0.3, -2), (0.2, -3)], QuadDirection.RIGHT),
    # S-curve that keeps moving forward
    ([(0, 0), (1, 1), (2, 0), (3, -1), (4, 0)], QuadDirection.UP),
])
def test_examples(points, label):
    assert encode_quad_direction(points) is label


def test_exact_diagonal_goes_to_up_down():
    assert encode_quad_direction([(0, 0), (1, 1), (2, 2)]) is QuadDirection.UP
    assert encode_quad_direction([(0, 0), (-1, -1)]) is QuadDirection.DOWN


def test_in_axis_tie_uses_displacement():
    # two forward and two backward steps, net forward
    assert encode_quad_direction([(0, 0), (3, 0), (2, 0), (5, 0), (4, 0)]) is QuadDirection.UP


def test_needs_two_points():
    with pytest.raises(ContractViolation):
        encode_quad_direction([(1, 2)])


def test_opposites_and_axes():
    for label in QuadDirection:
        assert label.opposite.opposite is label
        assert label.opposite.dominant_axis is label.dominant_axis
        assert label.opposite.ascending is not label.ascending
    assert QuadDirection.UP.dominant_axis is Axis.X
    assert QuadDirection.LEFT.dominant_axis is Axis.Y


def test_parse():
    assert QuadDirection.parse(" Left ") is QuadDirection.LEFT
    with pytest.raises(ContractViolation):
        QuadDirection.parse("north")


def _votes(pts):
    d = np.diff(np.asarray(pts, dtype=float)[:, :2], axis=0)
    return (np.sum(d[:, 0] > 0), np.sum(d[:, 0] < 0), np.sum(d[:, 1] > 0), np.sum(d[:, 1] < 0))


integer_polylines = st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), min_size=2, max_size=12)


@given(integer_polylines)
def test_reversal_gives_opposite_label(points):
    up, down, left, right = _votes(points)
    assume(max(up, down) != max(left, right))
    assume(up != down and left != right)
    assert encode_quad_direction(points[::-1]) is encode_quad_direction(points).opposite


@given(integer_polylines, st.integers(-1000, 1000), st.integers(-1000, 1000))
def test_translation_invariance(points, dx, dy):
    moved = [(x + dx, y + dy) for x, y in points]
    assert encode_quad_direction(moved) is encode_quad_direction(points)


def test_sort_examples():
    pts = [(2, 0), (0, 1), (1, -1)]
    np.testing.assert_array_equal(sort_points_by_label(pts, QuadDirection.UP)[:, 0], [0, 1, 2])
    np.testing.assert_array_equal(sort_points_by_label(pts, QuadDirection.DOWN)[:, 0], [2, 1, 0])
    np.testing.assert_array_equal(sort_points_by_label(pts, QuadDirection.LEFT)[:, 1], [-1, 0, 1])
    np.testing.assert_array_equal(sort_points_by_label(pts, QuadDirection.RIGHT)[:, 1], [1, 0, -1])


def test_sort_keeps_input_order_on_ties():
    pts = [(1, 5), (0, 0), (1, 7), (1, 6)]
    out = sort_points_by_label(pts, QuadDirection.UP)
    np.testing.assert_array_equal(out[:, 1], [0, 5, 7, 6])
    out = sort_points_by_label(pts, QuadDirection.DOWN)
    np.testing.assert_array_equal(out[:, 1], [5, 7, 6, 0])


def test_sort_needs_two_points():
    with pytest.raises(ContractViolation):
        sort_points_by_label([(0, 0)], QuadDirection.UP)


def test_shuffled_lane_is_restored_by_its_label(rng):
    for _ in range(200):
        lane = random_monotone_lane(rng)
        label = encode_quad_direction(lane)
        shuffled = lane[rng.permutation(len(lane))]
        np.testing.assert_array_equal(sort_points_by_label(shuffled, label), lane)
