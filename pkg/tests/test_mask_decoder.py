"""Tests for mask-to-centerline decoding."""

import numpy as np
import pytest

from bev_geometry import DEFAULT_GRID, CenterlineSource, Point3, arc_length_resample, discrete_frechet
from event_system import PipelineEventType
from kit_errors import ConfigurationError, DecodeFailure, ErrorKind
from mask_decoder import (DecoderConfig, ScoredPoint, decode_mask, decode_masks, extract_center_points,
                          refine_points)
from mask_rasterizer import FlowAwareMask, ProbMap, make_flow_aware_mask
from quad_direction import QuadDirection, encode_quad_direction
from scene_simulator import random_monotone_lane


def _mask(values, direction=QuadDirection.UP, confidence=1.0):
    return FlowAwareMask(ProbMap(DEFAULT_GRID, values), direction, confidence)


class TestExtraction:
    def test_probability_weighted_expectation(self):
        values = np.zeros(DEFAULT_GRID.shape)
        values[10, 1] = 0.96
        values[10, 2] = 0.98
        points = extract_center_points(_mask(values))
        assert len(points) == 1
        expected = (0.96 * 1 + 0.98 * 2) / (0.96 + 0.98)
        assert expected == pytest.approx(1.5052, abs=1e-4)
        assert points[0].position.x == pytest.approx(float(DEFAULT_GRID.row_to_x(10)))
        assert points[0].position.y == pytest.approx(float(DEFAULT_GRID.col_to_y(expected)))
        assert points[0].score == pytest.approx(0.96)

    def test_single_cell_rows_give_cell_centers(self):
        values = np.zeros(DEFAULT_GRID.shape)
        for row, col in [(3, 7), (4, 8), (5, 8)]:
            values[row, col] = 1.0
        points = extract_center_points(_mask(values))
        assert [p.position[:2] for p in points] == [
            tuple(DEFAULT_GRID.grid_to_world((r, c))[:2]) for r, c in [(3, 7), (4, 8), (5, 8)]]

    def test_column_scan_for_left_right(self):
        values = np.zeros(DEFAULT_GRID.shape)
        values[30, 5] = values[31, 5] = 1.0
        points = extract_center_points(_mask(values, QuadDirection.LEFT))
        assert len(points) == 1
        assert points[0].position.x == pytest.approx(float(DEFAULT_GRID.row_to_x(30.5)))
        assert points[0].position.y == pytest.approx(float(DEFAULT_GRID.col_to_y(5)))

    def test_nothing_above_threshold(self):
        values = np.full(DEFAULT_GRID.shape, 0.95)
        assert extract_center_points(_mask(values)) == []

    def test_scores_exceed_threshold(self, rng):
        cfg = DecoderConfig(threshold_p=0.9)
        for _ in range(20):
            values = rng.uniform(0.0, 1.0, DEFAULT_GRID.shape)
            points = extract_center_points(_mask(values, list(QuadDirection)[int(rng.integers(4))]), cfg)
            assert all(p.score > 0.9 for p in points)


def _scored(xy):
    return [ScoredPoint(Point3(float(x), float(y), 0.0), 1.0) for x, y in xy]


class TestRefinement:
    def test_collinear_points_stay_on_line(self):
        x = np.arange(0.0, 20.5, 0.5)
        out = refine_points(_scored(np.column_stack([x, 0.5 * x + 1.0])), QuadDirection.UP)
        assert out.shape == (11, 3)
        np.testing.assert_allclose(out[:, 1], 0.5 * out[:, 0] + 1.0, atol=1e-6)
        gaps = np.linalg.norm(np.diff(out, axis=0), axis=1)
        np.testing.assert_allclose(gaps, gaps[0], rtol=1e-9)
        assert np.all(out[:, 2] == 0.0)

    def test_outlier_is_smoothed(self):
        x = np.arange(0.0, 30.5, 0.5)
        y = 0.01 * x ** 2
        y[20] += 1.0
        out = refine_points(_scored(np.column_stack([x, y])), QuadDirection.UP)
        assert np.max(np.abs(out[:, 1] - 0.01 * out[:, 0] ** 2)) < 1.0

    def test_output_is_ascending_along_dominant_axis(self, rng):
        y = np.sort(rng.uniform(-20, 20, 30))
        out = refine_points(_scored(np.column_stack([0.1 * y, y])), QuadDirection.RIGHT)
        assert np.all(np.diff(out[:, 1]) > 0)

    def test_span_of_inputs_is_kept(self):
        x = np.linspace(0.0, 10.0, 30)
        pts = _scored(np.column_stack([x, np.zeros_like(x)]))
        out = refine_points(pts, QuadDirection.UP)
        assert (out[0, 0], out[-1, 0]) == pytest.approx((0.0, 10.0), abs=1e-9)
        trimmed = refine_points(pts, QuadDirection.UP, end_trim=1.0)
        assert (trimmed[0, 0], trimmed[-1, 0]) == pytest.approx((1.0, 9.0), abs=1e-9)

    def test_dense_evaluation_follows_cell_size(self):
        x = np.linspace(0.0, 20.0, 41)
        pts = _scored(np.column_stack([x, 0.05 * x ** 2]))
        fine = refine_points(pts, QuadDirection.UP, cell_size=0.5)
        coarse = refine_points(pts, QuadDirection.UP, cell_size=10.0)
        assert np.max(np.abs(fine[:, 1] - 0.05 * fine[:, 0] ** 2)) < 0.01
        assert np.max(np.abs(coarse[:, 1] - 0.05 * coarse[:, 0] ** 2)) > 0.5

    def test_short_span_is_not_trimmed(self):
        x = np.linspace(0.0, 2.0, 5)
        out = refine_points(_scored(np.column_stack([x, x])), QuadDirection.UP, end_trim=1.0)
        assert (out[0, 0], out[-1, 0]) == pytest.approx((0.0, 2.0), abs=1e-9)

    def test_too_few_points(self):
        with pytest.raises(DecodeFailure) as info:
            refine_points(_scored([(0.0, 0.0)]), QuadDirection.UP)
        assert info.value.kind is ErrorKind.TOO_FEW_POINTS

    def test_degenerate_fit(self):
        with pytest.raises(DecodeFailure) as info:
            refine_points(_scored([(1.0, 0.0), (1.0, 1.0), (1.0, 2.0)]), QuadDirection.UP)
        assert info.value.kind is ErrorKind.DEGENERATE_FIT


class TestDecode:
    GT = np.array([(-20.0, 3.0, 0.0), (20.0, 3.0, 0.0)])

    def test_straight_line(self):
        cl = decode_mask(make_flow_aware_mask(self.GT, confidence=0.8))
        assert len(cl) == 11
        assert cl.source is CenterlineSource.MASK
        assert cl.confidence == 0.8
        assert discrete_frechet(cl.polyline, arc_length_resample(self.GT, 11)) <= 0.5
        assert encode_quad_direction(cl.polyline) is QuadDirection.UP

    def test_down_label_reverses_order(self):
        up = make_flow_aware_mask(self.GT)
        down = FlowAwareMask(up.prob, QuadDirection.DOWN)
        np.testing.assert_array_equal(decode_mask(down).polyline, decode_mask(up).polyline[::-1])

    def test_empty_mask(self):
        with pytest.raises(DecodeFailure) as info:
            decode_mask(_mask(np.zeros(DEFAULT_GRID.shape)))
        assert info.value.kind is ErrorKind.EMPTY_EXTRACTION

    def test_failures_are_dropped_and_published(self, recorded):
        events = recorded(PipelineEventType.DECODE_FAILED, PipelineEventType.CENTERLINE_DECODED)
        masks = {
            "good": make_flow_aware_mask(self.GT),
            "empty": _mask(np.zeros(DEFAULT_GRID.shape)),
        }
        decoded, failures = decode_masks(masks)
        assert set(decoded) == {"good"}
        assert set(failures) == {"empty"}
        failed = [e for e in events if e.event_type is PipelineEventType.DECODE_FAILED]
        assert len(failed) == 1
        assert failed[0].data['instance'] == "empty"
        assert failed[0].data['kind'] == ErrorKind.EMPTY_EXTRACTION.value

    def test_invalid_config(self):
        with pytest.raises(ConfigurationError):
            DecoderConfig(threshold_p=1.0)
        with pytest.raises(ConfigurationError):
            DecoderConfig(n_out=1)


@pytest.mark.slow
def test_rasterize_decode_round_trip(rng):
    distances, labels_kept = [], 0
    for _ in range(500):
        lane = random_monotone_lane(rng)
        mask = make_flow_aware_mask(lane)
        cl = decode_mask(mask)
        distances.append(discrete_frechet(cl.polyline, arc_length_resample(lane, 11)))
        labels_kept += encode_quad_direction(cl.polyline) is mask.direction
    distances = np.array(distances)
    assert np.mean(distances <= 1.0) >= 0.99
    assert np.median(distances) <= 0.5
    assert labels_kept == 500
