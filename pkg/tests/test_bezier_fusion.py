"""Tests for cubic Bezier sampling, fitting and mask/Bezier fusion."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial import ConvexHull, cKDTree

from bev_geometry import Centerline, CenterlineSource, arc_length_resample
from bezier_fusion import (BezierCurve, ConfidenceMode, align_orientation, bezier_eval, bezier_fit,
                           bezier_sample, fuse, fuse_instance)
from event_system import PipelineEventType
from kit_errors import ContractViolation
from scene_simulator import generate_synthetic_scene
from topology_metrics import det_l

SQUARE = BezierCurve([(0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 0, 0)])


class TestEvaluation:
    def test_midpoint(self):
        p = bezier_eval(SQUARE, 0.5)
        assert (p.x, p.y, p.z) == pytest.approx((0.5, 0.75, 0.0))

    def test_endpoints_are_exact(self):
        curve = BezierCurve([(0.1, 0.2, 0.3), (5, 1, 0), (7, -2, 1), (9.7, 3.3, -0.4)])
        assert tuple(bezier_eval(curve, 0.0)) == (0.1, 0.2, 0.3)
        assert tuple(bezier_eval(curve, 1.0)) == (9.7, 3.3, -0.4)

    def test_parameter_range(self):
        with pytest.raises(ContractViolation):
            bezier_eval(SQUARE, 1.5)

    def test_control_point_count(self):
        with pytest.raises(ContractViolation):
            BezierCurve([(0, 0), (1, 1), (2, 0)])

    def test_two_samples_are_the_end_controls(self):
        pts = bezier_sample(SQUARE, 2).polyline
        np.testing.assert_array_equal(pts, [(0, 0, 0), (1, 0, 0)])

    def test_samples_match_pointwise_evaluation(self):
        samples = bezier_sample(SQUARE, 11)
        assert samples.source is CenterlineSource.BEZIER
        for t, p in zip(np.linspace(0, 1, 11), samples.polyline):
            np.testing.assert_allclose(p, bezier_eval(SQUARE, float(t)), atol=1e-12)

    def test_collinear_controls_give_straight_samples(self):
        curve = BezierCurve([(0, 0, 0), (1, 2, 0), (3, 6, 0), (4, 8, 0)])
        pts = bezier_sample(curve, 11).polyline
        np.testing.assert_allclose(pts[:, 1], 2 * pts[:, 0], atol=1e-12)

    def test_samples_stay_in_control_hull(self, rng):
        for _ in range(50):
            controls = np.column_stack([rng.uniform(-10, 10, (4, 2)), np.zeros(4)])
            hull = ConvexHull(controls[:, :2])
            pts = bezier_sample(BezierCurve(controls), 25).polyline[:, :2]
            lhs = pts @ hull.equations[:, :2].T + hull.equations[:, 2]
            assert np.all(lhs <= 1e-9)


class TestFit:
    def test_recovers_uniform_speed_curve(self):
        controls = np.array([(0, 0, 0), (1, 0.5, 0.1), (2, 1, 0.2), (3, 1.5, 0.3)])
        samples = bezier_sample(BezierCurve(controls), 30).polyline
        fitted = bezier_fit(samples)
        np.testing.assert_allclose(fitted.control_points, controls, atol=1e-9)

    def test_endpoints_are_pinned(self, rng):
        pts = np.cumsum(rng.uniform(0.5, 1.5, (12, 3)), axis=0)
        fitted = bezier_fit(pts, confidence=0.4)
        np.testing.assert_array_equal(fitted.control_points[0], pts[0])
        np.testing.assert_array_equal(fitted.control_points[-1], pts[-1])
        assert fitted.confidence == 0.4

    def test_noisy_samples(self, rng):
        truth = BezierCurve([(0, 0, 0), (10, 2, 0), (20, 2, 0), (30, 0, 0)])
        samples = bezier_sample(truth, 200).polyline.copy()
        samples[:, :2] += rng.normal(0.0, 0.05, (200, 2))
        samples[0], samples[-1] = truth.control_points[0], truth.control_points[-1]
        fitted = bezier_sample(bezier_fit(samples), 200).polyline
        dense_truth = bezier_sample(truth, 5000).polyline
        deviation, _ = cKDTree(dense_truth).query(fitted)
        assert deviation.max() < 0.15

    def test_needs_four_points(self):
        with pytest.raises(ContractViolation):
            bezier_fit([(0, 0), (1, 0), (2, 0)])


class TestFusion:
    def test_average_with_bezier_height(self):
        m = Centerline([(1, 2, 0), (3, 2, 0)], 0.9, CenterlineSource.MASK)
        b = Centerline([(3, 4, 6), (5, 4, 7)], 0.5, CenterlineSource.BEZIER)
        fused = fuse(m, b)
        np.testing.assert_allclose(fused.polyline, [(2, 3, 6), (4, 3, 7)])
        assert fused.source is CenterlineSource.FUSED
        assert fused.confidence == 0.9

    @pytest.mark.parametrize("mode, expected", [
        (ConfidenceMode.MASK, 0.9),
        (ConfidenceMode.MAX, 0.9),
        (ConfidenceMode.MEAN, 0.7),
    ])
    def test_confidence_modes(self, mode, expected):
        m = Centerline([(0, 0, 0), (1, 0, 0)], 0.9)
        b = Centerline([(0, 1, 0), (1, 1, 0)], 0.5)
        assert fuse(m, b, mode).confidence == pytest.approx(expected)

    def test_length_mismatch(self):
        with pytest.raises(ContractViolation):
            fuse(Centerline([(0, 0), (1, 0)]), Centerline([(0, 0), (1, 0), (2, 0)]))

    @given(st.lists(st.tuples(st.floats(-30, 30), st.floats(-30, 30), st.floats(-3, 3),
                              st.floats(-30, 30), st.floats(-30, 30), st.floats(-3, 3)),
                    min_size=2, max_size=12))
    def test_fused_points_lie_between_heads(self, rows):
        rows = np.array(rows, dtype=float)
        m, b = rows[:, :3], rows[:, 3:]
        m[:, 0] += np.arange(len(rows)) * 100.0
        b[:, 0] += np.arange(len(rows)) * 100.0
        fused = fuse(Centerline(m), Centerline(b)).polyline
        to_m = np.linalg.norm(fused[:, :2] - m[:, :2], axis=1)
        to_b = np.linalg.norm(fused[:, :2] - b[:, :2], axis=1)
        half = 0.5 * np.linalg.norm(m[:, :2] - b[:, :2], axis=1)
        np.testing.assert_allclose(to_m, half, atol=1e-9)
        np.testing.assert_allclose(to_b, half, atol=1e-9)

    def test_alignment(self):
        ref = Centerline([(0, 0), (1, 0), (2, 0)])
        backwards = Centerline([(2, 0.1), (1, 0.1), (0, 0.1)])
        forwards = Centerline([(0, 0.1), (1, 0.1), (2, 0.1)])
        np.testing.assert_array_equal(align_orientation(ref, backwards).polyline, forwards.polyline)
        assert align_orientation(ref, forwards) is forwards

    def test_instance_fusion_aligns_and_resamples(self, recorded):
        events = recorded(PipelineEventType.CENTERLINES_FUSED)
        mask_cl = Centerline([(0, 0, 0), (10, 0, 0), (20, 0, 0)], 0.8, CenterlineSource.MASK)
        curve = BezierCurve([(20, 1, 1), (13, 1, 1), (7, 1, 1), (0, 1, 1)], 0.6)
        fused = fuse_instance(mask_cl, curve, n_out=11, confidence_mode=ConfidenceMode.MEAN)
        assert len(fused) == 11
        np.testing.assert_allclose(fused.polyline[0], (0, 0.5, 1), atol=1e-9)
        np.testing.assert_allclose(fused.polyline[-1], (20, 0.5, 1), atol=1e-9)
        assert fused.confidence == pytest.approx(0.7)
        assert len(events) == 1 and events[0].data['points'] == 11


def _noisy(cl, rng, sigma):
    pts = cl.polyline.copy()
    pts[:, :2] += rng.normal(0.0, sigma, (len(pts), 2))
    return Centerline(pts, 1.0)


@pytest.mark.slow
def test_fusion_is_never_worse_than_both_heads(rng):
    for seed in range(12):
        scene = generate_synthetic_scene(seed, n_lanes=12, topology_density=0.0, n_traffic_elements=0)
        gts = scene.gt_centerlines
        mask_preds = {k: _noisy(c, rng, 0.35) for k, c in gts.items()}
        bezier_preds = {k: _noisy(c, rng, 0.35) for k, c in gts.items()}
        fused = {k: fuse_instance(mask_preds[k], bezier_preds[k]) for k in gts}
        floor = min(det_l(mask_preds, gts), det_l(bezier_preds, gts))
        assert det_l(fused, gts) >= floor


def test_fusion_of_identical_heads_is_identity():
    cl = Centerline(arc_length_resample([(0, 0, 0), (5, 1, 0), (9, 4, 0)], 11), 0.8)
    fused = fuse(cl, cl)
    np.testing.assert_array_equal(fused.polyline, cl.polyline)
    assert fused.confidence == 0.8


def test_instance_fusion_of_identical_straight_heads_is_identity():
    cl = Centerline(arc_length_resample([(0, 0, 0.5), (10, 2, 0.5)], 11), 1.0)
    for other in (cl, cl.reversed()):
        fused = fuse_instance(cl, other)
        np.testing.assert_allclose(fused.polyline, cl.polyline, atol=1e-9)
