"""Tests for synthetic scenes and prediction perturbation."""

import networkx as nx
import numpy as np
import pytest

from bev_geometry import Axis, polyfit
from kit_errors import ConfigurationError
from quad_direction import encode_quad_direction
from scene_simulator import (PerturbConfig, SimulationConfig, generate_dataset, generate_synthetic_scene,
                             perturb_predictions, random_monotone_lane)
from topology_metrics import det_l


def test_same_seed_same_scene():
    assert generate_synthetic_scene(42) == generate_synthetic_scene(42)
    assert generate_synthetic_scene(42) != generate_synthetic_scene(43)


def test_ids_and_counts():
    scene = generate_synthetic_scene(3, n_lanes=5, n_traffic_elements=2)
    assert scene.frame_id == "000003"
    assert sorted(scene.gt_centerlines) == [f"lane_{i:02d}" for i in range(5)]
    assert sorted(scene.gt_traffic_elements) == ["te_00", "te_01"]
    assert all(len(c) == 11 for c in scene.gt_centerlines.values())
    assert scene.is_valid() == (True, "")


@pytest.mark.parametrize("chain_probability", [0.0, 0.6, 1.0])
def test_lanes_stay_inside_the_region(chain_probability):
    for seed in range(30):
        scene = generate_synthetic_scene(seed, n_lanes=8, chain_probability=chain_probability)
        for cl in scene.gt_centerlines.values():
            assert np.all(np.abs(cl.polyline[:, 0]) <= 48.0 + 1e-9)
            assert np.all(np.abs(cl.polyline[:, 1]) <= 24.0 + 1e-9)


def test_lanes_are_monotone_with_gentle_slope(rng):
    for _ in range(200):
        lane = random_monotone_lane(rng)
        dx, dy = np.ptp(lane[:, 0]), np.ptp(lane[:, 1])
        dominant = 0 if dx >= dy else 1
        steps = np.diff(lane[:, dominant])
        assert np.all(steps > 0) or np.all(steps < 0)
        lateral = np.abs(np.diff(lane[:, 1 - dominant]))
        assert np.all(lateral < np.abs(steps))
        assert encode_quad_direction(lane) is not None


def test_lanes_are_cubic_in_the_dominant_axis(rng):
    for _ in range(20):
        lane = random_monotone_lane(rng, axis=Axis.X, sign=1)
        fit = polyfit(lane, Axis.X, 3)
        np.testing.assert_allclose(fit.curve(lane[:, 0])[:, 1], lane[:, 1], atol=1e-5)


def test_chained_start_without_room():
    assert random_monotone_lane(np.random.default_rng(0), np.array([47.0, 0.0, 0.0]), Axis.X, 1) is None


def test_lane_graph_is_acyclic():
    for seed in range(40):
        scene = generate_synthetic_scene(seed, n_lanes=10, topology_density=1.0, chain_probability=0.9)
        graph = nx.DiGraph(scene.gt_topology_ll)
        assert nx.is_directed_acyclic_graph(graph)
        for source, target in scene.gt_topology_ll:
            end = scene.gt_centerlines[source].polyline[-1]
            start = scene.gt_centerlines[target].polyline[0]
            assert np.linalg.norm(end[:2] - start[:2]) <= 2.0 + 1e-6


def test_chaining_produces_edges():
    edges = sum(len(generate_synthetic_scene(seed, topology_density=1.0, chain_probability=1.0).gt_topology_ll)
                for seed in range(10))
    assert edges > 0


def test_zero_density_has_no_edges():
    for seed in range(10):
        scene = generate_synthetic_scene(seed, topology_density=0.0)
        assert scene.gt_topology_ll == [] and scene.gt_topology_lt == []


def test_dataset_uses_consecutive_seeds():
    scenes = generate_dataset(SimulationConfig(seed=10, frames=3))
    assert [s.frame_id for s in scenes] == ["000010", "000011", "000012"]
    assert scenes[1] == generate_synthetic_scene(11)


@pytest.mark.parametrize("kwargs", [
    {"n_lanes": 0}, {"n_traffic_elements": -1}, {"topology_density": 1.5}, {"chain_probability": -0.1},
    {"frames": 0},
])
def test_invalid_simulation_config(kwargs):
    with pytest.raises(ConfigurationError):
        SimulationConfig(**kwargs)


class TestPerturbation:
    def test_zero_config_is_identity(self):
        scene = generate_synthetic_scene(8)
        assert perturb_predictions(scene, PerturbConfig()) == scene

    def test_drop_everything(self):
        out = perturb_predictions(generate_synthetic_scene(8), PerturbConfig(drop_rate=1.0))
        assert out.pred_centerlines == {}
        assert len(out.pred_topology_ll) == 0 and len(out.pred_topology_lt) == 0
        assert out.is_valid() == (True, "")

    def test_ground_truth_is_untouched(self):
        scene = generate_synthetic_scene(8)
        before = {k: c.polyline.copy() for k, c in scene.gt_centerlines.items()}
        out = perturb_predictions(scene, PerturbConfig(xy_noise_sigma=1.0, z_noise_sigma=0.5, drop_rate=0.3,
                                                       false_positive_rate=1.0, edge_score_noise=0.3, seed=4))
        assert out.gt_centerlines is scene.gt_centerlines
        for k, pts in before.items():
            np.testing.assert_array_equal(scene.gt_centerlines[k].polyline, pts)
        assert out.is_valid() == (True, "")

    def test_deterministic_per_seed(self):
        scene = generate_synthetic_scene(8)
        cfg = PerturbConfig(xy_noise_sigma=0.5, false_positive_rate=1.0, seed=2)
        assert perturb_predictions(scene, cfg) == perturb_predictions(scene, cfg)
        assert perturb_predictions(scene, cfg) != perturb_predictions(scene, PerturbConfig(xy_noise_sigma=0.5,
                                                                                        false_positive_rate=1.0,
                                                                                        seed=3))

    def test_edge_scores_stay_in_unit_interval(self):
        cfg = PerturbConfig(edge_score_noise=2.0, seed=1)
        for seed in range(10):
            out = perturb_predictions(generate_synthetic_scene(seed, topology_density=1.0), cfg)
            assert all(0.0 <= v <= 1.0 for _, _, v in out.pred_topology_ll)
            assert all(0.0 <= v <= 1.0 for _, _, v in out.pred_topology_lt)

    def test_moderate_noise_gives_partial_detection(self):
        cfg = PerturbConfig(xy_noise_sigma=0.6, seed=0)
        for seed in range(20):
            scene = perturb_predictions(generate_synthetic_scene(seed), cfg)
            score = det_l(scene.pred_centerlines, scene.gt_centerlines)
            assert 0.0 < score < 1.0

    def test_from_dict(self):
        cfg = PerturbConfig.from_dict({"xy_noise_sigma": "0.25", "seed": 3})
        assert cfg == PerturbConfig(xy_noise_sigma=0.25, seed=3)

    @pytest.mark.parametrize("data", [{"sigma": 1.0}, {"drop_rate": "many"}, {"drop_rate": 2.0},
                                      {"false_positive_rate": 2.0}, [1, 2]])
    def test_from_dict_rejects(self, data):
        with pytest.raises(ConfigurationError):
            PerturbConfig.from_dict(data)
