import os
import tempfile
import unittest
import numpy as np
import numpy.testing as nt

from hunterforge.tools.errors import NoGroundError
from hunterforge.geometry_core import PointCloud
from hunterforge.ground_seg import (
    RansacConfig,
    Plane,
    GroundModel,
    partition_patches,
    check_constraints,
    seed_mask,
    segment_ground,
    sample_insertion_point,
)

FLOOR = -1.8
CFG = RansacConfig(detection_range=(-10.0, 10.0, -10.0, 10.0, -3.0, 3.0))


def floor_scene(rng: np.random.Generator, n_floor: int = 20000, n_clutter: int = 3000, tilt: float = 0.0):
    """Noisy floor plus box clutter; returns the cloud and the floor mask"""
    xy = rng.uniform(-10.0, 10.0, size=(n_floor, 2))
    z = FLOOR + np.tan(np.radians(tilt)) * xy[:, 0] + rng.normal(0.0, 0.01, n_floor)
    floor = np.column_stack([xy, z])

    centers = rng.uniform(-8.0, 8.0, size=(6, 2))
    blobs = []
    for c in centers:
        local = rng.uniform(-0.5, 0.5, size=(n_clutter // 6, 3)) * [1.0, 1.0, 3.0]
        blobs.append(local + [c[0], c[1], FLOOR + 1.8])
    clutter = np.vstack(blobs)

    points = np.vstack([floor, clutter])
    truth = np.zeros(len(points), dtype=bool)
    truth[:n_floor] = True
    return PointCloud(points), truth


class TestPatches(unittest.TestCase):
    def test_partition(self):
        points = np.array([[-10.0, 0.0, 0.0], [-5.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [20.0, 0.0, 0.0]])
        patches = partition_patches(PointCloud(points), CFG)
        by_index = {p.index: p.indices.tolist() for p in patches}
        # boundary points fall into the lower patch, out of range points are dropped
        self.assertEqual(by_index, {(0, 1): [0, 1], (1, 1): [2], (2, 1): [3]})
        self.assertEqual(patches[0].bounds, (-10.0, -5.0, -5.0, 0.0))
        self.assertEqual(partition_patches(PointCloud.empty(), CFG), [])

    def test_seed_mask(self):
        points = np.array([[0.01, 0.01, 0.0], [0.02, 0.02, 0.5], [0.5, 0.5, 1.0]])
        nt.assert_equal(seed_mask(points, (0.1, 0.1, 0.05)), [True, False, True])


class TestConstraints(unittest.TestCase):
    def setUp(self):
        self.plane = Plane(np.array([0.0, 0.0, 1.0]), 0.0)
        self.flat = np.column_stack([np.random.default_rng(0).uniform(0, 5, size=(100, 2)), np.zeros(100)])

    def below(self, n: int, depth: float):
        return np.vstack([self.flat, np.column_stack([np.ones((n, 2)), np.full(n, -depth)])])

    def test_accepts(self):
        ok, inliers = check_constraints(self.plane, self.below(10, 0.1), CFG)
        self.assertTrue(ok)
        self.assertEqual(int(inliers.sum()), 100)

    def test_rejects(self):
        # too many points below
        self.assertFalse(check_constraints(self.plane, self.below(30, 0.1), CFG)[0])
        # below points too deep
        self.assertFalse(check_constraints(self.plane, self.below(10, 0.5), CFG)[0])
        # too few inliers
        self.assertFalse(check_constraints(self.plane, self.flat[:40], CFG)[0])
        # too steep
        t = np.radians(30.0)
        steep = Plane(np.array([np.sin(t), 0.0, np.cos(t)]), 0.0)
        self.assertAlmostEqual(steep.tilt(), 30.0)
        self.assertFalse(check_constraints(steep, self.flat, CFG)[0])

    def test_config(self):
        with self.assertRaises(ValueError):
            RansacConfig(inlier_threshold=0.0)
        with self.assertRaises(ValueError):
            RansacConfig(detection_range=(1, 0, 0, 1, 0, 1))


class TestSegmentGround(unittest.TestCase):
    def test_floor_recovered(self):
        cloud, truth = floor_scene(np.random.default_rng(1))
        ground = segment_ground(cloud, CFG, rng=3)
        pred = np.zeros(len(cloud), dtype=bool)
        pred[ground.ground_indices] = True

        recall = np.sum(pred & truth) / np.sum(truth)
        precision = np.sum(pred & truth) / np.sum(pred)
        self.assertGreaterEqual(recall, 0.95)
        self.assertGreaterEqual(precision, 0.95)
        self.assertEqual(len(ground.patches), 16)
        nt.assert_allclose(ground.height_at([[1.0, 1.0], [-7.0, 4.0]]), FLOOR, atol=0.03)
        self.assertTrue(np.isnan(ground.height_at([[50.0, 0.0]])[0]))

    def test_steep_scene_has_no_ground(self):
        cloud, _ = floor_scene(np.random.default_rng(2), n_clutter=0, tilt=35.0)
        cfg = RansacConfig(detection_range=(-10.0, 10.0, -10.0, 10.0, -10.0, 10.0))
        ground = segment_ground(cloud, cfg, rng=0)
        self.assertTrue(ground.is_empty())
        with self.assertRaises(NoGroundError):
            sample_insertion_point(ground, np.random.default_rng(0))

    def test_deterministic(self):
        cloud, _ = floor_scene(np.random.default_rng(4), n_floor=5000, n_clutter=600)
        a = segment_ground(cloud, CFG, rng=11)
        b = segment_ground(cloud, CFG, rng=11)
        nt.assert_equal(a.ground_indices, b.ground_indices)
        nt.assert_equal(a.ground_points, cloud.points[a.ground_indices])

    def test_save_load(self):
        cloud, _ = floor_scene(np.random.default_rng(5), n_floor=5000, n_clutter=600)
        ground = segment_ground(cloud, CFG, rng=0)
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "ground.json")
            ground.save(path)
            loaded = GroundModel.load(path)
        nt.assert_equal(loaded.ground_indices, ground.ground_indices)
        nt.assert_allclose(loaded.ground_points, ground.ground_points)
        self.assertEqual(len(loaded.planes()), len(ground.planes()))
        for p, q in zip(loaded.planes(), ground.planes()):
            nt.assert_allclose(p.to_list(), q.to_list())


class TestInsertionPoint(unittest.TestCase):
    def test_samples_ground_points(self):
        rng = np.random.default_rng(6)
        points = np.column_stack([np.linspace(2.0, 20.0, 50), np.zeros(50), np.full(50, FLOOR)])
        ground = GroundModel(ground_indices=np.arange(50), ground_points=points)
        for _ in range(100):
            p = sample_insertion_point(ground, rng, band_width=0.5)
            self.assertTrue(np.any(np.all(points == p, axis=1)))

    def test_single_point(self):
        ground = GroundModel(ground_indices=np.array([0]), ground_points=np.array([[5.0, 0.0, FLOOR]]))
        nt.assert_equal(sample_insertion_point(ground, np.random.default_rng(0)), [5.0, 0.0, FLOOR])


if __name__ == "__main__":
    unittest.main()
