import json
import os
import tempfile
import unittest
from unittest import mock
import numpy as np
import numpy.testing as nt

from hunterforge.tools.errors import ManifestError
from hunterforge.geometry_core import PointCloud, SourceTag, NO_INSTANCE, BBox3D, write_bin
from hunterforge.range_view import LidarSpec, backproject, project
from hunterforge.lidar_sim import humanoid_pool
from hunterforge.ground_seg import GroundModel, RansacConfig
from hunterforge.scene_forge import (
    InsertionConfig,
    HumanLabel,
    InsertedInstance,
    SynthFrame,
    try_insert,
    Manifest,
    synthesize_frame,
    validate_frame,
    plan_corpus,
    corpus_generate,
    load_scene,
    visualize_synth_frame,
)
from hunterforge.cli_io.toy_dataset import floor_image, FLOOR_HEIGHT

SPEC = LidarSpec.toy()
POOL = humanoid_pool(3, np.random.default_rng(0), resolution=6)


def floor_scene(max_range: float = 20.0):
    scene = backproject(floor_image(SPEC))
    near = np.linalg.norm(scene.points, axis=1) <= max_range
    ground = GroundModel(ground_indices=np.flatnonzero(near), ground_points=scene.points[near])
    return PointCloud(scene.points), ground


def manifest_dict(n_sequences=2, n_frames=3):
    return {
        "name": "tiny",
        "sequences": [
            {
                "name": f"s{s}",
                "frames": [{"id": f"s{s}_{t}", "cloud": f"clouds/s{s}_{t}.bin"} for t in range(n_frames)],
            }
            for s in range(n_sequences)
        ],
    }


class TestSynthesizeFrame(unittest.TestCase):
    def setUp(self):
        self.scene, self.ground = floor_scene()
        self.cfg = InsertionConfig(target_count=(2, 4))

    def test_frame_is_valid(self):
        for seed in range(3):
            frame = synthesize_frame(self.scene, POOL, self.ground, self.cfg, seed, SPEC, "base")
            prov = frame.provenance
            self.assertEqual(validate_frame(frame, self.cfg), [])
            self.assertEqual(prov.seed, seed)
            self.assertTrue(2 <= prov.target <= 4)
            self.assertLessEqual(len(frame.labels), prov.target)
            self.assertLessEqual(prov.failures, self.cfg.max_failures)
            self.assertEqual(prov.failures, sum(prov.rejections.values()))
            self.assertEqual(prov.attempts, len(frame.labels) + prov.failures)
            if len(frame.labels) < prov.target:
                self.assertEqual(prov.failures, self.cfg.max_failures)

    def test_point_tags(self):
        frame = synthesize_frame(self.scene, POOL, self.ground, self.cfg, 1, SPEC)
        c = frame.cloud
        ids = {l.instance_id for l in frame.labels}
        synthetic = c.source == SourceTag.SYNTHETIC
        self.assertEqual(set(np.unique(c.instance[synthetic]).tolist()), ids)
        nt.assert_equal(c.instance[~synthetic], NO_INSTANCE)
        for label in frame.labels:
            self.assertGreater(len(frame.instance_points(label.instance_id)), 0)
            self.assertLess(frame.occlusion(label), self.cfg.max_occlusion)

    def test_deterministic(self):
        a = synthesize_frame(self.scene, POOL, self.ground, self.cfg, 5, SPEC)
        b = synthesize_frame(self.scene, POOL, self.ground, self.cfg, 5, SPEC)
        nt.assert_equal(a.cloud.points, b.cloud.points)
        nt.assert_equal(a.cloud.instance, b.cloud.instance)
        self.assertEqual([l.box for l in a.labels], [l.box for l in b.labels])

    def test_iou_rejection(self):
        # every box overlaps every other box at IoU >= 0
        cfg = InsertionConfig(target_count=(3, 3), max_iou=0.0)
        frame = synthesize_frame(self.scene, POOL, self.ground, cfg, 2, SPEC)
        self.assertLessEqual(len(frame.labels), 1)
        if frame.labels:
            self.assertGreater(frame.provenance.rejections.get("iou", 0), 0)

    def test_no_ground(self):
        frame = synthesize_frame(self.scene, POOL, GroundModel(), self.cfg, 0, SPEC)
        self.assertEqual(frame.labels, [])
        self.assertEqual(len(frame.cloud), len(self.scene))
        nt.assert_equal(frame.cloud.source, SourceTag.SCENE)

    def test_zero_target(self):
        cfg = InsertionConfig(target_count=(0, 0))
        frame = synthesize_frame(self.scene, POOL, self.ground, cfg, 0, SPEC)
        self.assertEqual(frame.labels, [])
        self.assertEqual(frame.provenance.attempts, 0)

    def test_empty_pool(self):
        with self.assertRaises(ValueError):
            synthesize_frame(self.scene, [], self.ground, self.cfg, 0, SPEC)

    def test_save_load(self):
        frame = synthesize_frame(self.scene, POOL, self.ground, self.cfg, 3, SPEC, "base")
        with tempfile.TemporaryDirectory() as d:
            stem = os.path.join(d, "frame")
            frame.save(stem)
            loaded = SynthFrame.load(stem)
        nt.assert_allclose(loaded.cloud.points, frame.cloud.points, atol=1e-5)
        nt.assert_equal(loaded.cloud.source, frame.cloud.source)
        nt.assert_equal(loaded.cloud.instance, frame.cloud.instance)
        self.assertEqual(len(loaded.labels), len(frame.labels))
        for a, b in zip(loaded.labels, frame.labels):
            self.assertEqual(a.box, b.box)
            self.assertEqual(a.n_simulated, b.n_simulated)
        self.assertEqual(loaded.provenance.rejections, frame.provenance.rejections)
        self.assertEqual(loaded.provenance.frame_id, "base")


def single_point_ground(x: float, z: float = FLOOR_HEIGHT) -> GroundModel:
    return GroundModel(ground_indices=np.array([0]), ground_points=np.array([[x, 0.0, z]]))


class TestRejections(unittest.TestCase):
    def setUp(self):
        self.directions = SPEC.beam_directions().reshape(-1, 3)
        self.asset = POOL[0]

    def test_occluded_by_scene(self):
        # a shell of returns at 3 m hides everything behind it
        shell = PointCloud(3.0 * self.directions)
        ground = single_point_ground(8.0)
        scene_ri = project(shell.with_tags(SourceTag.SCENE), SPEC)
        result = try_insert(scene_ri, self.asset, ground, [], InsertionConfig(), np.random.default_rng(0))
        self.assertFalse(result.accepted)
        self.assertEqual(result.reason, "occlusion")
        self.assertEqual(result.occlusion, 1.0)
        self.assertIsNone(result.merged)

    def test_failure_budget(self):
        shell = PointCloud(3.0 * self.directions)
        cfg = InsertionConfig(target_count=(1, 1), max_failures=3)
        frame = synthesize_frame(shell, POOL, single_point_ground(8.0), cfg, 0, SPEC)
        prov = frame.provenance
        self.assertEqual(frame.labels, [])
        self.assertEqual(prov.failures, cfg.max_failures)
        self.assertEqual(prov.attempts, 3)
        self.assertEqual(prov.rejections, {"occlusion": 3})
        nt.assert_equal(frame.cloud.source, SourceTag.SCENE)

    def test_prior_instance_occluded(self):
        back = self.directions[self.directions[:, 0] < -0.1]
        scene_ri = project(PointCloud.tagged(3.0 * back, SourceTag.SCENE), SPEC)
        # an earlier instance sits behind the scene returns
        other_image = project(PointCloud.tagged(6.0 * back, SourceTag.SYNTHETIC, 0), SPEC)
        other = InsertedInstance(HumanLabel(BBox3D([-6.0, 0.0, -1.0], [0.6, 0.6, 1.7]), {}, 0, "other", other_image.n_occupied()), other_image)

        cfg = InsertionConfig()
        ground = single_point_ground(8.0)
        result = try_insert(scene_ri, self.asset, ground, [other], cfg, np.random.default_rng(1))
        self.assertFalse(result.accepted)
        self.assertEqual(result.reason, "prior-occlusion")
        self.assertEqual(result.occlusion, 0.0)

        # the same insertion is accepted without the earlier instance
        alone = try_insert(scene_ri, self.asset, ground, [], cfg, np.random.default_rng(1))
        self.assertTrue(alone.accepted)
        self.assertEqual(alone.instance.label.instance_id, 0)

    def test_no_returns(self):
        # a ground point beyond the sensor range leaves the human unseen
        ground = single_point_ground(SPEC.max_range + 20.0)
        scene_ri = project(PointCloud.empty(), SPEC)
        result = try_insert(scene_ri, self.asset, ground, [], InsertionConfig(), np.random.default_rng(2))
        self.assertFalse(result.accepted)
        self.assertEqual(result.reason, "no-returns")

class TestVisualization(unittest.TestCase):
    def test_visualization_api(self):
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        scene, ground = floor_scene()
        frame = synthesize_frame(scene, POOL, ground, InsertionConfig(target_count=(1, 2)), 0, SPEC, "base")
        fig, ax = visualize_synth_frame(frame, show=False, max_range=20.0)
        self.assertEqual(len(ax.patches), len(frame.labels))
        self.assertEqual(ax.get_title(), "base")
        plt.close(fig)


class TestInsertionConfig(unittest.TestCase):
    def test_validation(self):
        with self.assertRaises(ValueError):
            InsertionConfig(max_occlusion=0.0)
        with self.assertRaises(ValueError):
            InsertionConfig(max_iou=1.5)
        with self.assertRaises(ValueError):
            InsertionConfig(max_failures=0)
        with self.assertRaises(ValueError):
            InsertionConfig(target_count=(4, 2))


class TestManifest(unittest.TestCase):
    def test_from_dict(self):
        m = Manifest.from_dict(manifest_dict(), root="/data")
        self.assertEqual(m.n_frames(), 6)
        self.assertEqual(m.frame("s1_2").cloud.as_posix(), "/data/clouds/s1_2.bin")
        self.assertIsNone(m.frame("s0_0").labels)
        self.assertEqual(m.to_dict(), manifest_dict())
        with self.assertRaises(KeyError):
            m.frame("missing")

    def test_errors(self):
        d = manifest_dict()
        d["sequences"][1]["frames"][0]["id"] = "s0_0"
        with self.assertRaises(ManifestError):
            Manifest.from_dict(d)
        with self.assertRaises(ManifestError):
            Manifest.from_dict({"sequences": [{"frames": []}]})
        with self.assertRaises(ManifestError):
            Manifest.load("/nonexistent/manifest.json")

    def test_save_load(self):
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "manifest.json")
            with open(path, "w") as f:
                json.dump(manifest_dict(), f)
            m = Manifest.load(path)
            self.assertTrue(m.frame("s0_1").cloud.is_absolute())
            m.save(path)
            self.assertEqual(Manifest.load(path).to_dict(), manifest_dict())


class TestCorpus(unittest.TestCase):
    def test_plan(self):
        m = Manifest.from_dict(manifest_dict(3, 4))
        draws = plan_corpus(m, 50, 9)
        self.assertEqual([d.index for d in draws], list(range(50)))
        self.assertEqual(draws, plan_corpus(m, 50, 9))
        self.assertTrue(all(0 <= d.sequence < 3 and 0 <= d.frame < 4 for d in draws))
        self.assertEqual(len({d.sequence for d in draws}), 3)

    def test_plan_skips_empty_sequences(self):
        d = manifest_dict(2, 3)
        d["sequences"].insert(0, {"name": "empty", "frames": []})
        m = Manifest.from_dict(d)
        draws = plan_corpus(m, 30, 9)
        self.assertEqual(len(draws), 30)
        self.assertTrue(all(x.sequence in (1, 2) and 0 <= x.frame < 3 for x in draws))

        # without empty sequences the draws are unchanged
        plain = plan_corpus(Manifest.from_dict(manifest_dict(2, 3)), 30, 9)
        self.assertEqual([(x.sequence - 1, x.frame, x.seed) for x in draws], [(x.sequence, x.frame, x.seed) for x in plain])

        empty = Manifest.from_dict({"name": "none", "sequences": [{"name": "a", "frames": []}]})
        self.assertEqual(plan_corpus(empty, 5, 0), [])
        self.assertEqual(list(corpus_generate(empty, 5, InsertionConfig(), POOL, SPEC)), [])

    def test_generate(self):
        scene, ground = floor_scene()
        with tempfile.TemporaryDirectory() as d:
            os.makedirs(os.path.join(d, "clouds"))
            for s in range(2):
                for t in range(3):
                    write_bin(os.path.join(d, "clouds", f"s{s}_{t}.bin"), scene)
            # one frame is unreadable and skipped
            os.remove(os.path.join(d, "clouds", "s1_2.bin"))
            m = Manifest.from_dict(manifest_dict(), root=d)

            cfg = InsertionConfig(target_count=(1, 2))
            ransac = RansacConfig(detection_range=(-30.0, 30.0, -30.0, 30.0, -3.0, 3.0), voxel_size=(0.25, 0.25, 0.25))
            frames = list(corpus_generate(m, 6, cfg, POOL, SPEC, ransac, rng=4))
            again = list(corpus_generate(m, 6, cfg, POOL, SPEC, ransac, rng=4))

        draws = [x for x in plan_corpus(m, 6, 4) if (x.sequence, x.frame) != (1, 2)]
        self.assertEqual(len(frames), len(draws))
        for frame, other, draw in zip(frames, again, draws):
            base = f"s{draw.sequence}_{draw.frame}"
            self.assertEqual(frame.provenance.base_frame, base)
            self.assertEqual(frame.provenance.frame_id, f"{base}-{draw.index:06d}")
            self.assertEqual(frame.provenance.seed, draw.seed)
            nt.assert_equal(frame.cloud.points, other.cloud.points)

        self.assertEqual(list(corpus_generate(m, 0, cfg, POOL)), [])

    def test_scene_cache_bound(self):
        scene, _ = floor_scene()
        cfg = InsertionConfig(target_count=(1, 1))
        ransac = RansacConfig(detection_range=(-30.0, 30.0, -30.0, 30.0, -3.0, 3.0), voxel_size=(0.25, 0.25, 0.25))
        with tempfile.TemporaryDirectory() as d:
            os.makedirs(os.path.join(d, "clouds"))
            for s in range(2):
                for t in range(3):
                    write_bin(os.path.join(d, "clouds", f"s{s}_{t}.bin"), scene)
            m = Manifest.from_dict(manifest_dict(), root=d)

            with mock.patch("hunterforge.scene_forge.corpus.load_scene", wraps=load_scene) as loader:
                frames = list(corpus_generate(m, 8, cfg, POOL, SPEC, ransac, rng=6, scene_cache=1))
            reference = list(corpus_generate(m, 8, cfg, POOL, SPEC, ransac, rng=6))

        keys = [(x.sequence, x.frame) for x in plan_corpus(m, 8, 6)]
        changes = 1 + sum(a != b for a, b in zip(keys, keys[1:]))
        self.assertEqual(loader.call_count, changes)
        self.assertEqual(len(frames), len(reference))
        for a, b in zip(frames, reference):
            nt.assert_equal(a.cloud.points, b.cloud.points)

        with self.assertRaises(ValueError):
            list(corpus_generate(m, 2, cfg, POOL, SPEC, ransac, scene_cache=0))


if __name__ == "__main__":
    unittest.main()
