import json
import os
import tempfile
import unittest
import numpy as np
import numpy.testing as nt

from hunterforge.tools.errors import FrameMismatchError
from hunterforge.geometry_core import BBox3D
from hunterforge.track_filter import Detection, DetectionFrame
from hunterforge.eval_metrics import (
    EvalConfig,
    MetricsReport,
    circle_nms,
    match_frame,
    average_precision,
    evaluate,
    RECALL_POINTS,
)


def person(x: float, y: float) -> BBox3D:
    return BBox3D([x, y, 0.85], [0.6, 0.6, 1.7])


def det(x: float, y: float, score: float, index: int = 0) -> Detection:
    return Detection(0, person(x, y), score, index)


def brute_force_ap(tp, scores, n_gt):
    """101-point interpolated AP written out with plain loops"""
    ranked = sorted(zip(scores, range(len(tp)), tp), key=lambda s: (-s[0], s[1]))
    precisions, recalls, hits = [], [], 0
    for k, (_, _, flag) in enumerate(ranked, start=1):
        hits += int(flag)
        precisions.append(hits / k)
        recalls.append(hits / n_gt)
    total = 0.0
    for r in RECALL_POINTS:
        best = 0.0
        for p, rec in zip(precisions, recalls):
            if rec >= r:
                best = max(best, p)
        total += best
    return total / len(RECALL_POINTS)


class TestAveragePrecision(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(average_precision([True, True], [0.9, 0.8], 2), (1.0, "ok"))
        ap, _ = average_precision([False, True], [0.9, 0.8], 1)
        self.assertAlmostEqual(ap, 0.5)
        self.assertEqual(average_precision([], [], 3), (0.0, "ok"))
        self.assertEqual(average_precision([], [], 0), (0.0, "empty"))
        self.assertEqual(average_precision([False], [0.5], 0), (0.0, "no-ground-truth"))

    def test_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(1, 30))
            tp = rng.uniform(size=n) < 0.6
            scores = np.round(rng.uniform(size=n), 2)
            n_gt = int(tp.sum() + rng.integers(0, 5))
            if n_gt == 0:
                continue
            ap, status = average_precision(tp, scores, n_gt)
            self.assertEqual(status, "ok")
            self.assertAlmostEqual(ap, brute_force_ap(tp, scores, n_gt), places=9)
            self.assertTrue(0.0 <= ap <= 1.0)


class TestMatching(unittest.TestCase):
    def test_nearest_unmatched(self):
        gts = [person(0.0, 0.0), person(0.4, 0.0)]
        dets = [det(0.3, 0.0, 0.9), det(0.1, 0.0, 0.8), det(0.2, 0.0, 0.7)]
        nt.assert_equal(match_frame(dets, gts, 0.5), [True, True, False])

    def test_strict_threshold(self):
        nt.assert_equal(match_frame([det(0.5, 0.0, 0.9)], [person(0.0, 0.0)], 0.5), [False])
        nt.assert_equal(match_frame([det(0.49, 0.0, 0.9)], [person(0.0, 0.0)], 0.5), [True])
        nt.assert_equal(match_frame([], [person(0.0, 0.0)], 0.5), np.zeros(0, bool))


class TestCircleNMS(unittest.TestCase):
    def test_examples(self):
        dets = [det(0.0, 0.0, 0.5, 0), det(0.1, 0.0, 0.9, 1), det(1.0, 0.0, 0.7, 2)]
        kept = circle_nms(dets, 0.2)
        self.assertEqual([d.index for d in kept], [1, 2])
        self.assertEqual(len(circle_nms(dets, 0.0)), 3)

    def test_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = int(rng.integers(0, 25))
            dets = [det(*rng.uniform(-1, 1, 2), float(rng.uniform()), k) for k in range(n)]
            kept = circle_nms(dets, 0.3)

            # quadratic reference: scan by rank, drop anything near a kept center
            ranked = sorted(dets, key=lambda d: (-d.score, d.index))
            expected = []
            for d in ranked:
                if all(np.hypot(*(d.center[:2] - e.center[:2])) >= 0.3 for e in expected):
                    expected.append(d)
            self.assertEqual([d.index for d in kept], [d.index for d in expected])
            for a in kept:
                for b in kept:
                    if a is not b:
                        self.assertGreaterEqual(np.hypot(*(a.center[:2] - b.center[:2])), 0.3)


class TestEvaluate(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(2)
        self.gts = {f"f{t}": [person(*rng.uniform(-20, 20, 2)) for _ in range(int(rng.integers(0, 5)))] for t in range(8)}

    def test_perfect(self):
        dets = {fid: [Detection(0, b, 1.0, k) for k, b in enumerate(boxes)] for fid, boxes in self.gts.items()}
        report = evaluate(dets, self.gts)
        self.assertAlmostEqual(report.mAP, 1.0)
        self.assertAlmostEqual(report.mPrec, 1.0)
        self.assertAlmostEqual(report.mRecall, 1.0)
        self.assertAlmostEqual(report.thresholded_mRecall, 1.0)
        self.assertEqual(report.n_frames, 8)
        self.assertEqual(report.n_gt, report.n_det)

    def test_no_detections(self):
        report = evaluate({fid: [] for fid in self.gts}, self.gts)
        self.assertEqual(report.mAP, 0.0)
        self.assertEqual(report.mRecall, 0.0)
        self.assertEqual(report.mPrec, 0.0)

    def test_hand_case(self):
        dets = {"a": [det(3.0, 0.0, 0.9, 0), det(0.1, 0.0, 0.8, 1)], "b": [det(5.0, 5.0, 0.4, 0)]}
        gts = {"a": [person(0.0, 0.0)], "b": [person(5.0, 5.2)]}
        report = evaluate(dets, gts, EvalConfig(thresholds=(0.5,)))
        s = report.per_threshold[0]
        # ranking FP(0.9), TP(0.8), TP(0.4): the best precision at any recall is 2/3
        self.assertAlmostEqual(s.ap, 2.0 / 3.0)
        self.assertAlmostEqual(s.precision, 2.0 / 3.0)
        self.assertAlmostEqual(s.recall, 1.0)
        self.assertAlmostEqual(s.thresholded_precision, 0.5)
        self.assertAlmostEqual(s.thresholded_recall, 0.5)
        self.assertEqual(report.ap(0.5), s.ap)
        with self.assertRaises(KeyError):
            report.ap(4.0)

    def test_range_and_nms(self):
        dets = {"a": [det(0.0, 0.0, 0.9, 0), det(0.05, 0.0, 0.8, 1), det(40.0, 0.0, 0.9, 2)]}
        gts = {"a": [person(0.0, 0.0), person(40.0, 0.0)]}
        cfg = EvalConfig(apply_nms=True, detection_range=(-30, 30, -30, 30, -3, 3))
        report = evaluate(dets, gts, cfg)
        self.assertEqual(report.n_gt, 1)
        self.assertEqual(report.n_det, 1)
        self.assertAlmostEqual(report.mAP, 1.0)

    def test_frame_mismatch(self):
        with self.assertRaises(FrameMismatchError):
            evaluate({"a": []}, {"b": []})
        frames = [DetectionFrame("a"), DetectionFrame("a")]
        with self.assertRaises(FrameMismatchError):
            evaluate(frames, {"a": []})

    def test_frames_and_report(self):
        frames = [DetectionFrame("a", [det(0.0, 0.0, 0.9)]), DetectionFrame("b")]
        gts = [DetectionFrame("a", [det(0.1, 0.0, 1.0)]), DetectionFrame("b")]
        report = evaluate(frames, gts)
        self.assertAlmostEqual(report.mAP, 1.0)
        self.assertIn("mAP", report.format_table())
        self.assertIn("AP(0.25)", str(report))
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "report.json")
            report.to_json(path)
            with open(path) as f:
                loaded = json.load(f)
        self.assertEqual(loaded["n_gt"], 1)
        self.assertEqual(len(loaded["per_threshold"]), 3)
        self.assertIsInstance(report, MetricsReport)

    def test_config(self):
        with self.assertRaises(ValueError):
            EvalConfig(thresholds=(1.0, 0.5))
        with self.assertRaises(ValueError):
            EvalConfig(thresholds=(0.0,))
        with self.assertRaises(ValueError):
            EvalConfig(nms_radius=-1.0)


if __name__ == "__main__":
    unittest.main()
