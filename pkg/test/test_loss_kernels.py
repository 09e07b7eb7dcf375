import unittest
import numpy as np
import numpy.testing as nt

from hunterforge.tools.errors import EmptyBatchError, ShapeMismatchError
from hunterforge.geometry_core import BBox3D
from hunterforge.supervision import BevGrid, Mask, HeatmapGrid
from hunterforge.loss_kernels import (
    LossConfig,
    FeatureRole,
    FeatureBatch,
    heatmap_loss,
    bbox_loss,
    total_loss,
    align_loss,
    gather_features,
)


def numeric_gradient(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar function of an array"""
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        step = np.zeros_like(x)
        step[idx] = h
        grad[idx] = (f(x + step) - f(x - step)) / (2.0 * h)
    return grad


def _near_unit(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    """Random rows with norms on both sides of 1"""
    v = rng.normal(size=(n, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * rng.uniform(0.5, 1.5, size=(n, 1))

class TestHeatmapLoss(unittest.TestCase):
    def test_examples(self):
        ln2 = np.log(2.0)
        one = np.ones((1, 1), dtype=bool)
        self.assertAlmostEqual(heatmap_loss([[0.5]], [[1.0]], one).value, 0.25 * ln2)
        self.assertAlmostEqual(heatmap_loss([[0.5]], [[0.0]], one).value, 0.25 * ln2)
        self.assertAlmostEqual(heatmap_loss([[0.5]], [[0.5]], one).value, 0.25 * 0.0625 * ln2)
        self.assertEqual(heatmap_loss([[0.5]], [[1.0]], ~one).value, 0.0)

        # perfect predictions cost nothing
        self.assertAlmostEqual(heatmap_loss([[1.0, 0.0]], [[1.0, 0.0]], np.ones((1, 2), bool)).value, 0.0)

    def test_mask_and_grid_types(self):
        grid = BevGrid(0.0, 2.0, 0.0, 2.0, 1.0)
        y = HeatmapGrid(grid, [[1.0, 0.2], [0.0, 0.5]])
        M = Mask(grid, [[True, False], [True, True]])
        x = np.full((2, 2), 0.3)
        result = heatmap_loss(x, y, M)
        self.assertEqual(result.value, heatmap_loss(x, y.raster, M.raster).value)
        self.assertEqual(result.grads["x"][0, 1], 0.0)

    def test_gradient(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            shape = tuple(rng.integers(1, 5, size=2))
            x = rng.uniform(0.05, 0.95, size=shape)
            y = rng.uniform(0.0, 1.0, size=shape)
            y[rng.uniform(size=shape) < 0.2] = 1.0
            m = rng.uniform(size=shape) < 0.7
            cfg = LossConfig(beta1=rng.uniform(1.0, 3.0), beta2=rng.uniform(2.0, 5.0))
            grad = heatmap_loss(x, y, m, cfg).grads["x"]
            numeric = numeric_gradient(lambda v: heatmap_loss(v, y, m, cfg).value, x)
            nt.assert_allclose(grad, numeric, rtol=1e-5, atol=1e-7)

    def test_out_of_range_predictions(self):
        one = np.ones((1, 1), dtype=bool)
        for x, y in ((1.2, 0.0), (-0.3, 1.0), (1.5, 0.4)):
            result = heatmap_loss([[x]], [[y]], one)
            self.assertTrue(np.isfinite(result.value))
            self.assertGreaterEqual(result.value, 0.0)
            nt.assert_equal(result.grads["x"], [[0.0]])

        # clipped to the nearest valid prediction
        self.assertEqual(heatmap_loss([[1.4]], [[1.0]], one).value, heatmap_loss([[1.0]], [[1.0]], one).value)
        self.assertEqual(heatmap_loss([[-2.0]], [[0.0]], one).value, 0.0)

    def test_non_negative(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            x = rng.uniform(size=(5, 5))
            y = rng.uniform(size=(5, 5))
            self.assertGreaterEqual(heatmap_loss(x, y, np.ones((5, 5), bool)).value, 0.0)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeMismatchError):
            heatmap_loss(np.zeros((2, 2)), np.zeros((2, 3)), np.ones((2, 2), bool))


class TestBBoxLoss(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(bbox_loss([[1.0, 2.0]], [[0.0, 0.0]]).value, 5.0)
        self.assertEqual(bbox_loss(np.empty((0, 7)), np.empty((0, 7))).value, 0.0)
        with self.assertRaises(ShapeMismatchError):
            bbox_loss(np.zeros((2, 7)), np.zeros((3, 7)))

    def test_gradient(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            k = int(rng.integers(1, 7))
            pred, gt = rng.normal(size=(k, 7)), rng.normal(size=(k, 7))
            grad = bbox_loss(pred, gt).grads["pred"]
            numeric = numeric_gradient(lambda p: bbox_loss(p, gt).value, pred)
            nt.assert_allclose(grad, numeric, rtol=1e-5, atol=1e-8)

    def test_total(self):
        hm = heatmap_loss([[0.5]], [[1.0]], np.ones((1, 1), bool))
        box = bbox_loss([[1.0, 2.0]], [[0.0, 0.0]])
        total = total_loss(hm, box)
        self.assertAlmostEqual(total.value, hm.value + 5.0)
        self.assertEqual(set(total.grads), {"x", "pred"})
        self.assertEqual(total.components["bbox"], 5.0)


class TestAlignLoss(unittest.TestCase):
    def test_hand_case(self):
        result = align_loss([[2.0]], [[0.0]], LossConfig(delta_var=0.0))
        self.assertAlmostEqual(result.components["L_s2r"], 4.0)
        self.assertAlmostEqual(result.components["L_norm"], 2.0)
        self.assertAlmostEqual(result.value, 6.0)
        # the zero-norm real feature has no norm gradient
        nt.assert_array_almost_equal(result.grads["F_r"], [[-4.0]])

    def test_unit_features(self):
        F = np.array([[1.0, 0.0], [0.0, 1.0]])
        result = align_loss(F, F.copy())
        self.assertEqual(result.value, 0.0)
        nt.assert_equal(result.grads["F_s"], np.zeros((2, 2)))

    def test_gradient(self):
        rng = np.random.default_rng(3)
        checked = 0
        while checked < 200:
            dim = int(rng.integers(8, 65))
            fs = _near_unit(rng, int(rng.integers(1, 4)), dim)
            fr = _near_unit(rng, int(rng.integers(1, 4)), dim)
            cfg = LossConfig(beta3=rng.uniform(0.5, 2.0), beta4=rng.uniform(0.5, 2.0), delta_var=0.1)
            gaps = np.abs(1.0 - np.linalg.norm(np.vstack([fs, fr]), axis=1)) - cfg.delta_var
            if np.min(np.abs(gaps)) < 1e-5:
                continue
            result = align_loss(fs, fr, cfg)
            numeric_s = numeric_gradient(lambda v: align_loss(v, fr, cfg).value, fs)
            numeric_r = numeric_gradient(lambda v: align_loss(fs, v, cfg).value, fr)
            nt.assert_allclose(result.grads["F_s"], numeric_s, rtol=1e-5, atol=1e-8)
            nt.assert_allclose(result.grads["F_r"], numeric_r, rtol=1e-5, atol=1e-8)
            checked += 1

    def test_gradient_at_kink(self):
        # both norms sit exactly on the slack boundary
        cfg = LossConfig(beta3=0.0, beta4=1.0, delta_var=0.5)
        fs = np.zeros((1, 8))
        fs[0, 0] = 1.5
        fr = np.zeros((1, 8))
        fr[0, 0] = 0.5
        result = align_loss(fs, fr, cfg)
        self.assertEqual(result.value, 0.0)
        nt.assert_equal(result.grads["F_s"], np.zeros((1, 8)))
        nt.assert_equal(result.grads["F_r"], np.zeros((1, 8)))

        h = 1e-6
        for key, f in (("F_s", lambda v: align_loss(v, fr, cfg).value), ("F_r", lambda v: align_loss(fs, v, cfg).value)):
            base = fs if key == "F_s" else fr
            for idx in np.ndindex(base.shape):
                step = np.zeros_like(base)
                step[idx] = h
                forward = (f(base + step) - f(base)) / h
                backward = (f(base) - f(base - step)) / h
                self.assertLess(abs(forward - result.grads[key][idx]), 1e-5)
                self.assertLess(abs(backward - result.grads[key][idx]), 1e-5)

    def test_errors(self):
        with self.assertRaises(EmptyBatchError):
            align_loss(np.empty((0, 3)), np.ones((2, 3)))
        with self.assertRaises(ShapeMismatchError):
            align_loss(np.ones((2, 3)), np.ones((2, 4)))
        with self.assertRaises(ShapeMismatchError):
            FeatureBatch(np.zeros((2, 2, 2)))
        with self.assertRaises(ValueError):
            LossConfig(beta1=-1.0)


class TestGather(unittest.TestCase):
    def test_center_cells(self):
        grid = BevGrid(0.0, 4.0, 0.0, 4.0, 1.0)
        fmap = np.arange(2 * 4 * 4, dtype=float).reshape(2, 4, 4)
        boxes = [BBox3D([0.5, 2.5, 0.8], [0.6, 0.6, 1.7]), BBox3D([9.0, 0.0, 0.8], [0.6, 0.6, 1.7])]
        batch = gather_features(fmap, boxes, grid, FeatureRole.REAL)
        self.assertEqual(len(batch), 1)
        self.assertEqual(batch.role, FeatureRole.REAL)
        nt.assert_equal(batch.vectors, [[fmap[0, 0, 2], fmap[1, 0, 2]]])

        self.assertEqual(gather_features(fmap, [], grid).dim, 2)
        with self.assertRaises(ValueError):
            gather_features(np.zeros((2, 3, 3)), boxes, grid)


if __name__ == "__main__":
    unittest.main()
