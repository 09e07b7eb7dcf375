from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Union

import numpy as np

from hunterforge.tools.types import NDArray, FloatRaster
from hunterforge.tools.errors import EmptyBatchError, ShapeMismatchError
from hunterforge.supervision import Mask, HeatmapGrid


@dataclass
class LossConfig:
    """Loss weights

    :param beta1: focal exponent on the prediction
    :param beta2: focal exponent on the target
    :param eps: guard inside the logarithms
    :param beta3: weight of the mean-feature alignment term
    :param beta4: weight of the feature norm term
    :param delta_var: allowed deviation of a feature norm from 1
    """

    beta1: float = 2.0
    beta2: float = 4.0
    eps: float = 1e-12
    beta3: float = 1.0
    beta4: float = 1.0
    delta_var: float = 0.1

    def __post_init__(self):
        if min(self.beta1, self.beta2, self.beta3, self.beta4, self.delta_var) < 0.0:
            raise ValueError("loss weights must be non-negative")
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")


@dataclass
class LossResult:
    """A scalar loss with its gradient per differentiable input"""

    value: float
    grads: Dict[str, NDArray] = field(default_factory=dict)
    components: Dict[str, float] = field(default_factory=dict)


class FeatureRole(str, Enum):
    SYNTHETIC = "synthetic"
    REAL = "real"


@dataclass(frozen=True, eq=False)
class FeatureBatch:
    """Feature vectors of one role, (n, d)"""

    vectors: NDArray
    role: FeatureRole = FeatureRole.SYNTHETIC

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2:
            raise ShapeMismatchError("feature batch must be (n, d)")
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "role", FeatureRole(self.role))

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def _raster(a: Union[Mask, HeatmapGrid, NDArray]) -> NDArray:
    return a.raster if isinstance(a, (Mask, HeatmapGrid)) else np.asarray(a)


def _power(base: NDArray, exponent: float) -> NDArray:
    """base**exponent with 0**0 = 1 and non-positive powers of 0 taken as 0"""
    if exponent == 0.0:
        return np.ones_like(base)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.power(base, exponent)
    return np.where(base == 0.0, 0.0, out) if exponent < 0.0 else out


def heatmap_loss(x, y, M_star, cfg: Optional[LossConfig] = None) -> LossResult:
    """Focal heatmap loss restricted to the training mask

    Per cell the loss is 0 outside the mask, ``-(1-x)^b1 ln(x+eps)`` at target
    centers (y exactly 1) and ``-x^b1 (1-y)^b2 ln(1-x+eps)`` elsewhere. The
    value is the sum over the grid. Predictions outside [0, 1] are clipped
    and get a zero gradient.

    :param x: predicted heatmap
    :param y: target heatmap
    :param M_star: training mask
    :param cfg: exponents and log guard
    :type cfg: LossConfig, optional
    :raises ShapeMismatchError: if the three rasters differ in shape
    :return: the loss with gradient ``"x"``
    :rtype: LossResult
    """
    cfg = cfg or LossConfig()
    x = np.asarray(_raster(x), dtype=np.float64)
    y = np.asarray(_raster(y), dtype=np.float64)
    m = np.asarray(_raster(M_star), dtype=bool)
    if not (x.shape == y.shape == m.shape):
        raise ShapeMismatchError(f"heatmap shapes {x.shape}, {y.shape}, {m.shape} differ")
    outside = (x < 0.0) | (x > 1.0)
    x = np.clip(x, 0.0, 1.0)
    y = np.clip(y, 0.0, 1.0)

    b1, b2, eps = cfg.beta1, cfg.beta2, cfg.eps
    pos = m & (y == 1.0)
    neg = m & ~pos

    log_pos = np.log(np.where(pos, x, 1.0) + eps)
    one_minus = 1.0 - x
    loss_pos = -_power(one_minus, b1) * log_pos
    grad_pos = b1 * _power(one_minus, b1 - 1.0) * log_pos - _power(one_minus, b1) / (np.where(pos, x, 1.0) + eps)

    log_neg = np.log(np.where(neg, one_minus, 1.0) + eps)
    weight = _power(1.0 - y, b2)
    loss_neg = -_power(x, b1) * weight * log_neg
    grad_neg = -weight * (
        b1 * _power(x, b1 - 1.0) * log_neg - _power(x, b1) / (np.where(neg, one_minus, 1.0) + eps)
    )

    loss = np.where(pos, loss_pos, 0.0) + np.where(neg, loss_neg, 0.0)
    grad = np.where(pos, grad_pos, 0.0) + np.where(neg, grad_neg, 0.0)
    grad = np.where(outside, 0.0, grad)
    return LossResult(float(loss.sum()), {"x": grad})


def bbox_loss(pred, gt) -> LossResult:
    """Mean squared L2 distance between matched box parameter vectors

    :raises ShapeMismatchError: on different cardinality or parameterization
    :return: the loss with gradient ``"pred"``
    :rtype: LossResult
    """
    pred = np.atleast_2d(np.asarray(pred, dtype=np.float64))
    gt = np.atleast_2d(np.asarray(gt, dtype=np.float64))
    if pred.shape != gt.shape:
        raise ShapeMismatchError(f"box sets {pred.shape} and {gt.shape} differ")
    k = pred.shape[0]
    if k == 0:
        return LossResult(0.0, {"pred": np.zeros_like(pred)})
    diff = pred - gt
    return LossResult(float(np.sum(diff * diff) / k), {"pred": 2.0 * diff / k})


def total_loss(hm: LossResult, box: LossResult) -> LossResult:
    """L = L_hm + L_bbox with both gradient sets carried over"""
    return LossResult(
        hm.value + box.value,
        {**hm.grads, **box.grads},
        {"heatmap": hm.value, "bbox": box.value},
    )


def _norm_term(f: NDArray, delta_var: float):
    """mean ReLU(|1 - |f|| - delta)^2 over the rows of f, with its gradient"""
    n = f.shape[0]
    norms = np.linalg.norm(f, axis=1)
    gap = np.abs(1.0 - norms) - delta_var
    active = gap > 0.0
    value = float(np.sum(np.where(active, gap, 0.0) ** 2) / n)

    safe = np.where(norms > 0.0, norms, 1.0)
    coef = np.where(active & (norms > 0.0), 2.0 * gap * np.sign(norms - 1.0) / safe, 0.0) / n
    return value, coef[:, None] * f


def align_loss(F_s, F_r, cfg: Optional[LossConfig] = None) -> LossResult:
    """Synthetic-to-real feature alignment

    ``L_s2r`` is the squared distance between the batch means, ``L_norm``
    keeps every feature norm within ``delta_var`` of 1 and
    ``L_S2R = beta3 L_s2r + beta4 L_norm``. Gradients are taken of ``L_S2R``;
    at the kink of the ReLU and at zero norm they are zero.

    :param F_s: synthetic features
    :type F_s: FeatureBatch or array
    :param F_r: real features
    :type F_r: FeatureBatch or array
    :param cfg: weights and norm slack
    :type cfg: LossConfig, optional
    :raises EmptyBatchError: if a batch is empty
    :raises ShapeMismatchError: if the feature dimensions differ
    :return: ``L_S2R`` with gradients ``"F_s"`` and ``"F_r"`` and the three
        components
    :rtype: LossResult
    """
    cfg = cfg or LossConfig()
    F_s = F_s if isinstance(F_s, FeatureBatch) else FeatureBatch(F_s, FeatureRole.SYNTHETIC)
    F_r = F_r if isinstance(F_r, FeatureBatch) else FeatureBatch(F_r, FeatureRole.REAL)
    if len(F_s) == 0 or len(F_r) == 0:
        raise EmptyBatchError("alignment needs nonempty synthetic and real batches")
    if F_s.dim != F_r.dim:
        raise ShapeMismatchError(f"feature dimensions {F_s.dim} and {F_r.dim} differ")

    fs, fr = F_s.vectors, F_r.vectors
    ns, nr = fs.shape[0], fr.shape[0]
    diff = fs.mean(axis=0) - fr.mean(axis=0)
    l_s2r = float(np.sum(diff * diff))
    g_s2r_s = np.broadcast_to(2.0 * diff / ns, fs.shape)
    g_s2r_r = np.broadcast_to(-2.0 * diff / nr, fr.shape)

    norm_s, g_norm_s = _norm_term(fs, cfg.delta_var)
    norm_r, g_norm_r = _norm_term(fr, cfg.delta_var)
    l_norm = norm_s + norm_r

    l_total = cfg.beta3 * l_s2r + cfg.beta4 * l_norm
    return LossResult(
        l_total,
        {
            "F_s": cfg.beta3 * g_s2r_s + cfg.beta4 * g_norm_s,
            "F_r": cfg.beta3 * g_s2r_r + cfg.beta4 * g_norm_r,
        },
        {"L_s2r": l_s2r, "L_norm": l_norm, "L_S2R": l_total},
    )
