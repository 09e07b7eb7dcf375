from __future__ import annotations
from dataclasses import dataclass

import numpy as np
from filterpy.kalman import predict as kf_predict, update as kf_update

from hunterforge.tools.types import R10x10, NDArray
from hunterforge.tools.utils import wrap_angle
from hunterforge.geometry_core import BBox3D, DIM_FLOOR

# state: x, y, z, l, w, h, yaw, vx, vy, vz
DIM_X = 10
DIM_Z = 7
PSD_TOL = 1e-9


def transition_matrix(dt: float) -> R10x10:
    F = np.eye(DIM_X)
    F[0, 7] = F[1, 8] = F[2, 9] = dt
    return F


def measurement_matrix() -> NDArray:
    return np.eye(DIM_Z, DIM_X)


def wrap_innovation(delta):
    """Wrap an angle difference to (-pi, pi]"""
    return -wrap_angle(-np.asarray(delta))


@dataclass(frozen=True, eq=False)
class TrackState:
    """Constant-velocity box state and its covariance"""

    x: NDArray
    P: R10x10

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64).reshape(DIM_X)
        P = np.asarray(self.P, dtype=np.float64).reshape(DIM_X, DIM_X)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "P", 0.5 * (P + P.T))

    @classmethod
    def from_box(cls, box: BBox3D, cfg) -> TrackState:
        x = np.zeros(DIM_X)
        x[:7] = box.to_array()
        P = np.diag([cfg.measurement_noise] * DIM_Z + [cfg.initial_velocity_var] * 3)
        return cls(x, P)

    @property
    def velocity(self) -> NDArray:
        return self.x[7:10]

    def box(self) -> BBox3D:
        return BBox3D(self.x[0:3], np.maximum(self.x[3:6], DIM_FLOOR), float(self.x[6]))

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        return bool(
            np.allclose(self.P, self.P.T, atol=tol) and np.linalg.eigvalsh(self.P).min() >= -tol
        )


def process_noise(cfg, dt: float) -> R10x10:
    return np.diag([cfg.process_noise_pos] * DIM_Z + [cfg.process_noise_vel] * 3) * dt


def predict(state: TrackState, cfg, dt: float = 1.0):
    """Propagate a state ``dt`` frames with the constant-velocity model

    :return: the predicted box and the predicted state
    """
    if dt < 1:
        raise ValueError("dt must be at least one frame")
    x, P = kf_predict(state.x, state.P, transition_matrix(dt), process_noise(cfg, dt))
    x[6] = wrap_angle(x[6])
    predicted = TrackState(x, P)
    return predicted.box(), predicted


def update(state: TrackState, detection, cfg) -> TrackState:
    """Linear measurement update with the detection's box

    The yaw innovation is wrapped to (-pi, pi] before the update.
    """
    z = detection.box.to_array()
    z[6] = state.x[6] + wrap_innovation(z[6] - state.x[6])
    R = np.eye(DIM_Z) * cfg.measurement_noise
    x, P = kf_update(state.x, state.P, z, R, measurement_matrix())
    x = np.asarray(x, dtype=np.float64).reshape(DIM_X)
    x[6] = wrap_angle(x[6])
    return TrackState(x, P)
