"""Stage-II: planar pose EKF over ``[x, y, v, theta]``.

Prediction integrates the unicycle model with the corrected forward
acceleration and the gyro yaw rate; the update fuses AHRS yaw and radar
forward speed, ``z = [theta_imu, v_r]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DtTooLarge, NonMonotonicTime, SingularInnovationCovariance
from .geometry import wrap_angle
from .kalman import joseph_update, symmetrize

MAX_DT = 0.1
MAX_S_CONDITION = 1e12

H = np.array([[0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0]])
H_SPEED = np.array([[0.0, 0.0, 1.0, 0.0]])

DEFAULT_INIT_COV = (1e-4, 1e-4, 1e-2, 1e-4)


@dataclass(frozen=True)
class Stage2State:
    x: float = 0.0
    y: float = 0.0
    v: float = 0.0
    theta: float = 0.0
    cov: np.ndarray = field(default_factory=lambda: np.diag(DEFAULT_INIT_COV))

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def vector(self):
        return np.array([self.x, self.y, self.v, self.theta])

    @classmethod
    def from_vector(cls, X, cov):
        return cls(float(X[0]), float(X[1]), float(X[2]), float(X[3]), cov)


@dataclass(frozen=True)
class Stage2Measurement:
    stamp: float
    theta_imu: float
    v_r: float
    r: np.ndarray  # 2x2, ordered like z = [theta, v]

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float).reshape(2, 2)
        if not np.allclose(r, r.T) or np.any(np.linalg.eigvalsh(r) <= 0):
            raise ValueError("measurement covariance must be symmetric positive definite")
        object.__setattr__(self, "r", r)


@dataclass(frozen=True)
class InnovationRecord:
    stamp: float
    nu: np.ndarray
    S: np.ndarray

    @property
    def nis(self):
        return float(self.nu @ np.linalg.solve(self.S, self.nu))


def process_noise(dt, q_pos, q_accel, q_gyro):
    """Diagonal Q for one step; each entry is a PSD times ``dt``."""
    return np.diag([q_pos * dt, q_pos * dt, q_accel * dt, q_gyro * dt])


def transition(X, a_cc, omega, dt):
    x, y, v, th = X
    return np.array([
        x + v * math.cos(th) * dt,
        y + v * math.sin(th) * dt,
        v + a_cc * dt,
        th + omega * dt,
    ])


def jacobian(X, dt):
    _, _, v, th = X
    c, s = math.cos(th), math.sin(th)
    return np.array([
        [1.0, 0.0, c * dt, -v * s * dt],
        [0.0, 1.0, s * dt, v * c * dt],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])


def predict(s: Stage2State, a_cc, omega, dt, q) -> Stage2State:
    if not dt > 0.0:
        raise NonMonotonicTime(f"stage-2 predict with dt={dt}")
    if dt > MAX_DT:
        raise DtTooLarge(f"stage-2 predict with dt={dt} > {MAX_DT}")
    X = s.vector
    F = jacobian(X, dt)
    cov = symmetrize(F @ s.cov @ F.T + q)
    return Stage2State.from_vector(transition(X, a_cc, omega, dt), cov)


def innovation(s: Stage2State, z: Stage2Measurement):
    return np.array([wrap_angle(z.theta_imu - s.theta), z.v_r - s.v])


def _apply(s, Hm, R, nu, stamp):
    S = Hm @ s.cov @ Hm.T + R
    if np.linalg.cond(S) > MAX_S_CONDITION:
        raise SingularInnovationCovariance(f"innovation covariance condition {np.linalg.cond(S):.3g}")
    X, P, S, _ = joseph_update(s.vector, s.cov, Hm, R, nu)
    return Stage2State.from_vector(X, P), InnovationRecord(stamp, nu, S)


def normalized_innovation(s: Stage2State, z: Stage2Measurement):
    """NIS of ``z`` against the predicted state, before any update."""
    nu = innovation(s, z)
    S = H @ s.cov @ H.T + z.r
    return float(nu @ np.linalg.solve(S, nu))


def update(s: Stage2State, z: Stage2Measurement):
    """Fuse one [yaw, speed] measurement. Returns ``(state, InnovationRecord)``."""
    return _apply(s, H, z.r, innovation(s, z), z.stamp)


def zero_velocity_update(s: Stage2State, sigma, stamp=0.0):
    """Pseudo-measurement v = 0 for idle periods without radar returns."""
    return _apply(s, H_SPEED, np.array([[sigma**2]]), np.array([-s.v]), stamp)
