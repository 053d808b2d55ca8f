"""Least-squares body-frame ego-velocity from merged Doppler returns."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DegenerateGeometry, InsufficientTargets

# Doppler velocity resolution of the radars, used as a floor on the noise estimate.
DOPPLER_FLOOR = 0.03


@dataclass(frozen=True)
class DopplerSystem:
    los_rows: np.ndarray  # (N, 3), unit rows
    rhs: np.ndarray  # (N,), minus the Doppler

    def __len__(self):
        return len(self.rhs)


@dataclass(frozen=True)
class EgoVelocity:
    v: np.ndarray
    residual_rms: float
    condition: float
    n_targets: int
    # (H^T H)^-1, the unit-noise covariance of v
    normal_inverse: np.ndarray

    def covariance(self, floor=DOPPLER_FLOOR):
        """Covariance of ``v``, with the noise level taken as max(rms, floor)."""
        return max(self.residual_rms**2, floor**2) * self.normal_inverse

    def forward_variance(self, floor=DOPPLER_FLOOR):
        return float(self.covariance(floor)[0, 0])


def build_system(targets) -> DopplerSystem:
    """Stack one row per return: ``u_j^T v = -doppler_j`` for a static scene."""
    return DopplerSystem(np.asarray(targets.los, dtype=float).reshape(-1, 3),
                         -np.asarray(targets.doppler, dtype=float).reshape(-1))


def solve(sys: DopplerSystem, min_targets=3, max_condition=1e4) -> EgoVelocity:
    H, y = sys.los_rows, sys.rhs
    n = len(y)
    if n < min_targets:
        raise InsufficientTargets(f"{n} targets, need at least {min_targets}")
    HtH = H.T @ H
    eig = np.linalg.eigvalsh(HtH)
    if eig[0] <= np.finfo(float).eps * max(eig[-1], 1.0) * 3:
        raise DegenerateGeometry(f"H^T H is singular (eigenvalues {eig})")
    condition = float(eig[-1] / eig[0])
    if condition > max_condition:
        raise DegenerateGeometry(f"condition number {condition:.3g} exceeds {max_condition:.3g}")

    # QR instead of forming (H^T H)^-1 H^T y explicitly
    Q, R = np.linalg.qr(H)
    v = solve_triangular(R, Q.T @ y)
    r = H @ v - y
    Rinv = solve_triangular(R, np.eye(3))
    return EgoVelocity(
        v=v,
        residual_rms=float(math.sqrt(r @ r / n)),
        condition=condition,
        n_targets=n,
        normal_inverse=Rinv @ Rinv.T,
    )


def forward_speed(v: EgoVelocity) -> float:
    return float(v.v[0])
